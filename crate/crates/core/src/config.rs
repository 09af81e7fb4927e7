//! Run configuration: flat `key = value` text grouped in `[section]`s.
//!
//! Unknown sections and keys are errors. `to_text` followed by `parse`
//! reproduces the configuration exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{ConvergenceConfig, DecayConfig, Setup};
use crate::error::{Error, Result};
use crate::evolution::{EvolveConfig, InitialCondition};
use crate::hypo::{PenaltyConfig, PenaltyMode, Scheme};
use crate::mesh::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Parabolic,
    Elliptic,
    Custom,
    Baseline,
}

impl SchemeKind {
    const NAMES: [(&'static str, SchemeKind); 4] = [
        ("parabolic", SchemeKind::Parabolic),
        ("elliptic", SchemeKind::Elliptic),
        ("custom", SchemeKind::Custom),
        ("baseline", SchemeKind::Baseline),
    ];

    fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap_or("parabolic")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // [mesh]
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub perturb: f64,
    pub seed: u64,
    // [space]
    pub p: usize,
    // [hypo]
    pub scheme: SchemeKind,
    pub alpha: f64,
    /// Used by the custom scheme only.
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c_tau: PenaltyMode,
    pub kappa: f64,
    pub lambda: f64,
    // [evolution]
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialCondition,
    pub profile: String,
    // [analysis]
    pub samples: usize,
    pub sample_seed: u64,
    pub fit_start: f64,
    pub bound_tol: f64,
    pub consistency_t: f64,
    pub resolutions: Vec<usize>,
    pub conv_theta: f64,
    pub conv_dt_scale: f64,
    pub conv_t_final: f64,
    pub conv_initial: InitialCondition,
    pub norm_stride: usize,
    pub alpha_grid: [f64; 3],
    // [output]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Setup::default();
        let e = EvolveConfig::default();
        let d = DecayConfig::default();
        let c = ConvergenceConfig::default();
        RunConfig {
            rect: s.rect,
            nx: s.nx,
            ny: s.ny,
            perturb: s.perturb,
            seed: s.seed,
            p: s.p,
            scheme: SchemeKind::Parabolic,
            alpha: s.alpha,
            beta: 0.0,
            gamma: 0.0,
            epsilon: 0.5,
            c_tau: s.penalty.c_tau,
            kappa: s.penalty.kappa,
            lambda: s.penalty.lambda,
            theta: e.theta,
            dt: e.dt,
            t_final: e.t_final,
            initial: e.initial,
            profile: d.initial_profile,
            samples: 200,
            sample_seed: 0,
            fit_start: d.fit_start,
            bound_tol: d.bound_tol,
            consistency_t: 0.5,
            resolutions: c.resolutions,
            conv_theta: c.theta,
            conv_dt_scale: c.dt_scale,
            conv_t_final: c.t_final,
            conv_initial: c.initial,
            norm_stride: c.norm_stride,
            alpha_grid: [0.005, 0.055, 0.005],
            out_dir: PathBuf::from("out"),
        }
    }
}

fn initial_name(i: InitialCondition) -> &'static str {
    match i {
        InitialCondition::L2Projection => "l2_projection",
        InitialCondition::HypoellipticProjection => "hypoelliptic_projection",
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key}: cannot parse `{value}` as {what}"))
}

fn f(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| bad(key, v, "a number"))
}

fn u(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| bad(key, v, "a nonnegative integer"))
}

fn u64_(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>().map_err(|_| bad(key, v, "a nonnegative integer"))
}

fn initial(key: &str, v: &str) -> Result<InitialCondition> {
    match v {
        "l2_projection" => Ok(InitialCondition::L2Projection),
        "hypoelliptic_projection" => Ok(InitialCondition::HypoellipticProjection),
        _ => Err(bad(key, v, "l2_projection or hypoelliptic_projection")),
    }
}

/// `auto` or a positive number.
pub fn parse_penalty(v: &str) -> Result<PenaltyMode> {
    if v == "auto" {
        Ok(PenaltyMode::Auto)
    } else {
        Ok(PenaltyMode::Fixed(f("hypo.c_tau", v)?))
    }
}

/// `lo:hi:step`.
pub fn parse_alpha_grid(v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("analysis.alpha_grid", v, "lo:hi:step"));
    }
    Ok([
        f("analysis.alpha_grid", parts[0])?,
        f("analysis.alpha_grid", parts[1])?,
        f("analysis.alpha_grid", parts[2])?,
    ])
}

impl RunConfig {
    /// `(section.key, value)` in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c_tau = match self.c_tau {
            PenaltyMode::Auto => "auto".to_string(),
            PenaltyMode::Fixed(c) => c.to_string(),
        };
        let res: Vec<String> = self.resolutions.iter().map(|r| r.to_string()).collect();
        let g = self.alpha_grid;
        vec![
            ("mesh.x_lo", self.rect.x_lo.to_string()),
            ("mesh.x_hi", self.rect.x_hi.to_string()),
            ("mesh.y_lo", self.rect.y_lo.to_string()),
            ("mesh.y_hi", self.rect.y_hi.to_string()),
            ("mesh.nx", self.nx.to_string()),
            ("mesh.ny", self.ny.to_string()),
            ("mesh.perturb", self.perturb.to_string()),
            ("mesh.seed", self.seed.to_string()),
            ("space.p", self.p.to_string()),
            ("hypo.scheme", self.scheme.name().to_string()),
            ("hypo.alpha", self.alpha.to_string()),
            ("hypo.beta", self.beta.to_string()),
            ("hypo.gamma", self.gamma.to_string()),
            ("hypo.epsilon", self.epsilon.to_string()),
            ("hypo.c_tau", c_tau),
            ("hypo.kappa", self.kappa.to_string()),
            ("hypo.lambda", self.lambda.to_string()),
            ("evolution.theta", self.theta.to_string()),
            ("evolution.dt", self.dt.to_string()),
            ("evolution.t_final", self.t_final.to_string()),
            ("evolution.initial", initial_name(self.initial).to_string()),
            ("evolution.profile", self.profile.clone()),
            ("analysis.samples", self.samples.to_string()),
            ("analysis.sample_seed", self.sample_seed.to_string()),
            ("analysis.fit_start", self.fit_start.to_string()),
            ("analysis.bound_tol", self.bound_tol.to_string()),
            ("analysis.consistency_t", self.consistency_t.to_string()),
            ("analysis.resolutions", res.join(",")),
            ("analysis.conv_theta", self.conv_theta.to_string()),
            ("analysis.conv_dt_scale", self.conv_dt_scale.to_string()),
            ("analysis.conv_t_final", self.conv_t_final.to_string()),
            ("analysis.conv_initial", initial_name(self.conv_initial).to_string()),
            ("analysis.norm_stride", self.norm_stride.to_string()),
            ("analysis.alpha_grid", format!("{}:{}:{}", g[0], g[1], g[2])),
            ("output.dir", self.out_dir.to_string_lossy().into_owned()),
        ]
    }

    /// All accepted `section.key` names.
    pub fn keys() -> Vec<&'static str> {
        RunConfig::default().entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one `section.key`.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "mesh.x_lo" => self.rect.x_lo = f(key, v)?,
            "mesh.x_hi" => self.rect.x_hi = f(key, v)?,
            "mesh.y_lo" => self.rect.y_lo = f(key, v)?,
            "mesh.y_hi" => self.rect.y_hi = f(key, v)?,
            "mesh.nx" => self.nx = u(key, v)?,
            "mesh.ny" => self.ny = u(key, v)?,
            "mesh.perturb" => self.perturb = f(key, v)?,
            "mesh.seed" => self.seed = u64_(key, v)?,
            "space.p" => self.p = u(key, v)?,
            "hypo.scheme" => {
                self.scheme = SchemeKind::NAMES
                    .iter()
                    .find(|(n, _)| *n == v)
                    .map(|(_, k)| *k)
                    .ok_or_else(|| bad(key, v, "parabolic, elliptic, custom or baseline"))?
            }
            "hypo.alpha" => self.alpha = f(key, v)?,
            "hypo.beta" => self.beta = f(key, v)?,
            "hypo.gamma" => self.gamma = f(key, v)?,
            "hypo.epsilon" => self.epsilon = f(key, v)?,
            "hypo.c_tau" => self.c_tau = parse_penalty(v)?,
            "hypo.kappa" => self.kappa = f(key, v)?,
            "hypo.lambda" => self.lambda = f(key, v)?,
            "evolution.theta" => self.theta = f(key, v)?,
            "evolution.dt" => self.dt = f(key, v)?,
            "evolution.t_final" => self.t_final = f(key, v)?,
            "evolution.initial" => self.initial = initial(key, v)?,
            "evolution.profile" => self.profile = v.to_string(),
            "analysis.samples" => self.samples = u(key, v)?,
            "analysis.sample_seed" => self.sample_seed = u64_(key, v)?,
            "analysis.fit_start" => self.fit_start = f(key, v)?,
            "analysis.bound_tol" => self.bound_tol = f(key, v)?,
            "analysis.consistency_t" => self.consistency_t = f(key, v)?,
            "analysis.resolutions" => {
                self.resolutions = v.split(',').map(|s| u(key, s.trim())).collect::<Result<_>>()?
            }
            "analysis.conv_theta" => self.conv_theta = f(key, v)?,
            "analysis.conv_dt_scale" => self.conv_dt_scale = f(key, v)?,
            "analysis.conv_t_final" => self.conv_t_final = f(key, v)?,
            "analysis.conv_initial" => self.conv_initial = initial(key, v)?,
            "analysis.norm_stride" => self.norm_stride = u(key, v)?,
            "analysis.alpha_grid" => self.alpha_grid = parse_alpha_grid(v)?,
            "output.dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in self.entries() {
            let (s, k) = key.split_once('.').expect("keys are section.key");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{s}]");
                section = s;
            }
            let _ = writeln!(out, "{k} = {value}");
        }
        out
    }

    /// Parses text over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Config(format!("line {}: {e}", n + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !RunConfig::keys().iter().any(|k| k.split('.').next() == Some(name)) {
                    return Err(at(Error::Config(format!("unknown section `[{name}]`"))));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Config(format!("expected `key = value`, got `{line}`"))))?;
            let s = section
                .as_deref()
                .ok_or_else(|| at(Error::Config("key outside of any section".into())))?;
            cfg.set(&format!("{s}.{}", k.trim()), v).map_err(at)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeKind::Parabolic => Scheme::Parabolic,
            SchemeKind::Elliptic => Scheme::Elliptic,
            SchemeKind::Custom => Scheme::Custom {
                beta: self.beta,
                gamma: self.gamma,
                epsilon: self.epsilon,
            },
            SchemeKind::Baseline => Scheme::Baseline,
        }
    }

    pub fn setup(&self) -> Setup {
        Setup {
            rect: self.rect,
            nx: self.nx,
            ny: self.ny,
            perturb: self.perturb,
            seed: self.seed,
            p: self.p,
            scheme: self.scheme(),
            alpha: self.alpha,
            penalty: PenaltyConfig {
                c_tau: self.c_tau,
                kappa: self.kappa,
                lambda: self.lambda,
            },
        }
    }

    pub fn evolve(&self) -> EvolveConfig {
        EvolveConfig {
            theta: self.theta,
            dt: self.dt,
            t_final: self.t_final,
            initial: self.initial,
            keep_states: false,
        }
    }

    pub fn decay(&self) -> DecayConfig {
        DecayConfig {
            setup: self.setup(),
            evolve: self.evolve(),
            initial_profile: self.profile.clone(),
            fit_start: self.fit_start,
            bound_tol: self.bound_tol,
            ..DecayConfig::default()
        }
    }

    pub fn convergence(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            setup: self.setup(),
            resolutions: self.resolutions.clone(),
            case: self.profile.clone(),
            theta: self.conv_theta,
            dt_scale: self.conv_dt_scale,
            t_final: self.conv_t_final,
            initial: self.conv_initial,
            norm_stride: self.norm_stride,
        }
    }

    /// Checks the preconditions shared by all commands.
    pub fn validate(&self) -> Result<()> {
        let s = self.setup();
        s.hypo()?;
        s.penalty.validate()?;
        if self.rect.x_lo < 0.0 || !(self.rect.x_hi > self.rect.x_lo) || !(self.rect.y_hi > self.rect.y_lo) {
            return Err(Error::param("cli", "mesh", "need 0 <= x_lo < x_hi and y_lo < y_hi"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::param("mesh", "nx/ny", "must be positive"));
        }
        if !(0.0..0.5).contains(&self.perturb) {
            return Err(Error::param("mesh", "perturb", format!("must lie in [0, 0.5), got {}", self.perturb)));
        }
        if self.p < 2 {
            return Err(Error::param("fem_basis", "p", format!("degree must be >= 2, got {}", self.p)));
        }
        self.evolve().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn shipped_default_file_matches_defaults() {
        let text = include_str!("../../../configs/default.cfg");
        assert_eq!(RunConfig::parse(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let e = RunConfig::parse("[mesh]\nnx = 4\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("mesh.bogus"), "{e}");
        assert!(RunConfig::parse("[nope]\n").is_err());
        assert!(RunConfig::parse("nx = 4\n").is_err());
        assert!(RunConfig::parse("[mesh]\nnx 4\n").is_err());
        assert!(RunConfig::parse("[mesh]\nnx = four\n").is_err());
    }

    #[test]
    fn comments_and_partial_files() {
        let c = RunConfig::parse("# hi\n[hypo]\nc_tau = 12.5 # fixed\n[space]\np=3\n").unwrap();
        assert_eq!(c.c_tau, PenaltyMode::Fixed(12.5));
        assert_eq!(c.p, 3);
        assert_eq!(c.nx, RunConfig::default().nx);
    }

    #[test]
    fn validation_names_the_parameter() {
        let c = RunConfig { alpha: 0.7, ..RunConfig::default() };
        assert!(c.validate().unwrap_err().to_string().contains("alpha"));
        let c = RunConfig { dt: 0.0, ..RunConfig::default() };
        assert!(c.validate().unwrap_err().to_string().contains("dt"));
    }

    proptest! {
        #[test]
        fn arbitrary_values_round_trip(
            nx in 1usize..100, perturb in 0.0f64..0.5, seed in any::<u64>(), p in 2usize..8,
            alpha in 1e-3f64..0.499, ct in prop::option::of(0.1f64..100.0), kappa in 0.0f64..3.0,
            dt in 1e-4f64..0.1, res in prop::collection::vec(1usize..64, 1..6), stride in 1usize..10,
            scheme in 0usize..4,
        ) {
            let c = RunConfig {
                nx, perturb, seed, p, alpha, kappa, dt, resolutions: res, norm_stride: stride,
                c_tau: ct.map_or(PenaltyMode::Auto, PenaltyMode::Fixed),
                scheme: SchemeKind::NAMES[scheme].1,
                beta: alpha * alpha / 3.0,
                out_dir: PathBuf::from(format!("runs/{seed}")),
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        }
    }
}
