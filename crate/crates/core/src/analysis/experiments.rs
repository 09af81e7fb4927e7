//! Decay-to-equilibrium run and the comparison with plain Galerkin.

use super::fit::fit_decay_rate;
use super::Setup;
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::evolution::{build_manufactured_case, evolve, EvolveConfig, Trajectory};
use crate::field::SeparableField;
use crate::hypo::{decay_rate, estimate_cpf, HypoMatrix, PenaltyConfig};
use crate::mesh::Rect;
use crate::output::{csv, Plot, Scale, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub setup: Setup,
    pub evolve: EvolveConfig,
    /// Initial profile: a manufactured case id or `zero`.
    pub initial_profile: String,
    /// The rate fit uses `t >= fit_start`.
    pub fit_start: f64,
    /// Slack in the pointwise bound.
    pub bound_tol: f64,
    /// Slack in `E^{n+1} <= E^n`, relative to `E^0`.
    pub energy_tol: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            setup: Setup::default(),
            evolve: EvolveConfig::default(),
            initial_profile: "poly".into(),
            fit_start: 1.0,
            bound_tol: 0.05,
            energy_tol: 1e-10,
        }
    }
}

fn initial_field(rect: Rect, id: &str) -> Result<SeparableField> {
    if id == "zero" {
        return Ok(SeparableField::zero());
    }
    Ok(build_manufactured_case(rect, id)?.u)
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub lambda_min: f64,
    /// Discrete Poincare-Friedrichs constant.
    pub cpf: f64,
    pub c0: f64,
    /// `min(1, c0)`.
    pub certified_rate: f64,
    /// Least-squares rate of `||U|| + ||sqrt(A) grad U||` on `t >= fit_start`.
    pub fitted_rate: Option<f64>,
    pub fit_start: f64,
    pub bound_tol: f64,
    pub trajectory: Trajectory,
    /// First step breaking the pointwise bound: `(step, t, q / bound)`.
    pub bound_violation: Option<(usize, f64, f64)>,
    /// First step with `E^{n+1} > E^n + tol E^0`: `(step, t, increase / E^0)`.
    pub energy_increase: Option<(usize, f64, f64)>,
    pub zero_trajectory: bool,
}

impl DecayReport {
    fn from_trajectory(cfg: &DecayConfig, hypo: &HypoMatrix, cpf: f64, trajectory: Trajectory) -> Result<Self> {
        let rate = decay_rate(hypo, cpf)?;
        let q = trajectory.decay_quantity();
        let q0 = q[0];
        let zero_trajectory = q0 == 0.0;
        let mut bound_violation = None;
        for (n, (&t, &v)) in trajectory.times.iter().zip(&q).enumerate() {
            let bound = (-rate.rate * t).exp() * q0 * (1.0 + cfg.bound_tol);
            if v > bound {
                bound_violation = Some((n, t, v / (bound / (1.0 + cfg.bound_tol))));
                break;
            }
        }
        let e0 = trajectory.energy[0];
        let energy_increase = trajectory.energy.windows(2).enumerate().find_map(|(n, w)| {
            (w[1] > w[0] + cfg.energy_tol * e0).then(|| (n + 1, trajectory.times[n + 1], (w[1] - w[0]) / e0))
        });
        let fitted_rate = if zero_trajectory {
            None
        } else {
            fit_decay_rate(&trajectory.times, &q, cfg.fit_start)
        };
        Ok(DecayReport {
            lambda_min: hypo.lambda_min_b_minus_a,
            cpf,
            c0: rate.c0,
            certified_rate: rate.rate,
            fitted_rate,
            fit_start: cfg.fit_start,
            bound_tol: cfg.bound_tol,
            trajectory,
            bound_violation,
            energy_increase,
            zero_trajectory,
        })
    }

    pub fn passed(&self) -> bool {
        self.bound_violation.is_none()
            && self.energy_increase.is_none()
            && self.fitted_rate.map_or(true, |r| r >= self.certified_rate - 0.02)
    }

    pub fn check(&self) -> Result<()> {
        if let Some((n, t, r)) = self.bound_violation {
            return Err(Error::Certificate(format!(
                "decay: pointwise bound violated first at step {n} (t = {t}): ratio to e^(-{:.4} t) q0 is {r:.4} > 1 + {}",
                self.certified_rate, self.bound_tol
            )));
        }
        if let Some((n, t, d)) = self.energy_increase {
            return Err(Error::Certificate(format!(
                "decay: energy increased first at step {n} (t = {t}) by {d:e} E0"
            )));
        }
        if let Some(r) = self.fitted_rate {
            if r < self.certified_rate - 0.02 {
                return Err(Error::Certificate(format!(
                    "decay: fitted rate {r:.4} below certified rate {:.4} - 0.02",
                    self.certified_rate
                )));
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> Vec<String> {
        let fit = match (self.zero_trajectory, self.fitted_rate) {
            (true, _) => "zero trajectory".to_string(),
            (false, Some(r)) => format!("{r:.6}"),
            (false, None) => "undetermined".to_string(),
        };
        vec![
            format!("lambda_min(B-A) = {:.6}", self.lambda_min),
            format!("C_PF (discrete estimate) = {:.6}", self.cpf),
            format!("c0 = {:.6}", self.c0),
            format!("certified rate min(1, c0) = {:.6}", self.certified_rate),
            format!("fitted rate on t >= {} = {fit}", self.fit_start),
            format!(
                "pointwise bound (tol {}): {}",
                self.bound_tol,
                match self.bound_violation {
                    None => "holds at every step".to_string(),
                    Some((n, t, r)) => format!("violated at step {n}, t = {t}, ratio {r:.4}"),
                }
            ),
            format!(
                "energy monotone: {}",
                match self.energy_increase {
                    None => "yes".to_string(),
                    Some((n, _, d)) => format!("no, step {n} grows by {d:e} E0"),
                }
            ),
        ]
    }

    /// `t,energy,l2,agrad,bound` where `bound = e^{-rate t} q0`.
    pub fn to_csv(&self) -> String {
        let tr = &self.trajectory;
        let q0 = tr.decay_quantity()[0];
        let rows: Vec<Vec<f64>> = (0..tr.len())
            .map(|n| {
                let t = tr.times[n];
                vec![t, tr.energy[n], tr.l2[n], tr.agrad[n], (-self.certified_rate * t).exp() * q0]
            })
            .collect();
        csv(&["t", "energy", "l2", "agrad", "bound"], &rows)
    }

    pub fn plot(&self) -> Plot {
        let tr = &self.trajectory;
        let q = tr.decay_quantity();
        Plot {
            title: "Decay of ||U|| + ||sqrt(A) grad U||".into(),
            x_label: "t".into(),
            y_label: "norm".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series: vec![
                Series {
                    label: "measured".into(),
                    points: tr.times.iter().copied().zip(q.iter().copied()).collect(),
                },
                Series {
                    label: format!("bound, rate {:.3}", self.certified_rate),
                    points: tr.times.iter().map(|&t| (t, (-self.certified_rate * t).exp() * q[0])).collect(),
                },
            ],
        }
    }
}

fn validate(cfg: &DecayConfig) -> Result<()> {
    if !(cfg.fit_start >= 0.0 && cfg.fit_start < cfg.evolve.t_final) {
        return Err(Error::param("analysis", "fit_start", format!("must lie in [0, t_final), got {}", cfg.fit_start)));
    }
    if !(cfg.bound_tol >= 0.0) {
        return Err(Error::param("analysis", "bound_tol", "must be nonnegative"));
    }
    cfg.evolve.validate()
}

pub fn run_decay_experiment(cfg: &DecayConfig) -> Result<DecayReport> {
    validate(cfg)?;
    let system = cfg.setup.system()?;
    run_decay_on(cfg, &system)
}

fn run_decay_on(cfg: &DecayConfig, system: &AssembledSystem) -> Result<DecayReport> {
    let cpf = estimate_cpf(&system.space)?;
    let u0 = initial_field(cfg.setup.rect, &cfg.initial_profile)?;
    let traj = evolve(system, &cfg.evolve, &u0, None)?;
    DecayReport::from_trajectory(cfg, &system.hypo, cpf, traj)
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub hypocoercive: DecayReport,
    pub baseline: Trajectory,
    /// The plain energy estimate certifies no decay.
    pub baseline_certified_rate: f64,
    pub baseline_fitted_rate: Option<f64>,
    /// First step where the baseline `||U||^2` grows.
    pub baseline_energy_increase: Option<usize>,
}

impl BaselineReport {
    pub fn summary(&self) -> Vec<String> {
        let h = &self.hypocoercive;
        let fmt = |r: Option<f64>| r.map_or("undetermined".to_string(), |r| format!("{r:.6}"));
        vec![
            format!("C_PF (discrete estimate) = {:.6}", h.cpf),
            format!("c0 = {:.6}", h.c0),
            format!("certified rate: hypocoercive = {:.6}, baseline = {}", h.certified_rate, self.baseline_certified_rate),
            format!("fitted rate of ||U||: hypocoercive = {}, baseline = {}", fmt(fit_l2(&h.trajectory, h.fit_start)), fmt(self.baseline_fitted_rate)),
            format!(
                "energy nonincreasing: hypocoercive = {}, baseline = {}",
                h.energy_increase.is_none(),
                self.baseline_energy_increase.is_none()
            ),
        ]
    }

    pub fn passed(&self) -> bool {
        self.hypocoercive.certified_rate > 0.0
            && self.baseline_certified_rate == 0.0
            && self.hypocoercive.energy_increase.is_none()
            && self.baseline_energy_increase.is_none()
    }

    /// `t,hypo_l2,hypo_agrad,hypo_energy,baseline_l2,baseline_energy`.
    pub fn to_csv(&self) -> String {
        let (h, b) = (&self.hypocoercive.trajectory, &self.baseline);
        let rows: Vec<Vec<f64>> = (0..h.len())
            .map(|n| vec![h.times[n], h.l2[n], h.agrad[n], h.energy[n], b.l2[n], b.energy[n]])
            .collect();
        csv(&["t", "hypo_l2", "hypo_agrad", "hypo_energy", "baseline_l2", "baseline_energy"], &rows)
    }

    pub fn plot(&self) -> Plot {
        let (h, b) = (&self.hypocoercive.trajectory, &self.baseline);
        let curve = |tr: &Trajectory| tr.times.iter().copied().zip(tr.l2.iter().copied()).collect();
        let rate = self.hypocoercive.certified_rate;
        Plot {
            title: "||U(t)||: hypocoercive scheme vs plain Galerkin".into(),
            x_label: "t".into(),
            y_label: "||U||".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series: vec![
                Series { label: "hypocoercive".into(), points: curve(h) },
                Series { label: "baseline".into(), points: curve(b) },
                Series {
                    label: format!("certified, rate {rate:.3}"),
                    points: h.times.iter().map(|&t| (t, (-rate * t).exp() * h.l2[0])).collect(),
                },
                Series {
                    label: "baseline certificate, rate 0".into(),
                    points: b.times.iter().map(|&t| (t, b.l2[0])).collect(),
                },
            ],
        }
    }
}

fn fit_l2(tr: &Trajectory, start: f64) -> Option<f64> {
    fit_decay_rate(&tr.times, &tr.l2, start)
}

/// Runs the configured scheme and plain Galerkin (`A = 0`, no diffusion
/// fluxes) from the same initial profile on the same mesh.
pub fn run_baseline_comparison(cfg: &DecayConfig) -> Result<BaselineReport> {
    validate(cfg)?;
    let hypocoercive = run_decay_experiment(cfg)?;
    let space = cfg.setup.space()?;
    let penalty = PenaltyConfig { kappa: 0.0, lambda: 0.0, ..cfg.setup.penalty };
    let system = AssembledSystem::new(space, HypoMatrix::baseline(), penalty)?;
    let u0 = initial_field(cfg.setup.rect, &cfg.initial_profile)?;
    let baseline = evolve(&system, &cfg.evolve, &u0, None)?;
    let e0 = baseline.energy[0];
    let baseline_energy_increase = baseline
        .energy
        .windows(2)
        .position(|w| w[1] > w[0] + cfg.energy_tol * e0)
        .map(|n| n + 1);
    Ok(BaselineReport {
        baseline_fitted_rate: fit_l2(&baseline, cfg.fit_start),
        hypocoercive,
        baseline,
        baseline_certified_rate: 0.0,
        baseline_energy_increase,
    })
}
