//! Command-line front end: one subcommand per experiment.
//!
//! Exit status is 0 when every check passes, 1 when a certificate or
//! assertion fails and 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::analysis::{
    coercivity_certificate, consistency_residual, run_baseline_comparison, run_convergence_experiment,
    run_decay_experiment,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::build_manufactured_case;
use crate::hypo3d::{alpha_grid, build_hypo3, check_b3_lower_bound, find_nu};
use crate::mesh::{write_mesh, FaceKind};
use crate::output::{csv, write_atomic};

/// Relative tolerance for the consistency residual.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Allowed shortfall of the final triple-norm rate below `p - 1`.
pub const RATE_SLACK: f64 = 0.25;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hypofem", version, about = "Hypocoercive finite element experiments for the Kolmogorov equation")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags override values from `--config`.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// Configuration file (`key = value` in sections).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; beats HYPOFEM_OUT and `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub nx: Option<String>,
    #[arg(long, global = true)]
    pub ny: Option<String>,
    #[arg(long, global = true)]
    pub perturb: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Polynomial degree.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// parabolic, elliptic, custom or baseline.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// `auto` or a fixed C_tau.
    #[arg(long, global = true, value_name = "auto|C_TAU")]
    pub penalty: Option<String>,
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    #[arg(long, global = true)]
    pub theta: Option<String>,
    #[arg(long, global = true)]
    pub dt: Option<String>,
    #[arg(long = "t-final", global = true)]
    pub t_final: Option<String>,
    /// Initial profile / manufactured case: poly, sine or zero.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub samples: Option<String>,
    /// Any configuration key, e.g. `--set analysis.resolutions=4,8,16`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Generate the mesh and write it with a face summary.
    Mesh,
    /// Decay to equilibrium with f = 0 against the certified rate.
    Decay,
    /// Convergence table for the manufactured solution.
    Converge,
    /// Sampled coercivity certificate B(V,V) >= |||V|||^2 / 2.
    Coercivity,
    /// Galerkin consistency residual of the manufactured solution.
    Consistency,
    /// Hypocoercive scheme vs plain Galerkin.
    Baseline,
    /// Matrix certificates for the three-dimensional construction.
    Hypo3d {
        /// `lo:hi:step`.
        #[arg(long = "alpha-grid", value_name = "LO:HI:STEP")]
        alpha_grid: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Decay => "decay",
            Command::Converge => "converge",
            Command::Coercivity => "coercivity",
            Command::Consistency => "consistency",
            Command::Baseline => "baseline",
            Command::Hypo3d { .. } => "hypo3d",
        }
    }
}

fn key_help() -> String {
    let d = RunConfig::default();
    let mut s = String::from("Configuration keys (defaults shown):\n");
    for (k, v) in d.entries() {
        s.push_str(&format!("  {k} = {v}\n"));
    }
    s
}

/// Builds the effective configuration: defaults, then the file, then
/// HYPOFEM_OUT, then flags.
pub fn resolve_config(o: &Overrides, env_out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = env_out {
        cfg.out_dir = d;
    }
    let flags = [
        ("mesh.nx", &o.nx),
        ("mesh.ny", &o.ny),
        ("mesh.perturb", &o.perturb),
        ("mesh.seed", &o.seed),
        ("space.p", &o.p),
        ("hypo.scheme", &o.scheme),
        ("hypo.alpha", &o.alpha),
        ("hypo.c_tau", &o.penalty),
        ("hypo.kappa", &o.kappa),
        ("hypo.lambda", &o.lambda),
        ("evolution.theta", &o.theta),
        ("evolution.dt", &o.dt),
        ("evolution.t_final", &o.t_final),
        ("evolution.profile", &o.profile),
        ("analysis.samples", &o.samples),
    ];
    for (key, v) in flags {
        if let Some(v) = v {
            cfg.set(key, v)?;
        }
    }
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects SECTION.KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(d) = &o.out {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::MalformedMesh { .. }
            | Error::DuplicateElement { .. }
            | Error::NonConforming(_)
            | Error::InvertedTriangle { .. }
            | Error::MeshQuality(_)
            | Error::EmptyDirichletBoundary
    )
}

/// Exit status for an error raised while running a command.
pub fn exit_code(e: &Error) -> i32 {
    if usage_error(e) {
        EXIT_USAGE
    } else {
        EXIT_FAIL
    }
}

struct Ctx<'a> {
    cfg: RunConfig,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.cfg.out_dir.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn lines(&mut self, lines: &[String]) {
        for l in lines {
            self.say(l);
        }
    }

    fn wrote(&mut self, p: &Path) {
        self.say(format!("wrote {}", p.display()));
    }
}

type Outcome = Result<std::result::Result<(), String>>;

fn cmd_mesh(c: &mut Ctx) -> Outcome {
    let mesh = c.cfg.setup().mesh()?;
    let p = c.write("mesh.txt", write_mesh(&mesh).as_bytes())?;
    let kinds = [FaceKind::Interior, FaceKind::Elliptic, FaceKind::Inflow, FaceKind::Outflow];
    let mut lines = vec![
        format!("vertices = {}", mesh.num_vertices()),
        format!("triangles = {}", mesh.num_triangles()),
        format!("h_max = {}", mesh.h_max()),
    ];
    for k in kinds {
        lines.push(format!("faces {:?} = {}", k, mesh.count_faces(k)));
    }
    c.lines(&lines);
    c.wrote(&p);
    Ok(Ok(()))
}

fn cmd_decay(c: &mut Ctx) -> Outcome {
    let rep = run_decay_experiment(&c.cfg.decay())?;
    let summary = rep.summary();
    c.lines(&summary);
    for (name, body) in [
        ("decay.csv", rep.to_csv()),
        ("decay.svg", rep.plot().to_svg()),
        ("decay.txt", summary.join("\n") + "\n"),
    ] {
        let p = c.write(name, body.as_bytes())?;
        c.wrote(&p);
    }
    Ok(rep.check().map_err(|e| e.to_string()))
}

fn cmd_converge(c: &mut Ctx) -> Outcome {
    let table = run_convergence_experiment(&c.cfg.convergence())?;
    let text = table.to_csv();
    c.say(text.trim_end());
    for f in &table.flags {
        c.say(format!("warning: {f}"));
    }
    for (name, body) in [("converge.csv", text.clone()), ("converge.svg", table.plot().to_svg())] {
        let p = c.write(name, body.as_bytes())?;
        c.wrote(&p);
    }
    let want = c.cfg.p as f64 - 1.0 - RATE_SLACK;
    match table.final_triple_rate() {
        Some(r) if r >= want => {
            c.say(format!("final triple-norm rate {r:.4} >= {want}"));
            Ok(Ok(()))
        }
        Some(r) => Ok(Err(format!("analysis: final triple-norm rate {r:.4} < {want} (p = {})", c.cfg.p))),
        None => Ok(Err("analysis: rate undetermined".into())),
    }
}

fn cmd_coercivity(c: &mut Ctx) -> Outcome {
    let system = c.cfg.setup().system()?;
    let rep = coercivity_certificate(&system, c.cfg.samples, c.cfg.sample_seed)?;
    let lines = vec![
        format!("parameters: {}", rep.parameters),
        format!("samples = {}, seed = {}", rep.samples, rep.seed),
        format!("min ratio = {:.9}", rep.min_ratio),
        format!("certificate: {}", if rep.passed { "pass" } else { "FAIL" }),
    ];
    c.lines(&lines);
    let p = c.write("coercivity.txt", (lines.join("\n") + "\n").as_bytes())?;
    c.wrote(&p);
    Ok(rep.check().map_err(|e| e.to_string()))
}

fn cmd_consistency(c: &mut Ctx) -> Outcome {
    let system = c.cfg.setup().system()?;
    let case = build_manufactured_case(c.cfg.rect, &c.cfg.profile)?;
    let r = consistency_residual(&system, &case.u, &case.f, c.cfg.consistency_t)?;
    let lines = vec![
        format!("field = {}, t = {}", case.id, c.cfg.consistency_t),
        format!("max |residual| = {:e}", r.max_abs),
        format!("scale = {:e}", r.scale),
        format!("relative residual = {:e}", r.relative()),
    ];
    c.lines(&lines);
    let p = c.write("consistency.txt", (lines.join("\n") + "\n").as_bytes())?;
    c.wrote(&p);
    if r.relative() <= CONSISTENCY_TOL {
        Ok(Ok(()))
    } else {
        Ok(Err(format!("analysis: consistency residual {:e} > {CONSISTENCY_TOL:e}", r.relative())))
    }
}

fn cmd_baseline(c: &mut Ctx) -> Outcome {
    let rep = run_baseline_comparison(&c.cfg.decay())?;
    let summary = rep.summary();
    c.lines(&summary);
    for (name, body) in [
        ("baseline.csv", rep.to_csv()),
        ("baseline.svg", rep.plot().to_svg()),
        ("baseline.txt", summary.join("\n") + "\n"),
    ] {
        let p = c.write(name, body.as_bytes())?;
        c.wrote(&p);
    }
    if rep.passed() {
        Ok(Ok(()))
    } else {
        Ok(Err("analysis: baseline comparison failed (certified rates or energy monotonicity)".into()))
    }
}

fn cmd_hypo3d(c: &mut Ctx, grid: Option<&str>) -> Outcome {
    let g = match grid {
        Some(s) => crate::config::parse_alpha_grid(s)?,
        None => c.cfg.alpha_grid,
    };
    let alphas = alpha_grid(g[0], g[1], g[2])?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    c.say("alpha        min_eig(gap)   nu           lambda_min   c3           status");
    for &a in &alphas {
        let m = build_hypo3(a)?;
        let chk = check_b3_lower_bound(&m);
        let nu = find_nu(&m);
        let (nu_v, lam, c3, nu_max) = match &nu {
            Ok(s) => (s.nu, s.lambda_min, s.c3, s.nu_max),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let ok = chk.passed && nu.is_ok() && lam > 0.0;
        if !ok {
            failures.push(format!("alpha = {a}: min eigenvalue {:e}", chk.min_eigenvalue));
        }
        c.say(format!(
            "{a:<12.6} {:<14.6e} {nu_v:<12.6e} {lam:<12.6e} {c3:<12.6e} {}",
            chk.min_eigenvalue,
            if ok { "pass" } else { "FAIL" }
        ));
        let m3 = chk.leading_minors;
        rows.push(vec![a, chk.min_eigenvalue, m3[0], m3[1], m3[2], nu_v, lam, c3, nu_max, ok as u8 as f64]);
    }
    let text = csv(
        &["alpha", "min_eigenvalue", "minor1", "minor2", "minor3", "nu", "lambda_min_split", "c3", "nu_max", "pass"],
        &rows,
    );
    let p = c.write("hypo3d.csv", text.as_bytes())?;
    c.wrote(&p);
    if failures.is_empty() {
        Ok(Ok(()))
    } else {
        Ok(Err(format!("hypo3d: first failure at {}", failures[0])))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_with(args: Vec<OsString>, env_out: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cmd = Cli::command().after_long_help(key_help());
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let cfg = match resolve_config(&cli.overrides, env_out).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "hypofem: usage error: {e}");
            return EXIT_USAGE;
        }
    };
    let name = cli.command.name();
    let mut ctx = Ctx { cfg, out };
    if let Err(e) = ctx.write(&format!("{name}.cfg"), ctx.cfg.to_text().as_bytes()) {
        let _ = writeln!(err, "hypofem: {e}");
        return EXIT_FAIL;
    }
    let result = match &cli.command {
        Command::Mesh => cmd_mesh(&mut ctx),
        Command::Decay => cmd_decay(&mut ctx),
        Command::Converge => cmd_converge(&mut ctx),
        Command::Coercivity => cmd_coercivity(&mut ctx),
        Command::Consistency => cmd_consistency(&mut ctx),
        Command::Baseline => cmd_baseline(&mut ctx),
        Command::Hypo3d { alpha_grid } => cmd_hypo3d(&mut ctx, alpha_grid.as_deref()),
    };
    match result {
        Ok(Ok(())) => EXIT_PASS,
        Ok(Err(msg)) => {
            let _ = writeln!(err, "hypofem {name}: FAIL: {msg}");
            EXIT_FAIL
        }
        Err(e) => {
            let _ = writeln!(err, "hypofem {name}: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary; reads HYPOFEM_OUT.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let env_out = std::env::var_os("HYPOFEM_OUT").filter(|v| !v.is_empty()).map(PathBuf::from);
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args.into_iter().collect(), env_out, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str], dir: &Path) -> (i32, String, String) {
        let mut v: Vec<OsString> = vec!["hypofem".into()];
        v.extend(args.iter().map(OsString::from));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(v, Some(dir.to_path_buf()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn flags_override_file_and_env() {
        let o = Overrides {
            nx: Some("5".into()),
            penalty: Some("auto".into()),
            set: vec!["analysis.resolutions=2,4".into()],
            ..Overrides::default()
        };
        let cfg = resolve_config(&o, Some(PathBuf::from("envdir"))).unwrap();
        assert_eq!(cfg.nx, 5);
        assert_eq!(cfg.resolutions, vec![2, 4]);
        assert_eq!(cfg.out_dir, PathBuf::from("envdir"));
        let o = Overrides { out: Some("flagdir".into()), ..Overrides::default() };
        assert_eq!(resolve_config(&o, Some("envdir".into())).unwrap().out_dir, PathBuf::from("flagdir"));
    }

    #[test]
    fn usage_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(go(&["frobnicate"], dir.path()).0, EXIT_USAGE);
        let (code, _, err) = go(&["mesh", "--alpha", "0.9"], dir.path());
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("alpha"), "{err}");
        assert_eq!(go(&["mesh", "--set", "mesh.bogus=1"], dir.path()).0, EXIT_USAGE);
        assert_eq!(go(&["mesh", "--config", "/nonexistent/x.cfg"], dir.path()).0, EXIT_USAGE);
    }

    #[test]
    fn help_lists_config_keys() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, _) = go(&["--help"], dir.path());
        assert_eq!(code, EXIT_PASS);
        assert!(out.contains("analysis.resolutions"));
        let (code, out, _) = go(&["decay", "--help"], dir.path());
        assert_eq!(code, EXIT_PASS);
        assert!(out.contains("--t-final"));
    }

    #[test]
    fn mesh_and_hypo3d_write_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, _) = go(&["mesh", "--nx", "3", "--ny", "2"], dir.path());
        assert_eq!(code, EXIT_PASS, "{out}");
        assert!(out.contains("triangles = 12"));
        assert!(dir.path().join("mesh.txt").exists());
        assert!(dir.path().join("mesh.cfg").exists());
        let (code, out, _) = go(&["hypo3d", "--alpha-grid", "0.005:0.055:0.005"], dir.path());
        assert_eq!(code, EXIT_PASS, "{out}");
        let table = std::fs::read_to_string(dir.path().join("hypo3d.csv")).unwrap();
        assert_eq!(table.lines().count(), 12);
    }

    #[test]
    fn failing_certificate_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = go(&["coercivity", "--nx", "4", "--ny", "4", "--penalty", "0.001"], dir.path());
        assert_eq!(code, EXIT_FAIL);
        assert!(err.contains("C_tau"), "{err}");
        let (code, _, err) = go(&["coercivity", "--scheme", "baseline", "--nx", "2", "--ny", "2"], dir.path());
        assert_eq!(code, EXIT_FAIL);
        assert!(err.contains("baseline mode has no coercivity certificate"));
    }
}
