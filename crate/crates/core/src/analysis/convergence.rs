//! Mesh-refinement study against a manufactured solution.

use super::norms::field_norms;
use super::Setup;
use crate::assembly::QuadTables;
use crate::error::{Error, Result};
use crate::evolution::{build_manufactured_case, evolve_with, EvolveConfig, InitialCondition};
use crate::field::{Analytic, Difference, DiscreteFunction};
use crate::output::{csv, Plot, Scale, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// Mesh and scheme; `nx`, `ny` are replaced by `resolutions`.
    pub setup: Setup,
    pub resolutions: Vec<usize>,
    pub case: String,
    pub theta: f64,
    /// `dt = dt_scale / nx^2`.
    pub dt_scale: f64,
    pub t_final: f64,
    pub initial: InitialCondition,
    /// Evaluate the triple norm of the error every `norm_stride` steps.
    pub norm_stride: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            setup: Setup::default(),
            resolutions: vec![4, 8, 16, 32],
            case: "poly".into(),
            theta: 0.5,
            dt_scale: 1.0,
            t_final: 0.5,
            initial: InitialCondition::HypoellipticProjection,
            norm_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub h_max: f64,
    pub dofs: usize,
    /// `||e(t_f)||`.
    pub err_l2: f64,
    /// `||sqrt(A) grad e(t_f)||`.
    pub err_agrad: f64,
    /// `(int_0^{t_f} |||e|||^2)^{1/2}`.
    pub err_triple: f64,
    /// Observed rates against the previous row, in the same order.
    pub rates: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub p: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Non-monotone error decrease, one line per occurrence.
    pub flags: Vec<String>,
}

const NAMES: [&str; 3] = ["l2", "agrad", "triple"];

impl ConvergenceTable {
    fn new(p: usize, mut rows: Vec<ConvergenceRow>) -> Self {
        let mut flags = Vec::new();
        for k in 1..rows.len() {
            let (a, b) = (rows[k - 1], rows[k]);
            let ea = [a.err_l2, a.err_agrad, a.err_triple];
            let eb = [b.err_l2, b.err_agrad, b.err_triple];
            let lh = (a.h_max / b.h_max).ln();
            rows[k].rates = Some(std::array::from_fn(|i| (ea[i] / eb[i]).ln() / lh));
            for i in 0..3 {
                if !(eb[i] < ea[i]) {
                    flags.push(format!("{} error did not decrease from nx={} to nx={}", NAMES[i], a.nx, b.nx));
                }
            }
        }
        ConvergenceTable { p, rows, flags }
    }

    /// Observed triple-norm rate on the last refinement.
    pub fn final_triple_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rates).map(|r| r[2])
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| {
                let rates = r.rates.unwrap_or([f64::NAN; 3]);
                vec![r.h_max, r.dofs as f64, r.err_l2, r.err_agrad, r.err_triple, rates[0], rates[1], rates[2]]
            })
            .collect();
        csv(
            &["h_max", "dofs", "err_l2", "err_agrad", "err_triple", "rate_l2", "rate_agrad", "rate_triple"],
            &rows,
        )
    }

    pub fn plot(&self) -> Plot {
        let pick = |f: fn(&ConvergenceRow) -> f64| self.rows.iter().map(|r| (r.h_max, f(r))).collect();
        Plot {
            title: format!("Error vs mesh size, p = {}", self.p),
            x_label: "h_max".into(),
            y_label: "error".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series: vec![
                Series { label: "||e(t_f)||".into(), points: pick(|r| r.err_l2) },
                Series { label: "||sqrt(A) grad e(t_f)||".into(), points: pick(|r| r.err_agrad) },
                Series { label: "time-integrated triple".into(), points: pick(|r| r.err_triple) },
            ],
        }
    }
}

fn run_row(cfg: &ConvergenceConfig, nx: usize) -> Result<ConvergenceRow> {
    let setup = cfg.setup.with_resolution(nx, nx);
    let system = setup.system()?;
    let case = build_manufactured_case(setup.rect, &cfg.case)?;
    let space = &system.space;
    let evolve_cfg = EvolveConfig {
        theta: cfg.theta,
        dt: cfg.dt_scale / (nx * nx) as f64,
        t_final: cfg.t_final,
        initial: cfg.initial,
        keep_states: false,
    };
    let steps = evolve_cfg.steps();
    let tables = QuadTables::with_extra(space.basis(), 2);
    let exact = Analytic(&case.u);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let traj = evolve_with(&system, &evolve_cfg, &case.u, Some(&case.f), |n, t, u| {
        if n % cfg.norm_stride == 0 || n == steps {
            let d = DiscreteFunction::new(space, u);
            let r = field_norms(space, &system.hypo, &system.penalty, &system.taus, &Difference(&exact, &d), t, &tables);
            samples.push((t, r.triple_sq()));
        }
        Ok(())
    })?;
    let integral: f64 = samples.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    let t_end = *traj.times.last().expect("trajectory has an initial state");
    let d = DiscreteFunction::new(space, &traj.final_state);
    let fin = field_norms(space, &system.hypo, &system.penalty, &system.taus, &Difference(&exact, &d), t_end, &tables);
    Ok(ConvergenceRow {
        nx,
        h_max: space.mesh().h_max(),
        dofs: space.num_free(),
        err_l2: fin.l2,
        err_agrad: fin.agrad,
        err_triple: integral.max(0.0).sqrt(),
        rates: None,
    })
}

/// Rows are computed concurrently, one thread per resolution.
pub fn run_convergence_experiment(cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.resolutions.len() < 2 || cfg.resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("analysis", "resolutions", "need at least two strictly increasing values"));
    }
    if cfg.norm_stride == 0 {
        return Err(Error::param("analysis", "norm_stride", "must be positive"));
    }
    if !(cfg.dt_scale > 0.0) {
        return Err(Error::param("analysis", "dt_scale", "must be positive"));
    }
    let rows: Vec<Result<ConvergenceRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.resolutions.iter().map(|&nx| s.spawn(move || run_row(cfg, nx))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Analysis("convergence row panicked".into()))))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let table = ConvergenceTable::new(cfg.setup.p, rows);
    if table.rows.windows(2).any(|w| w[1].h_max >= w[0].h_max) {
        return Err(Error::Analysis("convergence: h_max does not decrease down the rows".into()));
    }
    Ok(table)
}
