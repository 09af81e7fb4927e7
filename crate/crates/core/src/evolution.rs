//! Theta-scheme time stepping of `M_A dU/dt + K U = F(t)`.

use crate::assembly::{assemble_load, project_hypoelliptic, project_l2, AssembledSystem};
use crate::error::{Error, Result};
use crate::field::{poly_mul, Analytic, AnalyticField, Profile, SeparableField};
use crate::mesh::Rect;
use crate::output::csv;
use crate::sparse::SparseLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCondition {
    /// `U(0)` is the L2 projection of `u0`.
    #[default]
    L2Projection,
    /// `U(0)` is the hypoelliptic projection of `u0`.
    HypoellipticProjection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialCondition,
    /// Keep every coefficient vector in the trajectory.
    pub keep_states: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            theta: 1.0,
            dt: 0.01,
            t_final: 8.0,
            initial: InitialCondition::L2Projection,
            keep_states: false,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::param("evolution", "theta", format!("must lie in [1/2, 1], got {}", self.theta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("evolution", "dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::param("evolution", "t_final", format!("must be >= dt, got {}", self.t_final)));
        }
        Ok(())
    }

    /// Number of steps; `t_final` is rounded to a whole number of steps.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// Energy `E = ||U||^2 + ||sqrt(A) grad U||^2` and its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepNorms {
    pub energy: f64,
    pub l2: f64,
    pub agrad: f64,
}

pub fn step_norms(system: &AssembledSystem, u: &[f64]) -> StepNorms {
    let l2sq = system.mass.bilinear(u, u).max(0.0);
    let asq = system.stiff_a.bilinear(u, u).max(0.0);
    StepNorms {
        energy: l2sq + asq,
        l2: l2sq.sqrt(),
        agrad: asq.sqrt(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub l2: Vec<f64>,
    pub agrad: Vec<f64>,
    /// Coefficient vectors, when requested.
    pub states: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `||U|| + ||sqrt(A) grad U||` per step.
    pub fn decay_quantity(&self) -> Vec<f64> {
        self.l2.iter().zip(&self.agrad).map(|(a, b)| a + b).collect()
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|n| vec![self.times[n], self.energy[n], self.l2[n], self.agrad[n]])
            .collect();
        csv(&["t", "energy", "l2", "agrad"], &rows)
    }
}

/// Runs the theta scheme
/// `(M_A + theta dt K) U^{n+1} = (M_A - (1 - theta) dt K) U^n + dt F(t^n + theta dt)`.
pub fn evolve(
    system: &AssembledSystem,
    config: &EvolveConfig,
    u0: &dyn AnalyticField,
    f: Option<&dyn AnalyticField>,
) -> Result<Trajectory> {
    evolve_with(system, config, u0, f, |_, _, _| Ok(()))
}

/// As [`evolve`], calling `observe(step, t, U)` on every state including
/// the initial one.
pub fn evolve_with(
    system: &AssembledSystem,
    config: &EvolveConfig,
    u0: &dyn AnalyticField,
    f: Option<&dyn AnalyticField>,
    mut observe: impl FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    config.validate()?;
    let space = &system.space;
    let (theta, dt) = (config.theta, config.dt);
    let mut u = match config.initial {
        InitialCondition::L2Projection => project_l2(space, u0, 0.0)?,
        InitialCondition::HypoellipticProjection => project_hypoelliptic(system, &Analytic(u0), 0.0)?,
    };

    let lhs = system.mass_a.lin_comb(1.0, &system.k, theta * dt);
    let rhs_mat = system.mass_a.lin_comb(1.0, &system.k, -(1.0 - theta) * dt);
    let lu = SparseLu::new(&lhs)
        .map_err(|e| Error::Solver(format!("evolution: factorizing M_A + theta dt K: {e}")))?;

    let steps = config.steps();
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, t: f64, u: &[f64]| {
        let n = step_norms(system, u);
        traj.times.push(t);
        traj.energy.push(n.energy);
        traj.l2.push(n.l2);
        traj.agrad.push(n.agrad);
        if config.keep_states {
            traj.states.push(u.to_vec());
        }
        n.energy
    };
    let e0 = record(&mut traj, 0.0, &u);
    observe(0, 0.0, &u)?;

    for n in 0..steps {
        let t = n as f64 * dt;
        let mut b = rhs_mat.mul_vec(&u);
        if let Some(f) = f {
            let load = assemble_load(space, &system.hypo, f, t + theta * dt);
            b.iter_mut().zip(&load).for_each(|(bi, li)| *bi += dt * li);
        }
        u = lu.solve(&b)?;
        let t1 = (n + 1) as f64 * dt;
        let e = record(&mut traj, t1, &u);
        if !e.is_finite() || (f.is_none() && e > 10.0 * e0 && e0 > 0.0) {
            return Err(Error::Analysis(format!(
                "evolution: energy blow-up at step {} (t = {t1}): E = {e:e}, E0 = {e0:e}",
                n + 1
            )));
        }
        observe(n + 1, t1, &u)?;
    }
    traj.final_state = u;
    Ok(traj)
}

/// Exact solution and matching forcing.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub id: String,
    pub u: SeparableField,
    pub f: SeparableField,
}

impl ManufacturedCase {
    /// The initial datum is `u(., 0)`.
    pub fn u0(&self) -> &SeparableField {
        &self.u
    }
}

pub const MANUFACTURED_IDS: [&str; 2] = ["poly", "sine"];

/// Manufactured solutions on `rect`:
///
/// - `poly`: `u = e^{-t} (x - x_lo)^3 (x_hi - x)^3 (y - y_lo)^2`. It vanishes
///   on the Dirichlet boundary, has `u_x = u_y = 0` on the bottom side and
///   `u_xx = u_xy = 0` on the vertical sides, so the extra boundary
///   conditions hold.
/// - `sine`: `u = e^{-t} sin(pi x) sin(pi y)`, which violates them.
pub fn build_manufactured_case(rect: Rect, id: &str) -> Result<ManufacturedCase> {
    let u = match id {
        "poly" => {
            let cube = |c: &[f64]| poly_mul(&poly_mul(c, c), c);
            let g = poly_mul(&cube(&[-rect.x_lo, 1.0]), &cube(&[rect.x_hi, -1.0]));
            let h = poly_mul(&[-rect.y_lo, 1.0], &[-rect.y_lo, 1.0]);
            SeparableField::new("poly", 1.0, vec![(Profile::poly(&g), Profile::poly(&h))], true)
        }
        "sine" => {
            let pi = std::f64::consts::PI;
            SeparableField::new("sine", 1.0, vec![(Profile::sin(pi), Profile::sin(pi))], false)
        }
        other => {
            return Err(Error::param(
                "evolution",
                "manufactured",
                format!("unknown case `{other}` (known: {})", MANUFACTURED_IDS.join(", ")),
            ))
        }
    };
    let f = u.kolmogorov_forcing();
    Ok(ManufacturedCase { id: id.to_string(), u, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypo::{HypoMatrix, PenaltyConfig, Scheme};
    use crate::mesh::generate_rect_mesh;
    use crate::space::FeSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn system(n: usize, p: usize) -> AssembledSystem {
        let mesh = Arc::new(generate_rect_mesh(Rect::UNIT, n, n, 0.1, 2).unwrap());
        let space = Arc::new(FeSpace::new(mesh, p).unwrap());
        let hypo = HypoMatrix::new(0.35060, Scheme::Parabolic).unwrap();
        AssembledSystem::new(space, hypo, PenaltyConfig::auto()).unwrap()
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let sys = system(4, 2);
        let cfg = EvolveConfig {
            t_final: 0.1,
            ..Default::default()
        };
        let tr = evolve(&sys, &cfg, &SeparableField::zero(), None).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.final_state.iter().all(|&v| v == 0.0));
        assert!(tr.energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn implicit_euler_energy_is_monotone() {
        let sys = system(6, 2);
        let case = build_manufactured_case(Rect::UNIT, "poly").unwrap();
        let cfg = EvolveConfig {
            t_final: 1.0,
            dt: 0.05,
            ..Default::default()
        };
        let tr = evolve(&sys, &cfg, case.u0(), None).unwrap();
        for w in tr.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * tr.energy[0]);
        }
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,energy,l2,agrad\n"));
        assert_eq!(csv.lines().count(), tr.len() + 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            EvolveConfig { theta: 0.3, ..Default::default() },
            EvolveConfig { dt: 0.0, ..Default::default() },
            EvolveConfig { t_final: 0.001, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn manufactured_case_properties() {
        let case = build_manufactured_case(Rect::UNIT, "poly").unwrap();
        let u = &case.u;
        assert!((u.jet([0.5, 1.0], 0.0).val - 0.015625).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (x, y, t) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen_range(0.0..2.0));
            let j = u.jet([x, y], t);
            let r = u.jet_dt([x, y], t).val - j.dxx + x * j.dy - case.f.jet([x, y], t).val;
            assert!(r.abs() < 1e-12);
        }
        for _ in 0..50 {
            let (s, t) = (rng.gen::<f64>(), rng.gen_range(0.0..2.0));
            for x in [0.0, 1.0] {
                let j = u.jet([x, s], t);
                assert!(j.val.abs() < 1e-12 && j.dxx.abs() < 1e-12 && j.dxy.abs() < 1e-12);
            }
            let b = u.jet([s, 0.0], t);
            assert!(b.val.abs() < 1e-12 && b.dx.abs() < 1e-12 && b.dy.abs() < 1e-12);
        }
        assert!(u.bc_compatible());
        assert!(!build_manufactured_case(Rect::UNIT, "sine").unwrap().u.bc_compatible());
        assert!(build_manufactured_case(Rect::UNIT, "nope").is_err());
    }

    #[test]
    fn crank_nicolson_time_error_is_second_order() {
        let sys = system(4, 2);
        let case = build_manufactured_case(Rect::UNIT, "poly").unwrap();
        let run = |dt: f64| {
            let cfg = EvolveConfig {
                theta: 0.5,
                dt,
                t_final: 0.4,
                // Crank-Nicolson does not damp stiff modes, so start on the
                // smooth discrete solution rather than the L2 projection.
                initial: InitialCondition::HypoellipticProjection,
                ..Default::default()
            };
            evolve(&sys, &cfg, case.u0(), Some(&case.f)).unwrap().final_state
        };
        let (a, b, c) = (run(0.04), run(0.02), run(0.01));
        let d = |x: &[f64], y: &[f64]| {
            let e: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            sys.mass_a.bilinear(&e, &e).sqrt()
        };
        let slope = (d(&a, &b) / d(&b, &c)).log2();
        assert!(slope >= 1.75, "observed order {slope}");
    }
}
