//! Sampled and exact lower bounds for `B(V, V) / |||V|||^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::norms::triple_norm_matrix;
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::hypo::PenaltyMode;

/// Coercivity holds with constant one half.
pub const CERTIFICATE_THRESHOLD: f64 = 0.5 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub samples: usize,
    pub seed: u64,
    pub min_ratio: f64,
    /// Index of the sample attaining `min_ratio`.
    pub worst_sample: usize,
    pub passed: bool,
    /// Description of the parameter set, used in diagnostics.
    pub parameters: String,
}

impl CoercivityReport {
    /// Turns a failed certificate into an error.
    pub fn check(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        Err(Error::Certificate(format!(
            "coercivity ratio {:.6} < 0.5 at sample {} (seed {}) for {}; increase C_tau or use the auto penalty",
            self.min_ratio, self.worst_sample, self.seed, self.parameters
        )))
    }
}

fn describe(system: &AssembledSystem) -> String {
    let mesh = system.space.mesh();
    let pen = match system.penalty.c_tau {
        PenaltyMode::Auto => "auto".to_string(),
        PenaltyMode::Fixed(c) => format!("{c}"),
    };
    format!(
        "scheme={} alpha={} p={} triangles={} C_tau={} kappa={} lambda={}",
        system.hypo.scheme.name(),
        system.hypo.alpha,
        system.space.degree(),
        mesh.num_triangles(),
        pen,
        system.penalty.kappa,
        system.penalty.lambda
    )
}

fn refuse_baseline(system: &AssembledSystem) -> Result<()> {
    if system.hypo.is_baseline() {
        return Err(Error::Certificate("baseline mode has no coercivity certificate".into()));
    }
    Ok(())
}

/// `V^T K V / |||V|||^2` for one free-DOF vector.
pub fn coercivity_ratio(system: &AssembledSystem, v: &[f64]) -> Result<f64> {
    refuse_baseline(system)?;
    let n = triple_norm_matrix(system);
    Ok(system.k.bilinear(v, v) / n.bilinear(v, v))
}

/// Minimum of `V^T K V / |||V|||^2` over `n_samples` seeded random vectors
/// with entries uniform in `[-1, 1]`.
pub fn coercivity_certificate(system: &AssembledSystem, n_samples: usize, seed: u64) -> Result<CoercivityReport> {
    refuse_baseline(system)?;
    if n_samples < 100 {
        return Err(Error::param("analysis", "n_samples", format!("must be >= 100, got {n_samples}")));
    }
    let n = triple_norm_matrix(system);
    let dim = system.num_free();
    if dim == 0 {
        return Err(Error::Certificate("no free degrees of freedom".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; dim];
    let (mut min_ratio, mut worst) = (f64::INFINITY, 0);
    for s in 0..n_samples {
        v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0));
        let r = system.k.bilinear(&v, &v) / n.bilinear(&v, &v);
        if !(r >= min_ratio) {
            min_ratio = r;
            worst = s;
        }
    }
    Ok(CoercivityReport {
        samples: n_samples,
        seed,
        min_ratio,
        worst_sample: worst,
        passed: min_ratio >= CERTIFICATE_THRESHOLD,
        parameters: describe(system),
    })
}

/// Exact `min_V V^T K V / V^T N V` from the dense symmetric generalized
/// eigenproblem. Limited to `max_dofs` free DOFs.
pub fn exact_coercivity_bound(system: &AssembledSystem, max_dofs: usize) -> Result<f64> {
    refuse_baseline(system)?;
    let dim = system.num_free();
    if dim == 0 || dim > max_dofs {
        return Err(Error::param("analysis", "max_dofs", format!("{dim} free DOFs, limit {max_dofs}")));
    }
    let n = triple_norm_matrix(system).to_dense();
    let k = system.k.to_dense();
    let ks = (&k + k.transpose()) * 0.5;
    let chol = nalgebra::Cholesky::new(n)
        .ok_or_else(|| Error::Certificate("triple-norm matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(dim, dim))
        .ok_or_else(|| Error::Certificate("singular triple-norm factor".into()))?;
    let c = &linv * ks * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(SymmetricEigen::new(c).eigenvalues.min())
}
