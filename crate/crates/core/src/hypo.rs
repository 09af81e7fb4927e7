//! The weighting matrix `A`, the derived diagonal `B`, decay constants and
//! face penalties.

use crate::assembly::{assemble_plain_mass, assemble_plain_stiffness};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::SparseLu;
use crate::space::FeSpace;

/// Which `A` to build from `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// `beta = alpha^2`, `gamma = alpha^3`, `eps = 1/2`; singular `A`, so
    /// `v - div(A grad v)` is parabolic and `B = diag(1, alpha^2)`.
    Parabolic,
    /// `beta = 4 alpha^2 / 9`, `gamma = alpha^3 / 3`, `eps = 3/4`.
    Elliptic,
    Custom { beta: f64, gamma: f64, epsilon: f64 },
    /// `A = 0`: plain Galerkin for the Kolmogorov operator.
    Baseline,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Parabolic => "parabolic",
            Scheme::Elliptic => "elliptic",
            Scheme::Custom { .. } => "custom",
            Scheme::Baseline => "baseline",
        }
    }
}

/// Smallest eigenvalue of the symmetric matrix `[[a, b], [b, c]]`.
pub fn sym2_lambda_min(a: f64, b: f64, c: f64) -> f64 {
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    mean - r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypoMatrix {
    pub scheme: Scheme,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// `1 - beta / sqrt(alpha gamma)`; `A` is PSD iff it lies in `[0, 1]`.
    pub delta: f64,
    /// Diagonal of `B = diag(2(1 - eps), 2 beta - alpha^2 / (2 eps))`.
    pub b: [f64; 2],
    pub lambda_min_b_minus_a: f64,
}

impl HypoMatrix {
    pub fn new(alpha: f64, scheme: Scheme) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::param("hypo_params", "alpha", format!("must be >= 0, got {alpha}")));
        }
        let (beta, gamma, epsilon) = match scheme {
            Scheme::Parabolic => {
                if !(alpha > 0.0 && alpha < 0.5) {
                    return Err(Error::param(
                        "hypo_params",
                        "alpha",
                        format!("parabolic scheme needs 0 < alpha < 1/2, got {alpha}"),
                    ));
                }
                (alpha * alpha, alpha.powi(3), 0.5)
            }
            Scheme::Elliptic => {
                if alpha <= 0.0 {
                    return Err(Error::param("hypo_params", "alpha", "elliptic scheme needs alpha > 0"));
                }
                (4.0 * alpha * alpha / 9.0, alpha.powi(3) / 3.0, 0.75)
            }
            Scheme::Custom { beta, gamma, epsilon } => (beta, gamma, epsilon),
            Scheme::Baseline => (0.0, 0.0, 0.5),
        };
        let alpha = if scheme == Scheme::Baseline { 0.0 } else { alpha };
        if !(beta.is_finite() && beta >= 0.0 && gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::param("hypo_params", "beta/gamma", "must be finite and >= 0"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("hypo_params", "epsilon", format!("must lie in (0, 1), got {epsilon}")));
        }

        let delta = match scheme {
            // beta / sqrt(alpha gamma) = alpha^2 / alpha^2.
            Scheme::Parabolic => 0.0,
            _ if alpha * gamma > 0.0 => 1.0 - beta / (alpha * gamma).sqrt(),
            _ if beta == 0.0 => 1.0,
            _ => f64::NEG_INFINITY,
        };
        if !(-1e-14..=1.0).contains(&delta) {
            return Err(Error::param(
                "hypo_params",
                "beta",
                format!("A = [[{alpha}, {beta}], [{beta}, {gamma}]] is not positive semidefinite (delta = {delta})"),
            ));
        }

        let b = [2.0 * (1.0 - epsilon), 2.0 * beta - alpha * alpha / (2.0 * epsilon)];
        let lambda_min_b_minus_a = sym2_lambda_min(b[0] - alpha, -beta, b[1] - gamma);
        if scheme == Scheme::Parabolic && lambda_min_b_minus_a <= 0.0 {
            return Err(Error::param(
                "hypo_params",
                "alpha",
                format!("lambda_min(B - A) = {lambda_min_b_minus_a:e} is not positive"),
            ));
        }
        Ok(HypoMatrix {
            scheme,
            alpha,
            beta,
            gamma,
            epsilon,
            delta,
            b,
            lambda_min_b_minus_a,
        })
    }

    pub fn baseline() -> Self {
        HypoMatrix::new(0.0, Scheme::Baseline).expect("baseline parameters are valid")
    }

    pub fn is_baseline(&self) -> bool {
        self.scheme == Scheme::Baseline
    }

    /// Singular `A` makes `v - div(A grad v)` a parabolic operator.
    pub fn is_parabolic(&self) -> bool {
        self.delta.abs() <= 1e-14 && !self.is_baseline()
    }

    pub fn a(&self) -> [[f64; 2]; 2] {
        [[self.alpha, self.beta], [self.beta, self.gamma]]
    }

    /// `A v`.
    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.alpha * v[0] + self.beta * v[1], self.beta * v[0] + self.gamma * v[1]]
    }

    /// `u^T A v`.
    #[inline]
    pub fn form(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let av = self.apply(v);
        u[0] * av[0] + u[1] * av[1]
    }

    pub fn det_b_minus_a(&self) -> f64 {
        (self.b[0] - self.alpha) * (self.b[1] - self.gamma) - self.beta * self.beta
    }

    pub fn eigenvalues_a(&self) -> [f64; 2] {
        let lo = sym2_lambda_min(self.alpha, self.beta, self.gamma);
        [lo, self.alpha + self.gamma - lo]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRate {
    pub c0: f64,
    /// `min(1, c0)`.
    pub rate: f64,
}

pub fn decay_rate(hypo: &HypoMatrix, cpf: f64) -> Result<DecayRate> {
    decay_rate_from(hypo.lambda_min_b_minus_a, cpf)
}

pub fn decay_rate_from(lambda_min: f64, cpf: f64) -> Result<DecayRate> {
    if !(lambda_min > 0.0) {
        return Err(Error::param(
            "hypo_params",
            "lambda_min(B - A)",
            format!("must be positive, got {lambda_min:e}"),
        ));
    }
    if !(cpf > 0.0 && cpf.is_finite()) {
        return Err(Error::param("hypo_params", "C_PF", format!("must be positive, got {cpf:e}")));
    }
    let c0 = lambda_min / cpf;
    Ok(DecayRate { c0, rate: c0.min(1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMode {
    Fixed(f64),
    /// Computed from a trace inverse inequality on each face's neighbours.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub c_tau: PenaltyMode,
    pub kappa: f64,
    pub lambda: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            c_tau: PenaltyMode::Fixed(10.0),
            kappa: 0.0,
            lambda: 0.0,
        }
    }
}

impl PenaltyConfig {
    pub fn auto() -> Self {
        PenaltyConfig {
            c_tau: PenaltyMode::Auto,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PenaltyMode::Fixed(c) = self.c_tau {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::param("hypo_params", "C_tau", format!("must be positive, got {c}")));
            }
        }
        if !(self.kappa >= 0.0 && self.lambda >= 0.0) {
            return Err(Error::param("hypo_params", "kappa/lambda", "must be >= 0"));
        }
        Ok(())
    }
}

/// Penalty lower bound on one element for polynomial degree `p`.
///
/// For `q in P_m(T)`, `||q||^2_{dT} <= (m+1)(m+2)/2 |dT|/|T| ||q||^2_T`.
/// The penalised quantity `A grad(u_x)` has degree `p - 2`; the simpler
/// `(p+1)(p+2)/2 |dT| / (2|T|)` covers it up to `p = 5` and is kept as the
/// floor so low orders are unchanged.
fn element_trace_bound(mesh: &Mesh, t: usize, p: usize) -> f64 {
    let ratio = mesh.perimeter(t) / mesh.area(t);
    let pf = p as f64;
    let simple = (pf + 1.0) * (pf + 2.0) / 2.0 * ratio / 2.0;
    let sharp = (pf - 1.0) * pf / 2.0 * ratio;
    simple.max(sharp)
}

/// `tau_e = C_tau p^2 / h_avg(e)`.
pub fn face_penalty(config: &PenaltyConfig, p: usize, mesh: &Mesh, face: usize) -> f64 {
    let f = &mesh.faces()[face];
    match config.c_tau {
        PenaltyMode::Fixed(c) => c * (p * p) as f64 / f.h_avg,
        PenaltyMode::Auto => {
            let mut bound = element_trace_bound(mesh, f.owner, p);
            if let Some(n) = f.neighbor {
                bound = bound.max(element_trace_bound(mesh, n, p));
            }
            4.0 * bound
        }
    }
}

/// Penalty for every face, indexed like `mesh.faces()`.
pub fn penalty_table(config: &PenaltyConfig, p: usize, mesh: &Mesh) -> Vec<f64> {
    (0..mesh.num_faces()).map(|e| face_penalty(config, p, mesh, e)).collect()
}

/// Effective `C_tau = max_e tau_e h_avg(e) / p^2`.
pub fn effective_c_tau(table: &[f64], p: usize, mesh: &Mesh) -> f64 {
    table
        .iter()
        .zip(mesh.faces())
        .map(|(tau, f)| tau * f.h_avg / (p * p) as f64)
        .fold(0.0, f64::max)
}

const CPF_TOL: f64 = 1e-8;
const CPF_MAX_ITER: usize = 1000;

/// Discrete Poincare-Friedrichs constant `1 / lambda_1` of the generalized
/// problem `S u = lambda M u` on the free DOFs, by inverse iteration.
///
/// Under refinement this increases toward the continuous constant.
pub fn estimate_cpf(space: &FeSpace) -> Result<f64> {
    let n = space.num_free();
    if space.num_constrained() == 0 || n == 0 {
        return Err(Error::param("hypo_params", "space", "needs both constrained and free DOFs"));
    }
    let m = assemble_plain_mass(space);
    let s = assemble_plain_stiffness(space);
    let lu = SparseLu::new(&s)?;

    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mut lambda_old = f64::INFINITY;
    for _ in 0..CPF_MAX_ITER {
        let mx = m.mul_vec(&x);
        let mut y = lu.solve(&mx)?;
        let norm = m.bilinear(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let lambda = s.bilinear(&y, &y);
        x = y;
        if (lambda - lambda_old).abs() <= CPF_TOL * lambda {
            return Ok(1.0 / lambda);
        }
        lambda_old = lambda;
    }
    Err(Error::NoConvergence {
        what: "inverse iteration for C_PF",
        iterations: CPF_MAX_ITER,
    })
}
