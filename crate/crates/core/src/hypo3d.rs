//! Matrix-level checks of the three-dimensional construction with drift
//! `(0, x, y)`: the matrix `A_3`, the shifted form `B~_3 = e1 e1^T + S A_3`,
//! its diagonal lower bound `B_3` and the split `B_3 = (B_3 - nu^2 A_3) + nu^2 A_3`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

/// Eigenvalues of `A_3` above this count as nonnegative.
pub const PSD_TOL_A3: f64 = -1e-14;
/// Tolerance for `sym(B~_3) - B_3`.
pub const PSD_TOL_GAP: f64 = -1e-12;
/// `lambda_min(B_3 - nu^2 A_3)` must exceed this.
pub const NU_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypo3Matrices {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub a3: Matrix3<f64>,
    /// Row shift: `(S A)_{i,:} = A_{i-1,:}`.
    pub s: Matrix3<f64>,
    pub e1: Vector3<f64>,
    pub b3_tilde: Matrix3<f64>,
    pub b3: Matrix3<f64>,
}

fn sym_eigenvalues(m: Matrix3<f64>) -> Vector3<f64> {
    let mut e = SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues;
    e.as_mut_slice().sort_by(f64::total_cmp);
    e
}

/// Builds all matrices for `alpha` in `(0, 1/17)`.
pub fn build_hypo3(alpha: f64) -> Result<Hypo3Matrices> {
    if !(alpha > 0.0 && alpha < 1.0 / 17.0) {
        return Err(Error::param("hypo3d", "alpha", format!("must lie in (0, 1/17), got {alpha}")));
    }
    let (beta1, beta2, gamma1, gamma2) = (alpha.powi(2), alpha.powi(3), 2.0 * alpha.powi(3), alpha.powi(3));
    #[rustfmt::skip]
    let a3 = Matrix3::new(
        alpha, beta1, 0.0,
        beta1, gamma1, beta2,
        0.0, beta2, gamma2,
    );
    #[rustfmt::skip]
    let s = Matrix3::new(
        0.0, 0.0, 0.0,
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    );
    let e1 = Vector3::x();
    let b3_tilde = e1 * e1.transpose() + s * a3;
    let b3 = Matrix3::from_diagonal(&Vector3::new(0.25, 0.25 * alpha * alpha, (1.0 - 17.0 * alpha) * alpha.powi(3)));
    let m = Hypo3Matrices { alpha, beta1, beta2, gamma1, gamma2, a3, s, e1, b3_tilde, b3 };
    let lo = m.a3_eigenvalues()[0];
    if lo < PSD_TOL_A3 {
        return Err(Error::Certificate(format!("hypo3d: A_3 not PSD at alpha = {alpha}: eigenvalue {lo:e}")));
    }
    Ok(m)
}

impl Hypo3Matrices {
    /// Ascending.
    pub fn a3_eigenvalues(&self) -> Vector3<f64> {
        sym_eigenvalues(self.a3)
    }

    /// `sym(B~_3) - B_3`.
    pub fn gap(&self) -> Matrix3<f64> {
        0.5 * (self.b3_tilde + self.b3_tilde.transpose()) - self.b3
    }

    /// `lambda_min(B_3 - nu^2 A_3)`.
    pub fn lambda_min_split(&self, nu: f64) -> f64 {
        sym_eigenvalues(self.b3 - nu * nu * self.a3)[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B3Check {
    pub alpha: f64,
    pub min_eigenvalue: f64,
    /// Leading principal minors of the gap matrix.
    pub leading_minors: [f64; 3],
    pub passed: bool,
}

pub fn check_b3_lower_bound(m: &Hypo3Matrices) -> B3Check {
    let g = m.gap();
    let minors = [
        g[(0, 0)],
        g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)],
        g.determinant(),
    ];
    let min_eigenvalue = sym_eigenvalues(g)[0];
    B3Check {
        alpha: m.alpha,
        min_eigenvalue,
        leading_minors: minors,
        passed: min_eigenvalue >= PSD_TOL_GAP,
    }
}

/// Checks `sym(B~_3) - B_3 >= 0` at every `alpha` of the grid.
pub fn verify_b3_lower_bound(alphas: &[f64]) -> Result<Vec<B3Check>> {
    alphas.iter().map(|&a| build_hypo3(a).map(|m| check_b3_lower_bound(&m))).collect()
}

/// First failing entry, if any, as an error.
pub fn first_b3_failure(checks: &[B3Check]) -> Result<()> {
    match checks.iter().find(|c| !c.passed) {
        None => Ok(()),
        Some(c) => Err(Error::Certificate(format!(
            "hypo3d: sym(B~_3) - B_3 is not PSD at alpha = {}: minimum eigenvalue {:e}",
            c.alpha, c.min_eigenvalue
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuSplit {
    /// Maximiser of `c3(nu) = min(lambda_min(B_3 - nu^2 A_3), nu^2)`.
    pub nu: f64,
    pub lambda_min: f64,
    pub c3: f64,
    /// Largest `nu` in `(0, 1]` with `lambda_min(B_3 - nu^2 A_3) > NU_FLOOR`.
    pub nu_max: f64,
}

const BISECTION_STEPS: usize = 200;

/// Bisects for `nu_max` and for the balance point `lambda_min = nu^2`.
pub fn find_nu(m: &Hypo3Matrices) -> Result<NuSplit> {
    let lam0 = m.lambda_min_split(0.0);
    if !(lam0 > NU_FLOOR) {
        return Err(Error::Certificate(format!(
            "hypo3d: lambda_min(B_3) = {lam0:e} at alpha = {}; no admissible nu",
            m.alpha
        )));
    }
    let bisect = |pred: &dyn Fn(f64) -> bool| {
        if pred(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        lo
    };
    let nu_max = bisect(&|nu| m.lambda_min_split(nu) > NU_FLOOR);
    let nu = bisect(&|nu| m.lambda_min_split(nu) > nu * nu).min(nu_max);
    let lambda_min = m.lambda_min_split(nu);
    if !(lambda_min > 0.0 && nu > 0.0) {
        return Err(Error::Certificate(format!("hypo3d: no admissible nu at alpha = {}", m.alpha)));
    }
    Ok(NuSplit {
        nu,
        lambda_min,
        c3: lambda_min.min(nu * nu),
        nu_max,
    })
}

/// `lo, lo + step, ..., hi` with the count rounded to absorb drift.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::param("hypo3d", "alpha-grid", format!("need lo <= hi and step > 0, got {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_entries_of_shifted_matrix() {
        let a = 0.05;
        let m = build_hypo3(a).unwrap();
        #[rustfmt::skip]
        let want = Matrix3::new(
            1.0, 0.0, 0.0,
            a, a * a, 0.0,
            a * a, 2.0 * a.powi(3), a.powi(3),
        );
        assert!((m.b3_tilde - want).abs().max() < 1e-16);
    }

    #[test]
    fn a3_is_psd_with_one_zero_eigenvalue() {
        let m = build_hypo3(0.05).unwrap();
        let e = m.a3_eigenvalues();
        assert!(e[0] >= PSD_TOL_A3 && e[0].abs() < 1e-15);
        assert!(e[1] > 0.0 && e[2] > 0.0);
        assert!(m.a3.determinant().abs() < 1e-20);
    }

    #[test]
    fn range_is_open() {
        assert!(build_hypo3(1.0 / 17.0).is_err());
        assert!(build_hypo3(0.0).is_err());
        assert!(build_hypo3(-0.01).is_err());
        assert!(build_hypo3(0.0588).is_ok());
    }

    #[test]
    fn leading_minors_at_five_hundredths() {
        let c = check_b3_lower_bound(&build_hypo3(0.05).unwrap());
        assert!(c.passed);
        // Closed form of the gap: [[3/4, a/2, a^2/2], [a/2, 3a^2/4, a^3], [a^2/2, a^3, 17 a^4]].
        let a: f64 = 0.05;
        let m2 = 0.75 * 0.75 * a * a - 0.25 * a * a;
        assert!((c.leading_minors[0] - 0.75).abs() < 1e-15);
        assert!((c.leading_minors[1] - m2).abs() < 1e-15);
        assert!((c.leading_minors[1] - 7.8e-4).abs() < 5e-6);
        assert!((c.leading_minors[2] - 7.5e-8).abs() < 5e-9, "{}", c.leading_minors[2]);
    }

    #[test]
    fn gap_tends_to_diagonal_limit() {
        let g = build_hypo3(1e-7).unwrap().gap();
        let lim = Matrix3::from_diagonal(&Vector3::new(0.75, 0.0, 0.0));
        assert!((g - lim).abs().max() < 1e-7);
        assert!(check_b3_lower_bound(&build_hypo3(1e-7).unwrap()).passed);
    }

    #[test]
    fn grid_sweep_passes() {
        let grid = alpha_grid(0.005, 0.055, 0.005).unwrap();
        assert_eq!(grid.len(), 11);
        let checks = verify_b3_lower_bound(&grid).unwrap();
        first_b3_failure(&checks).unwrap();
        for &a in &grid {
            let m = build_hypo3(a).unwrap();
            let s = find_nu(&m).unwrap();
            assert!(m.lambda_min_split(s.nu) > 0.0);
            assert!(m.lambda_min_split(s.nu_max) > NU_FLOOR);
            assert!(s.nu <= s.nu_max && s.c3 > 0.0);
        }
    }

    #[test]
    fn nu_zero_gives_diagonal_minimum() {
        let a: f64 = 0.03;
        let m = build_hypo3(a).unwrap();
        let want = 0.25f64.min(a * a / 4.0).min((1.0 - 17.0 * a) * a.powi(3));
        assert!((m.lambda_min_split(0.0) - want).abs() < 1e-16);
    }

    #[test]
    fn bad_grids() {
        assert!(alpha_grid(0.1, 0.05, 0.01).is_err());
        assert!(alpha_grid(0.01, 0.05, 0.0).is_err());
        assert_eq!(alpha_grid(0.01, 0.01, 0.1).unwrap(), vec![0.01]);
    }

    proptest! {
        #[test]
        fn shift_identity(a in 1e-4f64..0.0588) {
            let m = build_hypo3(a).unwrap();
            let mut want = m.s * m.a3;
            want[(0, 0)] += 1.0;
            prop_assert_eq!(m.b3_tilde, want);
            prop_assert_eq!(m.b3_tilde[(1, 0)], a);
            prop_assert_eq!(m.b3_tilde[(2, 1)], m.gamma1);
        }

        #[test]
        fn split_is_monotone_in_nu(a in 1e-3f64..0.058, n1 in 0.0f64..1.0, n2 in 0.0f64..1.0) {
            let m = build_hypo3(a).unwrap();
            let (lo, hi) = if n1 < n2 { (n1, n2) } else { (n2, n1) };
            prop_assert!(m.lambda_min_split(lo) >= m.lambda_min_split(hi) - 1e-15);
        }
    }
}
