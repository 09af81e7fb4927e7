//! The energy and triple norms.
//!
//! `|||w|||^2 = ||sqrt(B) grad w||^2 + int_out x n2 w^2
//!            + int_out x n2 grad w . A grad w + ||sqrt(A) grad_T w_x||^2
//!            + sum_e tau_e int_e [grad w]_1 . A [grad w]_1 + s1h(w, w)`
//!
//! where `out` is the outflow boundary, `[grad w]_1 = n1 (grad w+ - grad w-)`
//! runs over interior and elliptic faces, and `s1h` is the optional
//! numerical diffusion on interior faces.

use crate::assembly::{assemble_faces, assemble_volume, for_each_face_point, for_each_volume_point, AssembledSystem, QuadTables};
use crate::field::{DiscreteFunction, Jet, PiecewiseField};
use crate::hypo::{HypoMatrix, PenaltyConfig};
use crate::mesh::FaceKind;
use crate::sparse::CsrMatrix;
use crate::space::FeSpace;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormReport {
    /// `||w||`.
    pub l2: f64,
    /// `||sqrt(A) grad w||`.
    pub agrad: f64,
    /// Squared triple-norm components.
    pub b_grad: f64,
    pub outflow_l2: f64,
    pub outflow_agrad: f64,
    pub broken_hessian: f64,
    pub penalty: f64,
    pub s1h: f64,
}

impl NormReport {
    pub const COMPONENT_NAMES: [&'static str; 6] =
        ["b_grad", "outflow_l2", "outflow_agrad", "broken_hessian", "penalty", "s1h"];

    pub fn components(&self) -> [f64; 6] {
        [
            self.b_grad,
            self.outflow_l2,
            self.outflow_agrad,
            self.broken_hessian,
            self.penalty,
            self.s1h,
        ]
    }

    pub fn triple_sq(&self) -> f64 {
        self.components().iter().sum()
    }

    pub fn triple(&self) -> f64 {
        self.triple_sq().max(0.0).sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.l2 * self.l2 + self.agrad * self.agrad
    }
}

/// Volume parts `(B grad w . grad v, A grad w_x . grad v_x)`.
#[inline]
fn volume_parts(h: &HypoMatrix, w: &Jet, v: &Jet) -> [f64; 2] {
    [
        h.b[0] * w.dx * v.dx + h.b[1] * w.dy * v.dy,
        h.form(w.grad_x(), v.grad_x()),
    ]
}

/// Face parts `(outflow_l2, outflow_agrad, penalty, s1h)`.
#[inline]
fn face_parts(h: &HypoMatrix, kind: FaceKind, n: [f64; 2], tau: f64, pen: &PenaltyConfig, x: f64, w: &[Jet; 2], v: &[Jet; 2]) -> [f64; 4] {
    let xn2 = x * n[1];
    match kind {
        FaceKind::Outflow => [xn2 * w[0].val * v[0].val, xn2 * h.form(w[0].grad(), v[0].grad()), 0.0, 0.0],
        FaceKind::Elliptic => {
            let jw = [n[0] * w[0].dx, n[0] * w[0].dy];
            let jv = [n[0] * v[0].dx, n[0] * v[0].dy];
            [0.0, 0.0, tau * h.form(jw, jv), 0.0]
        }
        FaceKind::Interior => {
            let jw = [w[0].dx - w[1].dx, w[0].dy - w[1].dy];
            let jv = [v[0].dx - v[1].dx, v[0].dy - v[1].dy];
            let pen_part = tau * n[0] * n[0] * h.form(jw, jv);
            let s1 = 0.5 * xn2.abs() * (pen.kappa * jw[0] * jv[0] + pen.lambda * jw[1] * jv[1]);
            [0.0, 0.0, pen_part, s1]
        }
        FaceKind::Inflow => [0.0; 4],
    }
}

/// Norms of an arbitrary piecewise field at time `t`, by quadrature.
pub fn field_norms(
    space: &FeSpace,
    hypo: &HypoMatrix,
    penalty: &PenaltyConfig,
    taus: &[f64],
    field: &dyn PiecewiseField,
    t: f64,
    tables: &QuadTables,
) -> NormReport {
    let mut r = NormReport::default();
    let (mut l2sq, mut asq) = (0.0, 0.0);
    for el in 0..space.mesh().num_triangles() {
        for_each_volume_point(space, tables, el, |p, w| {
            let j = field.jet_at(p, t);
            l2sq += w * j.val * j.val;
            asq += w * hypo.form(j.grad(), j.grad());
            let [b, hs] = volume_parts(hypo, &j, &j);
            r.b_grad += w * b;
            r.broken_hessian += w * hs;
        });
    }
    for (e, face) in space.mesh().faces().iter().enumerate() {
        if face.kind == FaceKind::Inflow {
            continue;
        }
        for_each_face_point(space, tables, e, |x, w, own, nb| {
            let j = [
                field.jet_at(&own.at(x), t),
                nb.map_or(Jet::ZERO, |s| field.jet_at(&s.at(x), t)),
            ];
            let parts = face_parts(hypo, face.kind, face.normal, taus[e], penalty, x[0], &j, &j);
            r.outflow_l2 += w * parts[0];
            r.outflow_agrad += w * parts[1];
            r.penalty += w * parts[2];
            r.s1h += w * parts[3];
        });
    }
    r.l2 = l2sq.max(0.0).sqrt();
    r.agrad = asq.max(0.0).sqrt();
    r
}

/// Norms of the discrete function with free-DOF coefficients `coeffs`.
pub fn compute_norms(system: &AssembledSystem, coeffs: &[f64]) -> NormReport {
    let space = &system.space;
    let tables = QuadTables::standard(space.basis());
    let f = DiscreteFunction::new(space, coeffs);
    field_norms(space, &system.hypo, &system.penalty, &system.taus, &f, 0.0, &tables)
}

/// Matrix `N` with `V^T N V = |||V|||^2` on the free DOFs.
pub fn triple_norm_matrix(system: &AssembledSystem) -> CsrMatrix {
    let space = &system.space;
    let h = &system.hypo;
    let tables = QuadTables::standard(space.basis());
    let mut b = assemble_volume(space, &tables, |_, w, v| volume_parts(h, w, v).iter().sum());
    let faces = space.mesh().faces();
    assemble_faces(
        space,
        &tables,
        &mut b,
        |e| faces[e].kind != FaceKind::Inflow,
        |e, x, w, v| {
            let f = &faces[e];
            face_parts(h, f.kind, f.normal, system.taus[e], &system.penalty, x, w, v).iter().sum()
        },
    );
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypo::{PenaltyMode, Scheme};
    use crate::mesh::{generate_rect_mesh, Rect};
    use crate::testing::{face_points, random_vec, trace, volume_points};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn system(nx: usize, perturb: f64, p: usize, pen: PenaltyConfig) -> AssembledSystem {
        let mesh = Arc::new(generate_rect_mesh(Rect::UNIT, nx, nx, perturb, 8).unwrap());
        let space = Arc::new(FeSpace::new(mesh, p).unwrap());
        AssembledSystem::new(space, HypoMatrix::new(0.3, Scheme::Parabolic).unwrap(), pen).unwrap()
    }

    /// Components from first principles with independent quadrature.
    fn oracle(sys: &AssembledSystem, c: &[f64]) -> [f64; 6] {
        let s = &sys.space;
        let h = &sys.hypo;
        let mut out = [0.0; 6];
        for (x, w, t) in volume_points(s) {
            let j = trace(s, c, t, x);
            out[0] += w * (h.b[0] * j.dx.powi(2) + h.b[1] * j.dy.powi(2));
            let (a, b, g) = (h.alpha, h.beta, h.gamma);
            out[3] += w * (a * j.dxx.powi(2) + 2.0 * b * j.dxx * j.dxy + g * j.dxy.powi(2));
        }
        for (e, f) in s.mesh().faces().iter().enumerate() {
            for (x, w) in face_points(s, e) {
                let p = trace(s, c, f.owner, x);
                let (n1, n2) = (f.normal[0], f.normal[1]);
                match f.kind {
                    FaceKind::Outflow => {
                        out[1] += w * x[0] * n2 * p.val.powi(2);
                        out[2] += w * x[0] * n2 * h.form(p.grad(), p.grad());
                    }
                    FaceKind::Elliptic => {
                        let j = [n1 * p.dx, n1 * p.dy];
                        out[4] += w * sys.taus[e] * h.form(j, j);
                    }
                    FaceKind::Interior => {
                        let m = trace(s, c, f.neighbor.unwrap(), x);
                        let j = [n1 * (p.dx - m.dx), n1 * (p.dy - m.dy)];
                        out[4] += w * sys.taus[e] * h.form(j, j);
                        out[5] += w
                            * 0.5
                            * (x[0] * n2).abs()
                            * (sys.penalty.kappa * (p.dx - m.dx).powi(2) + sys.penalty.lambda * (p.dy - m.dy).powi(2));
                    }
                    FaceKind::Inflow => {}
                }
            }
        }
        out
    }

    #[test]
    fn components_match_dense_integrator() {
        let pen = PenaltyConfig {
            c_tau: PenaltyMode::Auto,
            kappa: 0.5,
            lambda: 0.25,
        };
        let sys = system(1, 0.0, 2, pen);
        let sys3 = system(3, 0.2, 3, pen);
        for (sys, seed) in [(&sys, 1), (&sys3, 2)] {
            let c = random_vec(sys.num_free(), seed);
            let got = compute_norms(sys, &c).components();
            let want = oracle(sys, &c);
            let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..6 {
                assert!((got[k] - want[k]).abs() <= 1e-10 * scale, "{}: {} vs {}", NormReport::COMPONENT_NAMES[k], got[k], want[k]);
            }
        }
    }

    #[test]
    fn matrix_form_agrees_with_quadrature() {
        let sys = system(3, 0.2, 2, PenaltyConfig { kappa: 1.0, lambda: 1.0, ..PenaltyConfig::auto() });
        let n = triple_norm_matrix(&sys);
        assert!(n.asymmetry() <= 1e-12 * n.max_abs());
        for seed in 0..5 {
            let c = random_vec(sys.num_free(), seed);
            let q = compute_norms(&sys, &c).triple_sq();
            assert!((n.bilinear(&c, &c) - q).abs() <= 1e-11 * q);
        }
    }

    #[test]
    fn zero_function_has_zero_norms() {
        let sys = system(2, 0.0, 2, PenaltyConfig::auto());
        let r = compute_norms(&sys, &vec![0.0; sys.num_free()]);
        assert_eq!(r, NormReport::default());
    }

    #[test]
    fn triple_norm_dominates_gradient() {
        let sys = system(4, 0.2, 2, PenaltyConfig::auto());
        let h = sys.hypo;
        let stiff = crate::assembly::assemble_plain_stiffness(&sys.space);
        for seed in 0..10 {
            let c = random_vec(sys.num_free(), seed);
            let r = compute_norms(&sys, &c);
            assert!(r.components().iter().all(|&v| v >= -1e-12));
            let grad = stiff.bilinear(&c, &c);
            assert!(r.triple_sq() >= r.b_grad);
            assert!(r.b_grad >= h.b[0].min(h.b[1]) * grad * (1.0 - 1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn homogeneity(seed in 0u64..1000, scale in -3.0f64..3.0) {
            let sys = system(2, 0.1, 2, PenaltyConfig::auto());
            let c = random_vec(sys.num_free(), seed);
            let sc: Vec<f64> = c.iter().map(|v| scale * v).collect();
            let (a, b) = (compute_norms(&sys, &c), compute_norms(&sys, &sc));
            prop_assert!((b.triple() - scale.abs() * a.triple()).abs() <= 1e-12 * (1.0 + b.triple()));
            for (x, y) in a.components().iter().zip(b.components()) {
                prop_assert!((y - scale * scale * x).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
