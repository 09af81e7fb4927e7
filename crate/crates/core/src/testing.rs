//! Brute-force reference integrators used only by unit tests. They evaluate
//! the forms straight from their definitions with their own quadrature and
//! locate face traces by inverting each element map, so they share no
//! tabulation or orientation logic with the assembly code.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{gauss_legendre, Quadrature};
use crate::field::{DiscreteFunction, EvalPoint, Jet, PiecewiseField};
use crate::hypo::{HypoMatrix, PenaltyConfig};
use crate::mesh::{FaceKind, Point};
use crate::space::FeSpace;

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn amat(h: &HypoMatrix) -> Matrix2<f64> {
    Matrix2::new(h.alpha, h.beta, h.beta, h.gamma)
}

/// Value and physical gradient of local basis function `i` at a reference
/// point, via an explicitly inverted Jacobian.
fn value_grad(space: &FeSpace, t: usize, r: [f64; 2], i: usize) -> (f64, Vector2<f64>) {
    let [a, b, c] = space.mesh().triangle_points(t);
    let jac = Matrix2::new(b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]);
    let jit = jac.try_inverse().unwrap().transpose();
    let bp = space.basis().eval(r[0], r[1]);
    (bp.values[i], jit * Vector2::new(bp.grads[i][0], bp.grads[i][1]))
}

pub fn oracle_element_mass_a(space: &FeSpace, h: &HypoMatrix, t: usize) -> Vec<f64> {
    let n = space.local_dofs();
    let quad = Quadrature::triangle(2 * space.degree() + 6);
    let det = space.element_map(t).det.abs();
    let a = amat(h);
    let mut out = vec![0.0; n * n];
    for (q, &r) in quad.points.iter().enumerate() {
        let w = quad.weights[q] * det;
        for i in 0..n {
            let (vi, gi) = value_grad(space, t, r, i);
            for j in 0..n {
                let (vj, gj) = value_grad(space, t, r, j);
                out[i * n + j] += w * (vi * vj + gi.dot(&(a * gj)));
            }
        }
    }
    out
}

/// Jet of a discrete function at a physical point inside element `t`.
pub fn trace(space: &FeSpace, coeffs: &[f64], t: usize, x: Point) -> Jet {
    let r = space.element_map(t).to_reference(x);
    let bp = space.basis().eval(r[0], r[1]);
    DiscreteFunction::new(space, coeffs).jet_at(&EvalPoint { elem: t, x, basis: &bp }, 0.0)
}

/// `(x, weight)` Gauss points on face `e`.
pub fn face_points(space: &FeSpace, e: usize) -> Vec<(Point, f64)> {
    let mesh = space.mesh();
    let f = &mesh.faces()[e];
    let [a, b] = f.vertices.map(|v| mesh.vertices()[v]);
    let (s, w) = gauss_legendre(space.degree() + 5);
    s.iter()
        .zip(&w)
        .map(|(&s, &w)| ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], w * f.length))
        .collect()
}

/// `(x, weight, element)` volume points.
pub fn volume_points(space: &FeSpace) -> Vec<(Point, f64, usize)> {
    let quad = Quadrature::triangle(2 * space.degree() + 6);
    let mut out = Vec::new();
    for t in 0..space.mesh().num_triangles() {
        let map = space.element_map(t);
        for (q, &r) in quad.points.iter().enumerate() {
            out.push((map.to_physical(r), quad.weights[q] * map.det.abs(), t));
        }
    }
    out
}

fn g(j: &Jet) -> Vector2<f64> {
    Vector2::new(j.dx, j.dy)
}

fn gx(j: &Jet) -> Vector2<f64> {
    Vector2::new(j.dxx, j.dxy)
}

/// `B(w, v)` for two discrete functions, straight from the definition.
pub fn oracle_bform(space: &FeSpace, h: &HypoMatrix, pen: &PenaltyConfig, taus: &[f64], w: &[f64], v: &[f64]) -> f64 {
    let a = amat(h);
    let mut total = 0.0;
    for (x, wt, t) in volume_points(space) {
        let (wj, vj) = (trace(space, w, t, x), trace(space, v, t, x));
        let grad_xwy = Vector2::new(wj.dy + x[0] * wj.dxy, x[0] * wj.dyy);
        total += wt
            * (wj.dx * vj.dx
                + x[0] * wj.dy * vj.val
                + (a * gx(&wj)).dot(&gx(&vj))
                + grad_xwy.dot(&(a * g(&vj))));
    }
    let mesh = space.mesh();
    for (e, f) in mesh.faces().iter().enumerate() {
        let n = Vector2::new(f.normal[0], f.normal[1]);
        let b = |x: Point| Vector2::new(0.0, x[0]);
        for (x, wt) in face_points(space, e) {
            let (wp, vp) = (trace(space, w, f.owner, x), trace(space, v, f.owner, x));
            let s = match (f.kind, f.neighbor) {
                (FaceKind::Interior, Some(nb)) => {
                    let (wm, vm) = (trace(space, w, nb, x), trace(space, v, nb, x));
                    let jump_w = g(&wp) - g(&wm);
                    let jump_v = g(&vp) - g(&vm);
                    let avg_v = 0.5 * (g(&vp) + g(&vm));
                    // [grad w]_1 = n1+ grad w+ + n1- grad w-, with n- = -n+.
                    let j1w = n[0] * g(&wp) + (-n[0]) * g(&wm);
                    let j1v = n[0] * g(&vp) + (-n[0]) * g(&vm);
                    let avg_awx = a * (0.5 * (gx(&wp) + gx(&wm)));
                    let avg_avx = a * (0.5 * (gx(&vp) + gx(&vm)));
                    let bn = b(x).dot(&n);
                    -bn * jump_w.dot(&(a * avg_v))
                        + 0.5 * bn.abs() * (pen.kappa * jump_w[0] * jump_v[0] + pen.lambda * jump_w[1] * jump_v[1])
                        - avg_awx.dot(&j1v)
                        - avg_avx.dot(&j1w)
                        + taus[e] * j1w.dot(&(a * j1v))
                }
                (FaceKind::Inflow, _) => -b(x).dot(&n) * g(&wp).dot(&(a * g(&vp))),
                (FaceKind::Elliptic, _) => {
                    let j1w = n[0] * g(&wp);
                    let j1v = n[0] * g(&vp);
                    -(a * gx(&wp)).dot(&j1v) - (a * gx(&vp)).dot(&j1w) + taus[e] * j1w.dot(&(a * j1v))
                }
                _ => 0.0,
            };
            total += wt * s;
        }
    }
    total
}
