//! Lagrange bases on the reference triangle and the quadrature rules used
//! to integrate against them.
//!
//! The reference triangle has vertices `(0,0)`, `(1,0)`, `(0,1)`. Local
//! nodes are ordered vertices first, then the `p - 1` interior nodes of each
//! edge `k` (from local vertex `k` towards `k + 1`), then interior nodes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[0, 1]` with `n` points, weights summing to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Volume rule on the reference triangle. Weights sum to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl Quadrature {
    /// Collapsed (Duffy) tensor Gauss rule exact for total degree `degree`.
    pub fn triangle(degree: usize) -> Self {
        // The collapse adds one power of (1 - v) to the v-direction.
        let n = (degree + 2).div_ceil(2);
        let (s, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&v, &wv) in s.iter().zip(&w) {
            for (&u, &wu) in s.iter().zip(&w) {
                points.push([u * (1.0 - v), v]);
                weights.push(wu * wv * (1.0 - v));
            }
        }
        Quadrature { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [u, v] = self.points[q];
        [1.0 - u - v, u, v]
    }
}

/// Gauss rule on the unit interval used for face integrals.
#[derive(Debug, Clone)]
pub struct EdgeQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl EdgeQuadrature {
    pub fn gauss(npts: usize) -> Self {
        let (points, weights) = gauss_legendre(npts);
        EdgeQuadrature {
            points,
            weights,
            degree: 2 * npts - 1,
        }
    }

    /// Smallest Gauss rule exact for `degree`.
    pub fn exact_to(degree: usize) -> Self {
        Self::gauss(degree / 2 + 1)
    }
}

/// Volume rule exact to degree `2p + 2` and a `ceil((2p + 3) / 2)`-point
/// Gauss rule for faces.
pub fn build_quadrature(p: usize) -> (Quadrature, EdgeQuadrature) {
    (Quadrature::triangle(2 * p + 2), EdgeQuadrature::gauss((2 * p + 3).div_ceil(2)))
}

/// Values and reference derivatives of every basis function at one point.
#[derive(Debug, Clone, Default)]
pub struct BasisPoint {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    /// Second derivatives `(xx, xy, yy)`.
    pub hessians: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// Column `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
}

impl ReferenceBasis {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("fem_basis", "p", format!("degree must be >= 2, got {p}")));
        }
        let nodes = lattice_nodes(p);
        let exponents: Vec<(i32, i32)> = (0..=p as i32)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let n = nodes.len();
        debug_assert_eq!(n, exponents.len());
        let vandermonde = DMatrix::from_fn(n, n, |j, k| {
            let (a, b) = exponents[k];
            nodes[j][0].powi(a) * nodes[j][1].powi(b)
        });
        let coeffs = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular Lagrange Vandermonde matrix".into()))?;
        Ok(ReferenceBasis {
            degree: p,
            nodes,
            exponents,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Evaluates all basis functions and their first and second reference
    /// derivatives at `(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> BasisPoint {
        let nm = self.exponents.len();
        let mut m = vec![[0.0; 6]; nm];
        for (k, &(a, b)) in self.exponents.iter().enumerate() {
            let pw = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
            let (af, bf) = (a as f64, b as f64);
            m[k] = [
                pw(u, a) * pw(v, b),
                af * pw(u, a - 1) * pw(v, b),
                bf * pw(u, a) * pw(v, b - 1),
                af * (af - 1.0) * pw(u, a - 2) * pw(v, b),
                af * bf * pw(u, a - 1) * pw(v, b - 1),
                bf * (bf - 1.0) * pw(u, a) * pw(v, b - 2),
            ];
        }
        let mut out = BasisPoint {
            values: vec![0.0; nm],
            grads: vec![[0.0; 2]; nm],
            hessians: vec![[0.0; 3]; nm],
        };
        for i in 0..nm {
            let mut acc = [0.0; 6];
            for (k, mk) in m.iter().enumerate() {
                let c = self.coeffs[(k, i)];
                for d in 0..6 {
                    acc[d] += c * mk[d];
                }
            }
            out.values[i] = acc[0];
            out.grads[i] = [acc[1], acc[2]];
            out.hessians[i] = [acc[3], acc[4], acc[5]];
        }
        out
    }

    /// Evaluates the basis at every point of a volume rule.
    pub fn tabulate(&self, quad: &Quadrature) -> Vec<BasisPoint> {
        quad.points.iter().map(|&[u, v]| self.eval(u, v)).collect()
    }
}

/// Equispaced lattice in the local node order described in the module docs.
fn lattice_nodes(p: usize) -> Vec<[f64; 2]> {
    let h = 1.0 / p as f64;
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut nodes = verts.to_vec();
    for k in 0..3 {
        let (a, b) = (verts[k], verts[(k + 1) % 3]);
        for s in 1..p {
            let t = s as f64 * h;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    for j in 1..p {
        for i in 1..p - j {
            nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of u^a v^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn dimensions_and_degree_checks() {
        assert_eq!(ReferenceBasis::new(2).unwrap().len(), 6);
        assert_eq!(ReferenceBasis::new(3).unwrap().len(), 10);
        assert_eq!(ReferenceBasis::new(5).unwrap().len(), 21);
        assert!(ReferenceBasis::new(1).is_err());
        assert!(ReferenceBasis::new(0).is_err());
    }

    #[test]
    fn kronecker_and_partition_of_unity() {
        for p in 2..=5 {
            let basis = ReferenceBasis::new(p).unwrap();
            for (j, node) in basis.nodes().iter().enumerate() {
                let bp = basis.eval(node[0], node[1]);
                for (i, &v) in bp.values.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-10, "p={p} i={i} j={j} v={v}");
                }
            }
            let bp = basis.eval(0.23, 0.41);
            assert!((bp.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let gsum = bp.grads.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
            assert!(gsum[0].abs() < 1e-10 && gsum[1].abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_hessians_are_constant() {
        let basis = ReferenceBasis::new(2).unwrap();
        let a = basis.eval(0.1, 0.2);
        let b = basis.eval(0.6, 0.3);
        for (ha, hb) in a.hessians.iter().zip(&b.hessians) {
            for d in 0..3 {
                assert!((ha[d] - hb[d]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let basis = ReferenceBasis::new(3).unwrap();
        let (u, v, h) = (0.31, 0.27, 1e-5);
        let c = basis.eval(u, v);
        let (pu, mu) = (basis.eval(u + h, v), basis.eval(u - h, v));
        let (pv, mv) = (basis.eval(u, v + h), basis.eval(u, v - h));
        for i in 0..basis.len() {
            let du = (pu.values[i] - mu.values[i]) / (2.0 * h);
            let dv = (pv.values[i] - mv.values[i]) / (2.0 * h);
            assert!((du - c.grads[i][0]).abs() < 1e-6);
            assert!((dv - c.grads[i][1]).abs() < 1e-6);
            let duu = (pu.grads[i][0] - mu.grads[i][0]) / (2.0 * h);
            let duv = (pv.grads[i][0] - mv.grads[i][0]) / (2.0 * h);
            let dvv = (pv.grads[i][1] - mv.grads[i][1]) / (2.0 * h);
            assert!((duu - c.hessians[i][0]).abs() < 1e-5);
            assert!((duv - c.hessians[i][1]).abs() < 1e-5);
            assert!((dvv - c.hessians[i][2]).abs() < 1e-5);
        }
    }

    #[test]
    fn volume_rule_exactness() {
        for p in 2..=4 {
            let (quad, _) = build_quadrature(p);
            assert!(quad.degree >= 2 * p + 2);
            assert!(quad.weights.iter().all(|&w| w > 0.0));
            assert!((quad.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for total in 0..=quad.degree as u32 {
                for b in 0..=total {
                    let a = total - b;
                    let approx: f64 = quad
                        .points
                        .iter()
                        .zip(&quad.weights)
                        .map(|(pt, w)| w * pt[0].powi(a as i32) * pt[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((approx - exact).abs() <= 1e-13 * exact, "p={p} a={a} b={b}");
                }
            }
        }
        // x^3 y^3: 3! 3! / 8! = 36 / 40320.
        let quad = Quadrature::triangle(6);
        let approx: f64 = quad.points.iter().zip(&quad.weights).map(|(pt, w)| w * (pt[0] * pt[1]).powi(3)).sum();
        assert!((approx - 36.0 / 40320.0).abs() < 1e-17);
    }

    #[test]
    fn edge_rule_exactness() {
        for p in 2..=4 {
            let (_, edge) = build_quadrature(p);
            assert_eq!(edge.points.len(), (2 * p + 3).div_ceil(2));
            for k in 0..=edge.degree as i32 {
                let approx: f64 = edge.points.iter().zip(&edge.weights).map(|(s, w)| w * s.powi(k)).sum();
                assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }
}
