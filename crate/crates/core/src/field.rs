//! Scalar fields on the mesh: closed-form space-time fields and discrete
//! finite element functions, both evaluated together with first and second
//! derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use crate::basis::BasisPoint;
use crate::mesh::Point;
use crate::space::FeSpace;

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub val: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        val: 0.0,
        dx: 0.0,
        dy: 0.0,
        dxx: 0.0,
        dxy: 0.0,
        dyy: 0.0,
    };

    pub fn grad(&self) -> [f64; 2] {
        [self.dx, self.dy]
    }

    /// Gradient of the x-derivative, `(w_xx, w_xy)`.
    pub fn grad_x(&self) -> [f64; 2] {
        [self.dxx, self.dxy]
    }

    fn zip(self, o: Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            val: f(self.val, o.val),
            dx: f(self.dx, o.dx),
            dy: f(self.dy, o.dy),
            dxx: f(self.dxx, o.dxx),
            dxy: f(self.dxy, o.dxy),
            dyy: f(self.dyy, o.dyy),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.zip(j, |a, _| self * a)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -1.0 * self
    }
}

/// A field known in closed form on the whole domain.
pub trait AnalyticField: Send + Sync {
    fn name(&self) -> &str;
    fn jet(&self, p: Point, t: f64) -> Jet;
    /// Jet of the time derivative.
    fn jet_dt(&self, p: Point, t: f64) -> Jet;
    /// Whether the field satisfies the extra boundary conditions under which
    /// the exact solution solves the discrete equations: `n1 grad(u_x) = 0`
    /// on the elliptic and outflow boundary and `x n2 grad(u) = 0` on the
    /// inflow boundary.
    fn bc_compatible(&self) -> bool;
}

/// A point inside element `elem`, with the reference basis tabulated there.
pub struct EvalPoint<'a> {
    pub elem: usize,
    pub x: Point,
    pub basis: &'a BasisPoint,
}

/// A field that may be discontinuous across element boundaries; face traces
/// are taken from the element named in the evaluation point.
pub trait PiecewiseField {
    fn jet_at(&self, at: &EvalPoint, t: f64) -> Jet;
    fn jet_dt_at(&self, at: &EvalPoint, t: f64) -> Jet;
}

impl<F: AnalyticField + ?Sized> PiecewiseField for F {
    fn jet_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.jet(at.x, t)
    }
    fn jet_dt_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.jet_dt(at.x, t)
    }
}

/// Views a trait-object analytic field as a piecewise one.
pub struct Analytic<'a>(pub &'a dyn AnalyticField);

impl PiecewiseField for Analytic<'_> {
    fn jet_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.0.jet(at.x, t)
    }
    fn jet_dt_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.0.jet_dt(at.x, t)
    }
}

/// `a - b`, evaluated pointwise.
pub struct Difference<'a>(pub &'a dyn PiecewiseField, pub &'a dyn PiecewiseField);

impl PiecewiseField for Difference<'_> {
    fn jet_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.0.jet_at(at, t) - self.1.jet_at(at, t)
    }
    fn jet_dt_at(&self, at: &EvalPoint, t: f64) -> Jet {
        self.0.jet_dt_at(at, t) - self.1.jet_dt_at(at, t)
    }
}

/// A finite element function given by its free-DOF coefficients; constant in
/// time.
pub struct DiscreteFunction<'a> {
    space: &'a FeSpace,
    coeffs: &'a [f64],
}

impl<'a> DiscreteFunction<'a> {
    pub fn new(space: &'a FeSpace, coeffs: &'a [f64]) -> Self {
        assert_eq!(coeffs.len(), space.num_free(), "coefficient vector length");
        DiscreteFunction { space, coeffs }
    }
}

impl PiecewiseField for DiscreteFunction<'_> {
    fn jet_at(&self, at: &EvalPoint, _t: f64) -> Jet {
        let map = self.space.element_map(at.elem);
        let mut out = Jet::ZERO;
        for (i, &g) in self.space.element_dofs(at.elem).iter().enumerate() {
            if let Some(k) = self.space.free_index(g) {
                out = out + self.coeffs[k] * map.jet(at.basis, i);
            }
        }
        out
    }
    fn jet_dt_at(&self, _at: &EvalPoint, _t: f64) -> Jet {
        Jet::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trig {
    One,
    Sin(f64),
    Cos(f64),
}

/// One-variable function `sum c * s^m * trig(k s)`; closed under
/// differentiation and multiplication by `s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    atoms: Vec<(f64, u32, Trig)>,
}

impl Profile {
    /// Polynomial with ascending coefficients.
    pub fn poly(coeffs: &[f64]) -> Self {
        Profile {
            atoms: coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(m, &c)| (c, m as u32, Trig::One))
                .collect(),
        }
    }

    pub fn sin(k: f64) -> Self {
        Profile {
            atoms: vec![(1.0, 0, Trig::Sin(k))],
        }
    }

    pub fn cos(k: f64) -> Self {
        Profile {
            atoms: vec![(1.0, 0, Trig::Cos(k))],
        }
    }

    pub fn derivative(&self) -> Self {
        let mut atoms = Vec::with_capacity(2 * self.atoms.len());
        for &(c, m, trig) in &self.atoms {
            if m > 0 {
                atoms.push((c * m as f64, m - 1, trig));
            }
            match trig {
                Trig::One => {}
                Trig::Sin(k) => atoms.push((c * k, m, Trig::Cos(k))),
                Trig::Cos(k) => atoms.push((-c * k, m, Trig::Sin(k))),
            }
        }
        Profile { atoms }
    }

    pub fn times_s(&self) -> Self {
        Profile {
            atoms: self.atoms.iter().map(|&(c, m, t)| (c, m + 1, t)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Profile {
            atoms: self.atoms.iter().map(|&(c, m, t)| (a * c, m, t)).collect(),
        }
    }

    pub fn plus(&self, other: &Profile) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Profile { atoms }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(c, m, trig)| {
                let base = match trig {
                    Trig::One => 1.0,
                    Trig::Sin(k) => (k * s).sin(),
                    Trig::Cos(k) => (k * s).cos(),
                };
                c * s.powi(m as i32) * base
            })
            .sum()
    }
}

/// Multiplies two polynomials given by ascending coefficients.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `e^{-rate t} * sum_k a_k(x) b_k(y)`.
#[derive(Debug, Clone)]
pub struct SeparableField {
    name: String,
    rate: f64,
    terms: Vec<SeparableTerm>,
    bc_compatible: bool,
}

#[derive(Debug, Clone)]
struct SeparableTerm {
    a: [Profile; 3],
    b: [Profile; 3],
}

impl SeparableTerm {
    fn new(a: Profile, b: Profile) -> Self {
        let (a1, b1) = (a.derivative(), b.derivative());
        let (a2, b2) = (a1.derivative(), b1.derivative());
        SeparableTerm {
            a: [a, a1, a2],
            b: [b, b1, b2],
        }
    }
}

impl SeparableField {
    pub fn new(name: impl Into<String>, rate: f64, terms: Vec<(Profile, Profile)>, bc_compatible: bool) -> Self {
        SeparableField {
            name: name.into(),
            rate,
            terms: terms.into_iter().map(|(a, b)| SeparableTerm::new(a, b)).collect(),
            bc_compatible,
        }
    }

    pub fn zero() -> Self {
        SeparableField::new("zero", 0.0, Vec::new(), true)
    }

    pub fn constant(c: f64) -> Self {
        SeparableField::new("constant", 0.0, vec![(Profile::poly(&[c]), Profile::poly(&[1.0]))], false)
    }

    /// Right-hand side `u_t - u_xx + x u_y` for which this field is an exact
    /// solution of the Kolmogorov equation.
    pub fn kolmogorov_forcing(&self) -> SeparableField {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for term in &self.terms {
            let [a, _, a2] = &term.a;
            let [b, b1, _] = &term.b;
            terms.push((a.scaled(-self.rate).plus(&a2.scaled(-1.0)), b.clone()));
            terms.push((a.times_s(), b1.clone()));
        }
        SeparableField::new(format!("forcing({})", self.name), self.rate, terms, false)
    }

    fn jet_static(&self, p: Point) -> Jet {
        let mut j = Jet::ZERO;
        for term in &self.terms {
            let a = [term.a[0].eval(p[0]), term.a[1].eval(p[0]), term.a[2].eval(p[0])];
            let b = [term.b[0].eval(p[1]), term.b[1].eval(p[1]), term.b[2].eval(p[1])];
            j.val += a[0] * b[0];
            j.dx += a[1] * b[0];
            j.dy += a[0] * b[1];
            j.dxx += a[2] * b[0];
            j.dxy += a[1] * b[1];
            j.dyy += a[0] * b[2];
        }
        j
    }
}

impl AnalyticField for SeparableField {
    fn name(&self) -> &str {
        &self.name
    }
    fn jet(&self, p: Point, t: f64) -> Jet {
        (-self.rate * t).exp() * self.jet_static(p)
    }
    fn jet_dt(&self, p: Point, t: f64) -> Jet {
        (-self.rate * (-self.rate * t).exp()) * self.jet_static(p)
    }
    fn bc_compatible(&self) -> bool {
        self.bc_compatible
    }
}
