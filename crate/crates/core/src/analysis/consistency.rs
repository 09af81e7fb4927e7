//! Galerkin consistency of exact solutions and the discrete transport identity.

use crate::assembly::{for_each_face_point, for_each_volume_point, weighted_vector, AssembledSystem, QuadTables};
use crate::error::{Error, Result};
use crate::field::{Analytic, AnalyticField, Jet, PiecewiseField};
use crate::hypo::HypoMatrix;
use crate::mesh::FaceKind;
use crate::space::FeSpace;

/// Residual of `(u_t, V) + (grad u_t, A grad V) + B(u, V) = (f, V) + (grad f, A grad V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyResidual {
    /// Max over free basis functions of `|LHS - RHS|`.
    pub max_abs: f64,
    /// Largest single term, used for scaling.
    pub scale: f64,
}

impl ConsistencyResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_abs / self.scale
        } else {
            self.max_abs
        }
    }
}

/// Extra quadrature degree on top of `2p + 2`.
const EXTRA_DEGREE: usize = 6;

/// Requires `u` to satisfy the extra boundary conditions.
pub fn consistency_residual(
    system: &AssembledSystem,
    u: &dyn AnalyticField,
    f: &dyn AnalyticField,
    t: f64,
) -> Result<ConsistencyResidual> {
    if !u.bc_compatible() {
        return Err(Error::Analysis(format!(
            "consistency: field `{}` is not flagged as satisfying the extra boundary conditions",
            u.name()
        )));
    }
    Ok(consistency_residual_unchecked(system, u, f, t))
}

/// As [`consistency_residual`] without the boundary-condition guard.
pub fn consistency_residual_unchecked(
    system: &AssembledSystem,
    u: &dyn AnalyticField,
    f: &dyn AnalyticField,
    t: f64,
) -> ConsistencyResidual {
    let space = &system.space;
    let tables = QuadTables::with_extra(space.basis(), EXTRA_DEGREE);
    let dt = weighted_vector(space, &system.hypo, &Analytic(u), t, true, &tables);
    let form = system.form_vector(&Analytic(u), t, &tables);
    let load = weighted_vector(space, &system.hypo, &Analytic(f), t, false, &tables);
    let mut r = ConsistencyResidual { max_abs: 0.0, scale: 0.0 };
    for i in 0..dt.len() {
        r.max_abs = r.max_abs.max((dt[i] + form[i] - load[i]).abs());
        r.scale = r.scale.max(dt[i].abs()).max(form[i].abs()).max(load[i].abs());
    }
    r
}

/// Both sides of
/// `(grad_T (x V_y), A grad V) = alpha (V_y, V_x) + beta ||V_y||^2
///     + 1/2 sum_faces int x n2 [alpha V_x^2 + 2 beta V_x V_y + gamma V_y^2]`,
/// where the jump is owner minus neighbour and the owner trace on boundary faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentitySides {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

fn q(h: &HypoMatrix, j: &Jet) -> f64 {
    h.form(j.grad(), j.grad())
}

pub fn identity_sides(space: &FeSpace, hypo: &HypoMatrix, v: &dyn PiecewiseField) -> IdentitySides {
    let lhs_tables = QuadTables::with_extra(space.basis(), 1);
    let rhs_tables = QuadTables::with_extra(space.basis(), 3);
    let mut s = IdentitySides { lhs: 0.0, rhs: 0.0 };
    for el in 0..space.mesh().num_triangles() {
        for_each_volume_point(space, &lhs_tables, el, |p, w| {
            let j = v.jet_at(p, 0.0);
            let x = p.x[0];
            s.lhs += w * hypo.form([j.dy + x * j.dxy, x * j.dyy], j.grad());
        });
        for_each_volume_point(space, &rhs_tables, el, |p, w| {
            let j = v.jet_at(p, 0.0);
            s.rhs += w * (hypo.alpha * j.dy * j.dx + hypo.beta * j.dy * j.dy);
        });
    }
    for (e, face) in space.mesh().faces().iter().enumerate() {
        let n2 = face.normal[1];
        for_each_face_point(space, &rhs_tables, e, |x, w, own, nb| {
            let plus = q(hypo, &v.jet_at(&own.at(x), 0.0));
            let minus = match (face.kind, nb) {
                (FaceKind::Interior, Some(nb)) => q(hypo, &v.jet_at(&nb.at(x), 0.0)),
                _ => 0.0,
            };
            s.rhs += 0.5 * w * x[0] * n2 * (plus - minus);
        });
    }
    s
}
