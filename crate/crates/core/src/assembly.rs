//! Global matrices and vectors of the scheme
//!
//! `(U_t, V) + (grad U_t, A grad V) + B(U, V) = (f, V) + (grad f, A grad V)`
//!
//! with
//!
//! `B(w, v) = (w_x, v_x) + (x w_y, v) + (A grad w_x, grad v_x)
//!          + (grad(x w_y), A grad v) + s_h(w, v)`
//!
//! where second derivatives are taken elementwise and `s_h` collects the
//! face terms. All matrices act on the free DOFs of the space.

use std::sync::Arc;

use crate::basis::{build_quadrature, BasisPoint, EdgeQuadrature, Quadrature, ReferenceBasis};
use crate::error::Result;
use crate::field::{Analytic, AnalyticField, EvalPoint, Jet, PiecewiseField};
use crate::hypo::{penalty_table, HypoMatrix, PenaltyConfig};
use crate::mesh::{Face, FaceKind, Point};
use crate::sparse::{solve, CsrMatrix, TripletBuilder};
use crate::space::FeSpace;

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Reference basis tabulated at volume and edge quadrature points.
#[derive(Debug, Clone)]
pub struct QuadTables {
    pub volume: Quadrature,
    pub vol_basis: Vec<BasisPoint>,
    pub edge: EdgeQuadrature,
    /// `[local edge][reversed]`: basis at `s` (forward) or `1 - s` along
    /// reference edge `k -> k+1`.
    edge_basis: [[Vec<BasisPoint>; 2]; 3],
}

impl QuadTables {
    pub fn new(basis: &ReferenceBasis, volume: Quadrature, edge: EdgeQuadrature) -> Self {
        let vol_basis = basis.tabulate(&volume);
        let along = |k: usize, s: f64| {
            let (a, b) = (REF_VERTICES[k], REF_VERTICES[(k + 1) % 3]);
            basis.eval(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))
        };
        let edge_basis = std::array::from_fn(|k| {
            [
                edge.points.iter().map(|&s| along(k, s)).collect(),
                edge.points.iter().map(|&s| along(k, 1.0 - s)).collect(),
            ]
        });
        QuadTables {
            volume,
            vol_basis,
            edge,
            edge_basis,
        }
    }

    /// Rules exact to degree `2p + 2` on elements.
    pub fn standard(basis: &ReferenceBasis) -> Self {
        let (v, e) = build_quadrature(basis.degree());
        QuadTables::new(basis, v, e)
    }

    /// Rules exact to degree `2p + 2 + extra`, for integrands that are not
    /// polynomial or of higher degree.
    pub fn with_extra(basis: &ReferenceBasis, extra: usize) -> Self {
        let d = 2 * basis.degree() + 2 + extra;
        QuadTables::new(basis, Quadrature::triangle(d), EdgeQuadrature::exact_to(d + 1))
    }
}

/// One side of a face quadrature point.
pub struct FaceSide<'a> {
    pub elem: usize,
    pub basis: &'a BasisPoint,
}

impl FaceSide<'_> {
    pub fn at(&self, x: Point) -> EvalPoint<'_> {
        EvalPoint {
            elem: self.elem,
            x,
            basis: self.basis,
        }
    }
}

/// Calls `f(elem_point, weight)` for each volume quadrature point of `t`.
pub fn for_each_volume_point(space: &FeSpace, tables: &QuadTables, t: usize, mut f: impl FnMut(&EvalPoint, f64)) {
    let map = space.element_map(t);
    let jac = map.det.abs();
    for (q, bp) in tables.vol_basis.iter().enumerate() {
        let x = map.to_physical(tables.volume.points[q]);
        f(&EvalPoint { elem: t, x, basis: bp }, tables.volume.weights[q] * jac);
    }
}

/// Calls `f(x, weight, owner, neighbor)` for each quadrature point of face `e`.
pub fn for_each_face_point(
    space: &FeSpace,
    tables: &QuadTables,
    e: usize,
    mut f: impl FnMut(Point, f64, &FaceSide, Option<&FaceSide>),
) {
    let mesh = space.mesh();
    let face = &mesh.faces()[e];
    let [a, b] = face.vertices.map(|v| mesh.vertices()[v]);
    for (q, &s) in tables.edge.points.iter().enumerate() {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let w = tables.edge.weights[q] * face.length;
        let owner = FaceSide {
            elem: face.owner,
            basis: &tables.edge_basis[face.owner_edge][0][q],
        };
        let neighbor = face.neighbor.map(|n| FaceSide {
            elem: n,
            basis: &tables.edge_basis[face.neighbor_edge.expect("interior face has a neighbour edge")][1][q],
        });
        f(x, w, &owner, neighbor.as_ref());
    }
}

/// Integrand of the volume part of `B(w, v)`.
#[inline]
pub fn volume_kernel(h: &HypoMatrix, x: f64, w: &Jet, v: &Jet) -> f64 {
    let (a, b, c) = (h.alpha, h.beta, h.gamma);
    w.dx * v.dx
        + x * w.dy * v.val
        + (a * w.dxx + b * w.dxy) * v.dxx
        + (b * w.dxx + c * w.dxy) * v.dxy
        + (w.dy + x * w.dxy) * (a * v.dx + b * v.dy)
        + x * w.dyy * (b * v.dx + c * v.dy)
}

/// Which face term groups enter `s_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluxGroups {
    /// `-x n2 [grad w]^T A {grad v}` on interior and inflow faces.
    pub advective: bool,
    /// `|x n2|/2 (kappa [w_x][v_x] + lambda [w_y][v_y])` on interior faces.
    pub diffusion: bool,
    /// Symmetric interior penalty on `n1`-jumps of the gradient, on interior
    /// and elliptic faces.
    pub penalty: bool,
}

impl FluxGroups {
    pub const ALL: FluxGroups = FluxGroups {
        advective: true,
        diffusion: true,
        penalty: true,
    };
    pub const NONE: FluxGroups = FluxGroups {
        advective: false,
        diffusion: false,
        penalty: false,
    };
}

/// Per-face data for the face kernel.
#[derive(Debug, Clone, Copy)]
pub struct FaceCtx {
    pub kind: FaceKind,
    pub normal: [f64; 2],
    pub tau: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub groups: FluxGroups,
}

impl FaceCtx {
    pub fn new(face: &Face, tau: f64, penalty: &PenaltyConfig, groups: FluxGroups) -> Self {
        FaceCtx {
            kind: face.kind,
            normal: face.normal,
            tau,
            kappa: penalty.kappa,
            lambda: penalty.lambda,
            groups,
        }
    }

    pub fn is_active(&self) -> bool {
        match self.kind {
            FaceKind::Interior => true,
            FaceKind::Inflow => self.groups.advective,
            FaceKind::Elliptic => self.groups.penalty,
            FaceKind::Outflow => false,
        }
    }
}

/// Jump and average of a trace pair; on boundary faces both are the inner
/// trace.
#[inline]
fn jump_avg(interior: bool, p: f64, m: f64) -> (f64, f64) {
    if interior {
        (p - m, 0.5 * (p + m))
    } else {
        (p, p)
    }
}

/// Integrand of `s_h(w, v)` at one face point. Index 0 is the owner trace,
/// index 1 the neighbour trace (ignored on boundary faces).
#[inline]
pub fn face_kernel(h: &HypoMatrix, c: &FaceCtx, x: f64, w: &[Jet; 2], v: &[Jet; 2]) -> f64 {
    let interior = c.kind == FaceKind::Interior;
    let [n1, n2] = c.normal;
    let (jwx, _) = jump_avg(interior, w[0].dx, w[1].dx);
    let (jwy, _) = jump_avg(interior, w[0].dy, w[1].dy);
    let (jvx, avx) = jump_avg(interior, v[0].dx, v[1].dx);
    let (jvy, avy) = jump_avg(interior, v[0].dy, v[1].dy);
    let mut s = 0.0;
    if c.groups.advective && matches!(c.kind, FaceKind::Interior | FaceKind::Inflow) {
        s -= x * n2 * h.form([jwx, jwy], [avx, avy]);
    }
    if c.groups.diffusion && interior {
        s += 0.5 * (x * n2).abs() * (c.kappa * jwx * jvx + c.lambda * jwy * jvy);
    }
    if c.groups.penalty && matches!(c.kind, FaceKind::Interior | FaceKind::Elliptic) {
        let jw = [n1 * jwx, n1 * jwy];
        let jv = [n1 * jvx, n1 * jvy];
        let (_, wxx) = jump_avg(interior, w[0].dxx, w[1].dxx);
        let (_, wxy) = jump_avg(interior, w[0].dxy, w[1].dxy);
        let (_, vxx) = jump_avg(interior, v[0].dxx, v[1].dxx);
        let (_, vxy) = jump_avg(interior, v[0].dxy, v[1].dxy);
        s += -h.form([wxx, wxy], jv) - h.form([vxx, vxy], jw) + c.tau * h.form(jw, jv);
    }
    s
}

fn scatter(space: &FeSpace, b: &mut TripletBuilder, rows: &[usize], cols: &[usize], local: &[f64]) {
    let nc = cols.len();
    for (i, &gi) in rows.iter().enumerate() {
        let Some(fi) = space.free_index(gi) else { continue };
        for (j, &gj) in cols.iter().enumerate() {
            if let Some(fj) = space.free_index(gj) {
                let v = local[i * nc + j];
                if v != 0.0 {
                    b.push(fi, fj, v);
                }
            }
        }
    }
}

/// Assembles `sum_T int_T kernel(phi_j, phi_i)` over free DOFs.
pub(crate) fn assemble_volume(
    space: &FeSpace,
    tables: &QuadTables,
    kernel: impl Fn(f64, &Jet, &Jet) -> f64,
) -> TripletBuilder {
    let n = space.local_dofs();
    let nfree = space.num_free();
    let mut b = TripletBuilder::with_capacity(nfree, nfree, space.mesh().num_triangles() * n * n);
    let mut local = vec![0.0; n * n];
    for t in 0..space.mesh().num_triangles() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let map = space.element_map(t);
        for_each_volume_point(space, tables, t, |p, w| {
            let jets = map.jets(p.basis);
            for (i, vi) in jets.iter().enumerate() {
                for (j, wj) in jets.iter().enumerate() {
                    local[i * n + j] += w * kernel(p.x[0], wj, vi);
                }
            }
        });
        let dofs = space.element_dofs(t);
        scatter(space, &mut b, dofs, dofs, &local);
    }
    b
}

/// Plain mass matrix `(phi_j, phi_i)`.
pub fn assemble_plain_mass(space: &FeSpace) -> CsrMatrix {
    let tables = QuadTables::standard(space.basis());
    assemble_volume(space, &tables, |_, w, v| w.val * v.val).build()
}

/// Plain stiffness matrix `(grad phi_j, grad phi_i)`.
pub fn assemble_plain_stiffness(space: &FeSpace) -> CsrMatrix {
    let tables = QuadTables::standard(space.basis());
    assemble_volume(space, &tables, |_, w, v| w.dx * v.dx + w.dy * v.dy).build()
}

/// `(grad phi_j, A grad phi_i)`.
pub fn assemble_a_stiffness(space: &FeSpace, hypo: &HypoMatrix) -> CsrMatrix {
    let tables = QuadTables::standard(space.basis());
    assemble_volume(space, &tables, |_, w, v| hypo.form(v.grad(), w.grad())).build()
}

/// Generalized mass `M_A = (phi_j, phi_i) + (grad phi_j, A grad phi_i)`.
pub fn assemble_mass(space: &FeSpace, hypo: &HypoMatrix) -> CsrMatrix {
    let tables = QuadTables::standard(space.basis());
    assemble_volume(space, &tables, |_, w, v| w.val * v.val + hypo.form(v.grad(), w.grad())).build()
}

/// Element matrices of `M_A` on triangle `t` in local node order, without
/// removing constrained DOFs. Row-major, test index first.
pub fn element_mass_a(space: &FeSpace, hypo: &HypoMatrix, t: usize) -> Vec<f64> {
    let tables = QuadTables::standard(space.basis());
    let n = space.local_dofs();
    let map = space.element_map(t);
    let mut local = vec![0.0; n * n];
    for_each_volume_point(space, &tables, t, |p, w| {
        let jets = map.jets(p.basis);
        for i in 0..n {
            for j in 0..n {
                local[i * n + j] += w * (jets[j].val * jets[i].val + hypo.form(jets[i].grad(), jets[j].grad()));
            }
        }
    });
    local
}

/// Adds `sum_e int_e kernel(e, x, w, v)` over faces with `active(e)`, where
/// `w` and `v` range over the local basis functions of both sides.
pub(crate) fn assemble_faces(
    space: &FeSpace,
    tables: &QuadTables,
    b: &mut TripletBuilder,
    active: impl Fn(usize) -> bool,
    kernel: impl Fn(usize, f64, &[Jet; 2], &[Jet; 2]) -> f64,
) {
    let mesh = space.mesh();
    let n = space.local_dofs();
    let mut local = Vec::new();
    let mut dofs = Vec::with_capacity(2 * n);
    let mut traces: Vec<[Jet; 2]> = Vec::with_capacity(2 * n);
    for (e, face) in mesh.faces().iter().enumerate() {
        if !active(e) {
            continue;
        }
        dofs.clear();
        dofs.extend_from_slice(space.element_dofs(face.owner));
        if let Some(nb) = face.neighbor {
            dofs.extend_from_slice(space.element_dofs(nb));
        }
        let m = dofs.len();
        local.clear();
        local.resize(m * m, 0.0);
        for_each_face_point(space, tables, e, |x, w, own, nb| {
            // Each local function lives on one side only.
            traces.clear();
            let own_map = space.element_map(own.elem);
            traces.extend((0..n).map(|i| [own_map.jet(own.basis, i), Jet::ZERO]));
            if let Some(nb) = nb {
                let nb_map = space.element_map(nb.elem);
                traces.extend((0..n).map(|i| [Jet::ZERO, nb_map.jet(nb.basis, i)]));
            }
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] += w * kernel(e, x[0], &traces[j], &traces[i]);
                }
            }
        });
        scatter(space, b, &dofs, &dofs, &local);
    }
}

/// Stiffness matrix of `B(phi_j, phi_i)` with the chosen face groups.
pub fn assemble_stiffness_with(
    space: &FeSpace,
    hypo: &HypoMatrix,
    penalty: &PenaltyConfig,
    taus: &[f64],
    groups: FluxGroups,
) -> CsrMatrix {
    let tables = QuadTables::standard(space.basis());
    let mut b = assemble_volume(space, &tables, |x, w, v| volume_kernel(hypo, x, w, v));
    let faces = space.mesh().faces();
    let ctxs: Vec<FaceCtx> = faces
        .iter()
        .enumerate()
        .map(|(e, f)| FaceCtx::new(f, taus[e], penalty, groups))
        .collect();
    assemble_faces(
        space,
        &tables,
        &mut b,
        |e| ctxs[e].is_active(),
        |e, x, w, v| face_kernel(hypo, &ctxs[e], x, w, v),
    );
    b.build()
}

pub fn assemble_stiffness(space: &FeSpace, hypo: &HypoMatrix, penalty: &PenaltyConfig) -> Result<CsrMatrix> {
    penalty.validate()?;
    let taus = penalty_table(penalty, space.degree(), space.mesh());
    Ok(assemble_stiffness_with(space, hypo, penalty, &taus, FluxGroups::ALL))
}

/// Vector of `int f phi_i + grad f . A grad phi_i` over free DOFs; with
/// `time_derivative` the field's time derivative replaces `f`.
pub fn weighted_vector(
    space: &FeSpace,
    hypo: &HypoMatrix,
    field: &dyn PiecewiseField,
    t: f64,
    time_derivative: bool,
    tables: &QuadTables,
) -> Vec<f64> {
    let mut out = vec![0.0; space.num_free()];
    for el in 0..space.mesh().num_triangles() {
        let map = space.element_map(el);
        let dofs = space.element_dofs(el);
        for_each_volume_point(space, tables, el, |p, w| {
            let f = if time_derivative { field.jet_dt_at(p, t) } else { field.jet_at(p, t) };
            for (i, &g) in dofs.iter().enumerate() {
                if let Some(k) = space.free_index(g) {
                    let phi = map.jet(p.basis, i);
                    out[k] += w * (f.val * phi.val + hypo.form(phi.grad(), f.grad()));
                }
            }
        });
    }
    out
}

/// Load vector `(f, phi_i) + (grad f, A grad phi_i)`.
pub fn assemble_load(space: &FeSpace, hypo: &HypoMatrix, f: &dyn AnalyticField, t: f64) -> Vec<f64> {
    let tables = QuadTables::with_extra(space.basis(), 2);
    weighted_vector(space, hypo, &Analytic(f), t, false, &tables)
}

/// `B(g, phi_i)` for every free DOF, with `g` evaluated on both sides of
/// each face.
pub fn form_vector(
    space: &FeSpace,
    hypo: &HypoMatrix,
    penalty: &PenaltyConfig,
    taus: &[f64],
    g: &dyn PiecewiseField,
    t: f64,
    tables: &QuadTables,
) -> Vec<f64> {
    let mut out = vec![0.0; space.num_free()];
    let mesh = space.mesh();
    for el in 0..mesh.num_triangles() {
        let map = space.element_map(el);
        let dofs = space.element_dofs(el);
        for_each_volume_point(space, tables, el, |p, w| {
            let gj = g.jet_at(p, t);
            for (i, &d) in dofs.iter().enumerate() {
                if let Some(k) = space.free_index(d) {
                    out[k] += w * volume_kernel(hypo, p.x[0], &gj, &map.jet(p.basis, i));
                }
            }
        });
    }
    for (e, face) in mesh.faces().iter().enumerate() {
        let ctx = FaceCtx::new(face, taus[e], penalty, FluxGroups::ALL);
        if !ctx.is_active() {
            continue;
        }
        for_each_face_point(space, tables, e, |x, w, own, nb| {
            let gw = [
                g.jet_at(&own.at(x), t),
                nb.map_or(Jet::ZERO, |s| g.jet_at(&s.at(x), t)),
            ];
            let sides = std::iter::once((own, 0)).chain(nb.map(|s| (s, 1)));
            for (side, idx) in sides {
                let map = space.element_map(side.elem);
                for (i, &d) in space.element_dofs(side.elem).iter().enumerate() {
                    if let Some(k) = space.free_index(d) {
                        let mut v = [Jet::ZERO; 2];
                        v[idx] = map.jet(side.basis, i);
                        out[k] += w * face_kernel(hypo, &ctx, x[0], &gw, &v);
                    }
                }
            }
        });
    }
    out
}

/// Discrete system for one parameter set.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub space: Arc<FeSpace>,
    pub hypo: HypoMatrix,
    pub penalty: PenaltyConfig,
    /// Penalty `tau_e` per mesh face.
    pub taus: Vec<f64>,
    /// Plain mass matrix.
    pub mass: CsrMatrix,
    /// `(grad phi_j, A grad phi_i)`.
    pub stiff_a: CsrMatrix,
    /// `mass + stiff_a`.
    pub mass_a: CsrMatrix,
    /// Matrix of `B(phi_j, phi_i)`; row `i` is the test function.
    pub k: CsrMatrix,
}

impl AssembledSystem {
    pub fn new(space: Arc<FeSpace>, hypo: HypoMatrix, penalty: PenaltyConfig) -> Result<Self> {
        penalty.validate()?;
        let taus = penalty_table(&penalty, space.degree(), space.mesh());
        let mass = assemble_plain_mass(&space);
        let stiff_a = assemble_a_stiffness(&space, &hypo);
        let mass_a = mass.lin_comb(1.0, &stiff_a, 1.0);
        let k = assemble_stiffness_with(&space, &hypo, &penalty, &taus, FluxGroups::ALL);
        Ok(AssembledSystem {
            space,
            hypo,
            penalty,
            taus,
            mass,
            stiff_a,
            mass_a,
            k,
        })
    }

    pub fn num_free(&self) -> usize {
        self.space.num_free()
    }

    /// `B(g, phi_i)` for every free DOF.
    pub fn form_vector(&self, g: &dyn PiecewiseField, t: f64, tables: &QuadTables) -> Vec<f64> {
        form_vector(&self.space, &self.hypo, &self.penalty, &self.taus, g, t, tables)
    }
}

/// L2 projection of `g(., t)` onto the free DOFs.
pub fn project_l2(space: &FeSpace, g: &dyn AnalyticField, t: f64) -> Result<Vec<f64>> {
    if space.num_free() == 0 {
        return Ok(Vec::new());
    }
    let tables = QuadTables::with_extra(space.basis(), 4);
    let zero = HypoMatrix::baseline();
    let rhs = weighted_vector(space, &zero, &Analytic(g), t, false, &tables);
    solve(&assemble_plain_mass(space), &rhs)
}

/// Hypoelliptic projection: `B(pi g, V) = B(g, V)` for all discrete `V`.
pub fn project_hypoelliptic(system: &AssembledSystem, g: &dyn PiecewiseField, t: f64) -> Result<Vec<f64>> {
    if system.num_free() == 0 {
        return Ok(Vec::new());
    }
    let tables = QuadTables::with_extra(system.space.basis(), 4);
    let rhs = system.form_vector(g, t, &tables);
    solve(&system.k, &rhs).map_err(|e| {
        crate::error::Error::Solver(format!(
            "hypoelliptic projection: {e}; the penalty or A may violate coercivity"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{DiscreteFunction, SeparableField};
    use crate::hypo::{PenaltyMode, Scheme};
    use crate::mesh::{generate_rect_mesh, Mesh, Rect};
    use crate::space::DirichletSet;
    use crate::testing::{oracle_bform, oracle_element_mass_a, random_vec};

    fn space(nx: usize, perturb: f64, p: usize) -> Arc<FeSpace> {
        let mesh = Arc::new(generate_rect_mesh(Rect::UNIT, nx, nx, perturb, 3).unwrap());
        Arc::new(FeSpace::new(mesh, p).unwrap())
    }

    fn hypo() -> HypoMatrix {
        HypoMatrix::new(0.35060, Scheme::Parabolic).unwrap()
    }

    #[test]
    fn baseline_mass_is_plain_mass() {
        let s = space(3, 0.1, 2);
        let a = assemble_mass(&s, &HypoMatrix::baseline());
        assert_eq!(a, assemble_plain_mass(&s));
    }

    #[test]
    fn mass_a_is_symmetric_positive_definite() {
        let s = space(4, 0.2, 3);
        let m = assemble_mass(&s, &hypo());
        assert!(m.asymmetry() <= 1e-13 * m.max_abs());
        let eig = nalgebra::SymmetricEigen::new(m.to_dense()).eigenvalues;
        assert!(eig.min() > 0.0);
    }

    #[test]
    fn element_mass_matches_dense_integrator() {
        let mesh = Arc::new(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap());
        let s = FeSpace::new(mesh, 2).unwrap();
        let h = hypo();
        let got = element_mass_a(&s, &h, 0);
        let want = oracle_element_mass_a(&s, &h, 0);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    fn check_k_against_oracle(s: &FeSpace, penalty: PenaltyConfig) {
        let h = hypo();
        let taus = penalty_table(&penalty, s.degree(), s.mesh());
        let k = assemble_stiffness(s, &h, &penalty).unwrap().to_dense();
        let n = s.num_free();
        let scale = k.amax();
        for j in 0..n {
            let mut ej = vec![0.0; n];
            ej[j] = 1.0;
            for i in 0..n {
                let mut ei = vec![0.0; n];
                ei[i] = 1.0;
                let want = oracle_bform(s, &h, &penalty, &taus, &ej, &ei);
                assert!((k[(i, j)] - want).abs() <= 1e-11 * scale, "K[{i},{j}] = {} vs {want}", k[(i, j)]);
            }
        }
    }

    #[test]
    fn stiffness_matches_dense_integrator_two_triangles() {
        let s = space(1, 0.0, 2);
        check_k_against_oracle(&s, PenaltyConfig::auto());
    }

    #[test]
    fn stiffness_matches_dense_integrator_perturbed_cubic() {
        let s = space(2, 0.25, 3);
        let pen = PenaltyConfig {
            c_tau: PenaltyMode::Fixed(3.0),
            kappa: 0.7,
            lambda: 0.2,
        };
        check_k_against_oracle(&s, pen);
    }

    #[test]
    fn zero_diffusion_weights_match_skipping_the_group() {
        let s = space(3, 0.2, 2);
        let pen = PenaltyConfig::auto();
        let taus = penalty_table(&pen, 2, s.mesh());
        let all = assemble_stiffness_with(&s, &hypo(), &pen, &taus, FluxGroups::ALL);
        let skipped = assemble_stiffness_with(
            &s,
            &hypo(),
            &pen,
            &taus,
            FluxGroups {
                diffusion: false,
                ..FluxGroups::ALL
            },
        );
        assert_eq!(all, skipped);
    }

    #[test]
    fn baseline_reduces_to_standard_galerkin() {
        let s = space(3, 0.2, 2);
        let pen = PenaltyConfig::default();
        let k = assemble_stiffness(&s, &HypoMatrix::baseline(), &pen).unwrap();
        let tables = QuadTables::standard(s.basis());
        let direct = assemble_volume(&s, &tables, |x, w, v| w.dx * v.dx + x * w.dy * v.val).build();
        let diff = k.lin_comb(1.0, &direct, -1.0).max_abs();
        assert!(diff <= 1e-13 * direct.max_abs(), "{diff}");
    }

    #[test]
    fn penalty_group_is_symmetric() {
        let s = space(3, 0.2, 3);
        let pen = PenaltyConfig::auto();
        let taus = penalty_table(&pen, 3, s.mesh());
        let only = FluxGroups {
            penalty: true,
            ..FluxGroups::NONE
        };
        let with = assemble_stiffness_with(&s, &hypo(), &pen, &taus, only);
        let without = assemble_stiffness_with(&s, &hypo(), &pen, &taus, FluxGroups::NONE);
        let group = with.lin_comb(1.0, &without, -1.0);
        assert!(group.asymmetry() <= 1e-13 * group.max_abs());
    }

    #[test]
    fn load_of_zero_and_one() {
        let s = space(3, 0.1, 2);
        let h = hypo();
        let z = assemble_load(&s, &h, &SeparableField::zero(), 0.0);
        assert!(z.iter().all(|&v| v == 0.0));

        // With Dirichlet DOFs removed, the row sums of the full mass matrix
        // give int phi_i; use the all-free space of the unconstrained mesh.
        let one = assemble_load(&s, &h, &SeparableField::constant(1.0), 0.0);
        let ones_full = vec![1.0; s.num_dofs()];
        let m_full = full_mass(&s);
        let row = m_full.mul_vec(&ones_full);
        for (k, &g) in s.free_dofs().iter().enumerate() {
            assert!((one[k] - row[g]).abs() < 1e-13, "{} vs {}", one[k], row[g]);
        }
    }

    fn full_mass(s: &FeSpace) -> CsrMatrix {
        let n = s.local_dofs();
        let tables = QuadTables::standard(s.basis());
        let mut b = TripletBuilder::new(s.num_dofs(), s.num_dofs());
        for t in 0..s.mesh().num_triangles() {
            let dofs = s.element_dofs(t);
            for_each_volume_point(s, &tables, t, |p, w| {
                for i in 0..n {
                    for j in 0..n {
                        b.push(dofs[i], dofs[j], w * p.basis.values[i] * p.basis.values[j]);
                    }
                }
            });
        }
        b.build()
    }

    #[test]
    fn projections_reproduce_discrete_functions() {
        let s = space(3, 0.2, 3);
        let h = hypo();
        let coeffs = random_vec(s.num_free(), 4);
        let g = DiscreteFunction::new(&s, &coeffs);

        let sys = AssembledSystem::new(s.clone(), h, PenaltyConfig::auto()).unwrap();
        let pi = project_hypoelliptic(&sys, &g, 0.0).unwrap();
        for (a, b) in pi.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }

        // L2 projection through the weighted vector with A = 0.
        let tables = QuadTables::standard(s.basis());
        let rhs = weighted_vector(&s, &HypoMatrix::baseline(), &g, 0.0, false, &tables);
        let back = solve(&assemble_plain_mass(&s), &rhs).unwrap();
        for (a, b) in back.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn projections_of_zero() {
        let s = space(2, 0.0, 2);
        let z = SeparableField::zero();
        assert!(project_l2(&s, &z, 0.0).unwrap().iter().all(|&v| v == 0.0));
        let sys = AssembledSystem::new(s, hypo(), PenaltyConfig::auto()).unwrap();
        assert!(project_hypoelliptic(&sys, &z, 0.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn form_vector_of_discrete_function_is_k_times_coeffs() {
        let s = space(3, 0.2, 2);
        let sys = AssembledSystem::new(s.clone(), hypo(), PenaltyConfig::auto()).unwrap();
        let c = random_vec(s.num_free(), 9);
        let g = DiscreteFunction::new(&s, &c);
        let v = sys.form_vector(&g, 0.0, &QuadTables::standard(s.basis()));
        let kc = sys.k.mul_vec(&c);
        let scale = kc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in v.iter().zip(&kc) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn full_dirichlet_mode_frees_only_interior_nodes() {
        let mesh = Arc::new(generate_rect_mesh(Rect::UNIT, 2, 2, 0.0, 0).unwrap());
        let s = FeSpace::with_dirichlet(mesh, 2, DirichletSet::AllBoundary).unwrap();
        assert_eq!(s.num_free(), 9);
    }
}
