//! Continuous degree-`p` Lagrange spaces with strongly imposed homogeneous
//! Dirichlet conditions.

use std::sync::Arc;

use crate::basis::{BasisPoint, ReferenceBasis};
use crate::error::Result;
use crate::field::Jet;
use crate::mesh::{FaceKind, Mesh, Point};

/// Affine map from the reference triangle onto a mesh element.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are the edge vectors `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(pts: [Point; 3]) -> Self {
        let [a, b, c] = pts;
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        ElementMap { origin: a, jac, inv, det }
    }

    pub fn to_physical(&self, r: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, p: Point) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical value, gradient and Hessian of basis function `i`.
    pub fn jet(&self, bp: &BasisPoint, i: usize) -> Jet {
        let g = &self.inv;
        let [gu, gv] = bp.grads[i];
        let [huu, huv, hvv] = bp.hessians[i];
        // grad_x = J^{-T} grad_ref; hess_x = J^{-T} H_ref J^{-1}.
        let dx = g[0][0] * gu + g[1][0] * gv;
        let dy = g[0][1] * gu + g[1][1] * gv;
        let h = |a: usize, b: usize| {
            g[0][a] * g[0][b] * huu + (g[0][a] * g[1][b] + g[1][a] * g[0][b]) * huv + g[1][a] * g[1][b] * hvv
        };
        Jet {
            val: bp.values[i],
            dx,
            dy,
            dxx: h(0, 0),
            dxy: h(0, 1),
            dyy: h(1, 1),
        }
    }

    pub fn jets(&self, bp: &BasisPoint) -> Vec<Jet> {
        (0..bp.values.len()).map(|i| self.jet(bp, i)).collect()
    }
}

/// Which boundary faces carry the homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirichletSet {
    /// Closure of the inflow and elliptic boundary.
    #[default]
    InflowElliptic,
    /// Every boundary face; only used for checks against the classical
    /// Dirichlet Laplacian.
    AllBoundary,
}

impl DirichletSet {
    fn contains(self, kind: FaceKind) -> bool {
        match self {
            DirichletSet::InflowElliptic => kind.is_dirichlet(),
            DirichletSet::AllBoundary => kind.is_boundary(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    basis: ReferenceBasis,
    maps: Vec<ElementMap>,
    /// `nloc` global DOFs per element, in local node order.
    elem_dofs: Vec<usize>,
    dof_points: Vec<Point>,
    constrained: Vec<bool>,
    free_of: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, p: usize) -> Result<Self> {
        Self::with_dirichlet(mesh, p, DirichletSet::default())
    }

    pub fn with_dirichlet(mesh: Arc<Mesh>, p: usize, dirichlet: DirichletSet) -> Result<Self> {
        let basis = ReferenceBasis::new(p)?;
        let nloc = basis.len();
        let nv = mesh.num_vertices();
        let nf = mesh.num_faces();
        let per_edge = p - 1;
        let per_cell = nloc - 3 - 3 * per_edge;
        let ndofs = nv + nf * per_edge + mesh.num_triangles() * per_cell;

        let maps: Vec<ElementMap> = (0..mesh.num_triangles())
            .map(|t| ElementMap::new(mesh.triangle_points(t)))
            .collect();

        let mut elem_dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        let mut dof_points = vec![[0.0; 2]; ndofs];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let start = elem_dofs.len();
            elem_dofs.extend_from_slice(tri);
            let faces = mesh.triangle_faces(t);
            for k in 0..3 {
                let face = &mesh.faces()[faces[k]];
                let same_direction = face.vertices[0] == tri[k];
                let base = nv + faces[k] * per_edge;
                for s in 1..=per_edge {
                    let offset = if same_direction { s - 1 } else { per_edge - s };
                    elem_dofs.push(base + offset);
                }
            }
            let base = nv + nf * per_edge + t * per_cell;
            elem_dofs.extend(base..base + per_cell);
            for (l, node) in basis.nodes().iter().enumerate() {
                dof_points[elem_dofs[start + l]] = maps[t].to_physical(*node);
            }
        }

        let mut constrained = vec![false; ndofs];
        for (fi, face) in mesh.faces().iter().enumerate() {
            if face.neighbor.is_none() && dirichlet.contains(face.kind) {
                constrained[face.vertices[0]] = true;
                constrained[face.vertices[1]] = true;
                let base = nv + fi * per_edge;
                constrained[base..base + per_edge].iter_mut().for_each(|c| *c = true);
            }
        }
        let mut free_of = vec![None; ndofs];
        let mut free_dofs = Vec::with_capacity(ndofs);
        for g in 0..ndofs {
            if !constrained[g] {
                free_of[g] = Some(free_dofs.len());
                free_dofs.push(g);
            }
        }

        Ok(FeSpace {
            mesh,
            basis,
            maps,
            elem_dofs,
            dof_points,
            constrained,
            free_of,
            free_dofs,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn local_dofs(&self) -> usize {
        self.basis.len()
    }

    pub fn element_map(&self, t: usize) -> &ElementMap {
        &self.maps[t]
    }

    /// Global DOFs of element `t` in local node order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.basis.len();
        &self.elem_dofs[t * n..(t + 1) * n]
    }

    pub fn num_dofs(&self) -> usize {
        self.constrained.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_constrained(&self) -> usize {
        self.num_dofs() - self.num_free()
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Position of a global DOF among the free DOFs.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_of[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn dof_point(&self, dof: usize) -> Point {
        self.dof_points[dof]
    }

    /// Expands a free-DOF vector to all DOFs, zero on constrained ones.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free());
        let mut full = vec![0.0; self.num_dofs()];
        for (&g, &v) in self.free_dofs.iter().zip(free) {
            full[g] = v;
        }
        full
    }

    /// Free-DOF coefficients of element `t`; constrained entries are zero.
    pub fn gather(&self, t: usize, free: &[f64], out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(self.element_dofs(t)) {
            *o = self.free_of[g].map_or(0.0, |i| free[i]);
        }
    }

    /// Nodal interpolant of `f` on the free DOFs.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| f(self.dof_points[g])).collect()
    }
}
