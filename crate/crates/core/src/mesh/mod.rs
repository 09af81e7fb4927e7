//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] owns its vertices, counter-clockwise triangles and the derived
//! face topology. Every boundary face carries a [`FaceKind`] describing which
//! part of the boundary it belongs to for the Kolmogorov operator
//! `u_t - u_xx + x u_y`:
//!
//! - `Elliptic`: the first normal component is nonzero, so the second-order
//!   part acts there;
//! - `Inflow`: `n1 = 0` and `x * n2 < 0`;
//! - `Outflow`: `n1 = 0` and `x * n2 >= 0` (characteristic pieces included).
//!
//! Inflow and elliptic faces together form the Dirichlet boundary.

mod generate;
mod io;

use std::collections::HashMap;

pub use generate::{generate_rect_mesh, Rect};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

use crate::error::{Error, Result};

/// Default tolerance on `|n1|` and `x * n2` used when classifying faces.
pub const CLASSIFY_TOL: f64 = 1e-12;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    Elliptic,
    Inflow,
    Outflow,
}

impl FaceKind {
    pub fn is_boundary(self) -> bool {
        self != FaceKind::Interior
    }

    /// Inflow and elliptic faces carry the homogeneous Dirichlet condition.
    pub fn is_dirichlet(self) -> bool {
        matches!(self, FaceKind::Elliptic | FaceKind::Inflow)
    }
}

/// An edge of the triangulation.
#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoints in the counter-clockwise order of the owner triangle.
    pub vertices: [usize; 2],
    pub owner: usize,
    /// Local edge index in the owner (edge `k` joins local vertices `k`, `k+1`).
    pub owner_edge: usize,
    pub neighbor: Option<usize>,
    pub neighbor_edge: Option<usize>,
    /// Unit normal pointing out of the owner.
    pub normal: [f64; 2],
    pub length: f64,
    pub midpoint: Point,
    pub kind: FaceKind,
    /// Mean diameter of the adjacent elements (owner diameter on the boundary).
    pub h_avg: f64,
}

/// Limits enforced on every constructed mesh.
#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    /// Upper bound on `h_T / rho_T`.
    pub max_shape_ratio: f64,
    /// Upper bound on the diameter ratio of face-adjacent elements.
    pub max_neighbor_ratio: f64,
}

impl Default for MeshQuality {
    fn default() -> Self {
        MeshQuality {
            max_shape_ratio: 40.0,
            max_neighbor_ratio: 8.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// Face index of each local edge of each triangle.
    tri_faces: Vec<[usize; 3]>,
    diameters: Vec<f64>,
    areas: Vec<f64>,
    inradii: Vec<f64>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds and validates a mesh, then classifies its boundary with
    /// [`CLASSIFY_TOL`].
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_quality(vertices, triangles, &MeshQuality::default())
    }

    pub fn with_quality(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        quality: &MeshQuality,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::NonConforming("mesh has no triangles".into()));
        }
        let nv = vertices.len();
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        let mut inradii = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::NonConforming(format!(
                    "triangle {t} references vertex {v} but only {nv} vertices exist"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::NonConforming(format!("triangle {t} repeats a vertex")));
            }
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicateElement { first, second: t });
            }
            seen.insert(key, t);

            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = signed_area(a, b, c);
            let edges = [dist(a, b), dist(b, c), dist(c, a)];
            let h = edges.iter().cloned().fold(0.0, f64::max);
            if !(area > 1e-14 * h * h) {
                return Err(Error::InvertedTriangle { index: t, area });
            }
            let perimeter: f64 = edges.iter().sum();
            areas.push(area);
            diameters.push(h);
            inradii.push(2.0 * area / perimeter);
        }

        let (faces, tri_faces) = build_faces(&vertices, &triangles, &diameters)?;
        let mut mesh = Mesh {
            vertices,
            triangles,
            faces,
            tri_faces,
            diameters,
            areas,
            inradii,
        };
        mesh.check_hanging_nodes()?;
        mesh.check_quality(quality)?;
        mesh.classify_boundary(CLASSIFY_TOL)?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Faces of triangle `t`, indexed by local edge.
    pub fn triangle_faces(&self, t: usize) -> [usize; 3] {
        self.tri_faces[t]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Diameter `h_T`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn perimeter(&self, t: usize) -> f64 {
        2.0 * self.areas[t] / self.inradii[t]
    }

    /// Shape-regularity ratio `h_T / rho_T`.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        self.diameters[t] / self.inradii[t]
    }

    pub fn h_max(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Area enclosed by the boundary faces (shoelace over owner-oriented edges).
    pub fn boundary_enclosed_area(&self) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.kind.is_boundary())
            .map(|f| {
                let [a, b] = f.vertices.map(|v| self.vertices[v]);
                0.5 * (a[0] * b[1] - b[0] * a[1])
            })
            .sum()
    }

    pub fn count_faces(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    pub fn boundary_length(&self, pred: impl Fn(FaceKind) -> bool) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.kind.is_boundary() && pred(f.kind))
            .map(|f| f.length)
            .sum()
    }

    /// Assigns a [`FaceKind`] to every boundary face by evaluating the
    /// partition rule at the face midpoint. Idempotent.
    pub fn classify_boundary(&mut self, tol: f64) -> Result<()> {
        for face in self.faces.iter_mut().filter(|f| f.neighbor.is_none()) {
            face.kind = classify_face(face.normal, face.midpoint, tol);
        }
        if self.boundary_length(FaceKind::is_dirichlet) <= 0.0 {
            return Err(Error::EmptyDirichletBoundary);
        }
        Ok(())
    }

    fn check_quality(&self, quality: &MeshQuality) -> Result<()> {
        for t in 0..self.num_triangles() {
            let ratio = self.shape_ratio(t);
            if ratio > quality.max_shape_ratio {
                return Err(Error::MeshQuality(format!(
                    "triangle {t} has h/rho = {ratio:.3} > {}",
                    quality.max_shape_ratio
                )));
            }
        }
        for f in &self.faces {
            if let Some(nb) = f.neighbor {
                let (a, b) = (self.diameters[f.owner], self.diameters[nb]);
                let ratio = a.max(b) / a.min(b);
                if ratio > quality.max_neighbor_ratio {
                    return Err(Error::MeshQuality(format!(
                        "triangles {} and {nb} have diameter ratio {ratio:.3} > {}",
                        f.owner, quality.max_neighbor_ratio
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rejects vertices lying strictly inside a boundary face they do not
    /// belong to; such a configuration is a hanging node.
    fn check_hanging_nodes(&self) -> Result<()> {
        let boundary: Vec<&Face> = self.faces.iter().filter(|f| f.neighbor.is_none()).collect();
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        for f in &boundary {
            let [a, b] = f.vertices.map(|v| self.vertices[v]);
            let len2 = f.length * f.length;
            for (v, &p) in self.vertices.iter().enumerate() {
                if !used[v] || f.vertices.contains(&v) {
                    continue;
                }
                let d = [b[0] - a[0], b[1] - a[1]];
                let s = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
                if s <= 1e-12 || s >= 1.0 - 1e-12 {
                    continue;
                }
                let cross = (p[0] - a[0]) * d[1] - (p[1] - a[1]) * d[0];
                if cross.abs() <= 1e-12 * len2 {
                    return Err(Error::NonConforming(format!(
                        "vertex {v} is a hanging node on edge {}-{}",
                        f.vertices[0], f.vertices[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn classify_face(normal: [f64; 2], midpoint: Point, tol: f64) -> FaceKind {
    if normal[0].abs() > tol {
        FaceKind::Elliptic
    } else if midpoint[0] * normal[1] < -tol {
        FaceKind::Inflow
    } else {
        FaceKind::Outflow
    }
}

type FaceTopology = (Vec<Face>, Vec<[usize; 3]>);

fn build_faces(vertices: &[Point], triangles: &[[usize; 3]], diameters: &[f64]) -> Result<FaceTopology> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len() / 2 + 2);
    let mut faces: Vec<Face> = Vec::with_capacity(3 * triangles.len() / 2 + 2);
    let mut tri_faces = vec![[usize::MAX; 3]; triangles.len()];

    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                None => {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let length = dist(pa, pb);
                    lookup.insert(key, faces.len());
                    tri_faces[t][k] = faces.len();
                    faces.push(Face {
                        vertices: [a, b],
                        owner: t,
                        owner_edge: k,
                        neighbor: None,
                        neighbor_edge: None,
                        normal: [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length],
                        length,
                        midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                        kind: FaceKind::Outflow,
                        h_avg: diameters[t],
                    });
                }
                Some(&fi) => {
                    let face = &mut faces[fi];
                    if face.neighbor.is_some() {
                        return Err(Error::NonConforming(format!(
                            "edge {a}-{b} is shared by more than two triangles"
                        )));
                    }
                    if face.vertices != [b, a] {
                        return Err(Error::NonConforming(format!(
                            "triangles {} and {t} traverse edge {a}-{b} in the same direction",
                            face.owner
                        )));
                    }
                    face.neighbor = Some(t);
                    face.neighbor_edge = Some(k);
                    face.kind = FaceKind::Interior;
                    face.h_avg = 0.5 * (diameters[face.owner] + diameters[t]);
                    tri_faces[t][k] = fi;
                }
            }
        }
    }
    Ok((faces, tri_faces))
}
