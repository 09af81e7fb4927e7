use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mesh, MeshQuality, Point};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x_lo, x_hi) x (y_lo, y_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x_lo: 0.0,
        x_hi: 1.0,
        y_lo: 0.0,
        y_hi: 1.0,
    };

    pub fn area(&self) -> f64 {
        (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)
    }
}

const MAX_RETRIES: usize = 4;

/// Structured triangulation of `rect` with alternating cell diagonals.
///
/// Cell `(i, j)` is split along its rising diagonal when `i + j` is even and
/// along its falling diagonal otherwise, so refining `nx -> 2 nx` yields a
/// nested family. Interior vertices are then displaced by at most
/// `perturb * min(dx, dy)`; if that inverts an element or breaks the quality
/// limits the displacement is halved, up to four times.
pub fn generate_rect_mesh(rect: Rect, nx: usize, ny: usize, perturb: f64, seed: u64) -> Result<Mesh> {
    if rect.x_lo < 0.0 {
        return Err(Error::param("mesh", "x_lo", format!("must be >= 0, got {}", rect.x_lo)));
    }
    if !(rect.x_hi > rect.x_lo && rect.y_hi > rect.y_lo) {
        return Err(Error::param("mesh", "rect", "empty rectangle"));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::param("mesh", "nx/ny", "need at least one cell per direction"));
    }
    if !(0.0..0.5).contains(&perturb) {
        return Err(Error::param("mesh", "perturb", format!("must lie in [0, 0.5), got {perturb}")));
    }

    let dx = (rect.x_hi - rect.x_lo) / nx as f64;
    let dy = (rect.y_hi - rect.y_lo) / ny as f64;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;

    let mut base = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { rect.x_hi } else { rect.x_lo + i as f64 * dx };
            let y = if j == ny { rect.y_hi } else { rect.y_lo + j as f64 * dy };
            base.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }

    if perturb == 0.0 {
        return Mesh::new(base, triangles);
    }

    // Draw the displacement directions once so retries shrink the same field.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<Point> = (0..base.len())
        .map(|_| {
            let r: f64 = rng.gen::<f64>().sqrt();
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * theta.cos(), r * theta.sin()]
        })
        .collect();

    let quality = MeshQuality::default();
    let mut amplitude = perturb * dx.min(dy);
    let mut last_err = None;
    for _ in 0..=MAX_RETRIES {
        let mut vertices = base.clone();
        for j in 1..ny {
            for i in 1..nx {
                let v = idx(i, j);
                vertices[v][0] += amplitude * offsets[v][0];
                vertices[v][1] += amplitude * offsets[v][1];
            }
        }
        match Mesh::with_quality(vertices, triangles.clone(), &quality) {
            Ok(mesh) => return Ok(mesh),
            Err(e @ (Error::InvertedTriangle { .. } | Error::MeshQuality(_))) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        amplitude *= 0.5;
    }
    Err(last_err.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::FaceKind;

    #[test]
    fn counts() {
        let m = generate_rect_mesh(Rect::UNIT, 1, 1, 0.0, 0).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.num_faces()), (4, 2, 5));
        assert_eq!(m.count_faces(FaceKind::Interior), 1);
        let m = generate_rect_mesh(Rect::UNIT, 8, 8, 0.0, 0).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (81, 128));
    }

    #[test]
    fn perturbed_mesh_is_valid() {
        let m = generate_rect_mesh(Rect::UNIT, 4, 4, 0.2, 7).unwrap();
        for t in 0..m.num_triangles() {
            assert!(m.area(t) > 0.0);
            assert!(m.shape_ratio(t) <= 10.0, "ratio {}", m.shape_ratio(t));
        }
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        // Boundary vertices stay put, so the boundary partition is unchanged.
        assert_eq!(m.count_faces(FaceKind::Elliptic), 8);
        assert_eq!(m.count_faces(FaceKind::Inflow), 4);
        assert_eq!(m.count_faces(FaceKind::Outflow), 4);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_rect_mesh(Rect::UNIT, 5, 3, 0.3, 11).unwrap();
        let b = generate_rect_mesh(Rect::UNIT, 5, 3, 0.3, 11).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let c = generate_rect_mesh(Rect::UNIT, 5, 3, 0.3, 12).unwrap();
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn rejects_bad_parameters() {
        let r = Rect { x_lo: -0.5, ..Rect::UNIT };
        assert!(generate_rect_mesh(r, 2, 2, 0.0, 0).is_err());
        assert!(generate_rect_mesh(Rect::UNIT, 0, 2, 0.0, 0).is_err());
        assert!(generate_rect_mesh(Rect::UNIT, 2, 2, 0.5, 0).is_err());
    }

    #[test]
    fn elliptic_faces_sit_on_vertical_sides() {
        let r = Rect { x_lo: 0.5, x_hi: 2.0, y_lo: -1.0, y_hi: 1.0 };
        let m = generate_rect_mesh(r, 6, 4, 0.1, 3).unwrap();
        for f in m.faces() {
            match f.kind {
                FaceKind::Elliptic => {
                    assert!((f.midpoint[0] - r.x_lo).abs() < 1e-12 || (f.midpoint[0] - r.x_hi).abs() < 1e-12)
                }
                FaceKind::Inflow => assert!(f.normal[0].abs() < 1e-12),
                _ => {}
            }
        }
    }
}
