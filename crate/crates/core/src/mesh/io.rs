//! Plain-text mesh format.
//!
//! ```text
//! hypofem-mesh v1
//! vertices N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based, counter-clockwise)
//! ```
//!
//! Tokens are whitespace separated; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, Point};
use crate::error::{Error, Result};
use crate::output::write_atomic;

const MAGIC: &str = "hypofem-mesh v1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(48 * (mesh.num_vertices() + mesh.num_triangles()));
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), write_mesh(mesh).as_bytes())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

fn read_count<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, name: &str, text: &str) -> Result<usize> {
    let (line, l) = lines.next().ok_or_else(|| Error::MalformedMesh {
        line: text.lines().count(),
        reason: "unexpected end of file".into(),
    })?;
    let mut tok = l.split_whitespace();
    let count = match (tok.next(), tok.next(), tok.next()) {
        (Some(key), Some(n), None) if key == name => n.parse::<usize>().ok(),
        _ => None,
    };
    count.ok_or_else(|| Error::MalformedMesh {
        line,
        reason: format!("expected `{name} <count>`"),
    })
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let bad = |line: usize, reason: String| Error::MalformedMesh { line, reason };
    let eof = || Error::MalformedMesh {
        line: text.lines().count(),
        reason: "unexpected end of file".into(),
    };

    let (ln, header) = lines.next().ok_or_else(eof)?;
    if header.split_whitespace().collect::<Vec<_>>() != MAGIC.split(' ').collect::<Vec<_>>() {
        return Err(bad(ln, format!("expected header `{MAGIC}`, found `{header}`")));
    }

    let nv = read_count(&mut lines, "vertices", text)?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(eof)?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(ln, format!("bad coordinate: {e}")))?;
        if v.len() != 2 || !v.iter().all(|c| c.is_finite()) {
            return Err(bad(ln, "expected two finite coordinates".into()));
        }
        vertices.push([v[0], v[1]]);
    }

    let nt = read_count(&mut lines, "triangles", text)?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(eof)?;
        let t: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(ln, format!("bad vertex index: {e}")))?;
        if t.len() != 3 {
            return Err(bad(ln, "expected three vertex indices".into()));
        }
        triangles.push([t[0], t[1], t[2]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(bad(ln, "unexpected content after triangles".into()));
    }
    Mesh::new(vertices, triangles)
}
