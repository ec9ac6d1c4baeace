//! Plain-text mesh format, one item per line:
//!
//! ```text
//! v <x> <y>
//! t <i> <j> <k> [w]
//! ```
//!
//! Indices are 0-based. The optional `w` on a triangle line is its ω flag
//! (`1` inside the control region, `0` outside; default `1`). Blank lines
//! and lines starting with `#` are ignored.

use std::fmt::Write as _;

use super::{Triangle, Triangulation};
use crate::error::{Error, Result};

pub fn read_mesh(text: &str) -> Result<Triangulation<f64>> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno + 1, message };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .map(|s| s.parse::<f64>().map_err(|e| err(format!("bad coordinate {s:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if coords.len() != 2 {
                    return Err(err(format!("vertex needs 2 coordinates, got {}", coords.len())));
                }
                vertices.push([coords[0], coords[1]]);
            }
            Some("t") => {
                let ids: Vec<usize> = parts
                    .map(|s| s.parse::<usize>().map_err(|e| err(format!("bad index {s:?}: {e}"))))
                    .collect::<Result<_>>()?;
                let in_omega = match ids.len() {
                    3 => true,
                    4 => match ids[3] {
                        0 => false,
                        1 => true,
                        w => return Err(err(format!("omega flag must be 0 or 1, got {w}"))),
                    },
                    n => return Err(err(format!("triangle needs 3 indices and an optional flag, got {n} fields"))),
                };
                let mut tri = Triangle::new([ids[0], ids[1], ids[2]]);
                tri.in_omega = in_omega;
                triangles.push(tri);
            }
            Some(tag) => return Err(err(format!("unknown record {tag:?}"))),
            None => unreachable!(),
        }
    }
    let mesh = Triangulation::new(vertices, triangles)?;
    let hanging = mesh.hanging_vertices();
    if !hanging.is_empty() {
        return Err(Error::InvalidMesh(format!("hanging vertices {hanging:?}")));
    }
    Ok(mesh.with_longest_edge_refinement())
}

pub fn write_mesh(mesh: &Triangulation<f64>) -> String {
    let mut out = String::new();
    for p in mesh.vertices() {
        writeln!(out, "v {:?} {:?}", p[0], p[1]).unwrap();
    }
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(out, "t {a} {b} {c} {}", u8::from(t.in_omega)).unwrap();
    }
    out
}
