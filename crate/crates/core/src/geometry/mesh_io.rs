//! Plain-text mesh export:
//!
//! ```text
//! dim 2 level 2.5e-1
//! v x y nx ny
//! e i j
//! ```
//!
//! In three dimensions vertex lines carry three coordinates and three normal
//! components, and connectivity lines are `f i j k`.

use std::fmt::Write as _;

use super::surface::{Hypersurface, Topology};
use super::{GeometryError, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct MeshData {
    pub dim: usize,
    pub level: f64,
    pub vertices: Vec<Point>,
    pub normals: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
}

pub fn write_mesh(h: &Hypersurface) -> String {
    let mut out = String::new();
    let n = h.dim;
    writeln!(out, "dim {} level {:.16e}", n, h.level).unwrap();
    for (v, nv) in h.vertices.iter().zip(&h.normals) {
        out.push('v');
        for x in v[..n].iter().chain(&nv[..n]) {
            write!(out, " {x:.16e}").unwrap();
        }
        out.push('\n');
    }
    match &h.topology {
        Topology::Polyline => {
            for [a, b] in h.segments() {
                writeln!(out, "e {a} {b}").unwrap();
            }
        }
        Topology::Mesh(tris) => {
            for [a, b, c] in tris {
                writeln!(out, "f {a} {b} {c}").unwrap();
            }
        }
    }
    out
}

fn bad(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::MeshFormat {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>, GeometryError> {
    fields
        .iter()
        .map(|s| s.parse::<T>().map_err(|_| bad(line, format!("cannot parse `{s}`"))))
        .collect()
}

pub fn parse_mesh(text: &str) -> Result<MeshData, GeometryError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| bad(1, "empty mesh file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "dim" || h[2] != "level" {
        return Err(bad(hl, "expected `dim <n> level <a>`"));
    }
    let dim: usize = h[1].parse().map_err(|_| bad(hl, "bad dimension"))?;
    if !(2..=3).contains(&dim) {
        return Err(bad(hl, format!("unsupported dimension {dim}")));
    }
    let level: f64 = h[3].parse().map_err(|_| bad(hl, "bad level"))?;
    let mut mesh = MeshData {
        dim,
        level,
        vertices: Vec::new(),
        normals: Vec::new(),
        edges: Vec::new(),
        faces: Vec::new(),
    };
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (fields[0], dim) {
            ("v", _) => {
                let xs: Vec<f64> = numbers(ln, &fields[1..])?;
                if xs.len() != 2 * dim {
                    return Err(bad(ln, format!("vertex needs {} numbers", 2 * dim)));
                }
                mesh.vertices.push(super::to_point(&xs[..dim]));
                mesh.normals.push(super::to_point(&xs[dim..]));
            }
            ("e", 2) => {
                let ix: Vec<usize> = numbers(ln, &fields[1..])?;
                if ix.len() != 2 {
                    return Err(bad(ln, "edge needs 2 indices"));
                }
                mesh.edges.push([ix[0], ix[1]]);
            }
            ("f", 3) => {
                let ix: Vec<usize> = numbers(ln, &fields[1..])?;
                if ix.len() != 3 {
                    return Err(bad(ln, "face needs 3 indices"));
                }
                mesh.faces.push([ix[0], ix[1], ix[2]]);
            }
            (tag, _) => return Err(bad(ln, format!("unexpected record `{tag}`"))),
        }
    }
    let n = mesh.vertices.len();
    let out_of_range = mesh.edges.iter().flatten().chain(mesh.faces.iter().flatten()).any(|&i| i >= n);
    if out_of_range {
        return Err(bad(0, "connectivity references a missing vertex"));
    }
    Ok(mesh)
}
