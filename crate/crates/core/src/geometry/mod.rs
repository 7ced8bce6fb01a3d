//! Level-set extraction on a regular grid and predicates on closed
//! hypersurfaces: inside/outside, diameter, distance, nesting and inward
//! normals.
//!
//! Points are stored as `[f64; 3]` in both supported dimensions; the third
//! coordinate is zero for planar curves.

mod contour;
mod grid;
mod mesh_io;
mod surface;

pub use contour::{extract_level_components, Component, Connectivity};
pub use grid::{build_grid, GridSpec, SampleGrid, MIN_RESOLUTION};
pub use mesh_io::{parse_mesh, write_mesh, MeshData};
pub use surface::{
    bounds_point, classify_closed, diameter, distance_to_point, is_nested, min_gradient_norm,
    orient_inward, Hypersurface, Rejection, Topology,
};

use thiserror::Error;

use crate::expr::{EvalError, FieldError};

pub type Point = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} is not supported (only 2 and 3)")]
    UnsupportedDimension(usize),
    #[error("grid description has {got} axes, expected {expected}")]
    AxisCount { expected: usize, got: usize },
    #[error("axis {axis}: lower bound {lo} is not below upper bound {hi}")]
    EmptyBox { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: resolution {resolution} is below the minimum of {MIN_RESOLUTION}")]
    Resolution { axis: usize, resolution: usize },
    #[error("function is not finite at {count} grid nodes, first at {first:?}")]
    NonFinite { count: usize, first: Vec<f64> },
    #[error("level {level} still collides with grid nodes after nudging and shifting")]
    LevelCollision { level: f64 },
    #[error("point is {distance:e} from the surface, within the {limit:e} exclusion band")]
    TooClose { distance: f64, limit: f64 },
    #[error("surface does not bound the reference point")]
    NotBounding,
    #[error("inward orientation is ambiguous at {failures} of {vertices} vertices")]
    AmbiguousOrientation { failures: usize, vertices: usize },
    #[error("gradient vanishes or is not finite at vertex {vertex}")]
    NonRegular { vertex: usize },
    #[error("ray casting found no non-degenerate direction")]
    DegenerateRay,
    #[error("mesh text line {line}: {message}")]
    MeshFormat { line: usize, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[inline]
pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add_scaled(a: &Point, s: f64, b: &Point) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// Pads a coordinate slice of length 2 or 3 into a [`Point`].
pub fn to_point(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..coords.len()].copy_from_slice(coords);
    p
}
