use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};
use crate::expr::ScalarExpr;

pub const MIN_RESOLUTION: usize = 8;

/// Axis-aligned sampling box and the number of cells along each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn uniform(lo: &[f64], hi: &[f64], resolution: usize) -> Self {
        GridSpec {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            resolution: vec![resolution; lo.len()],
        }
    }

    /// The square/cube `[-half, half]^dim` centred at `center`.
    pub fn centered(center: &[f64], half: f64, resolution: usize) -> Self {
        GridSpec {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
            resolution: vec![resolution; center.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let dim = self.lo.len();
        if !(2..=3).contains(&dim) {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        for len in [self.hi.len(), self.resolution.len()] {
            if len != dim {
                return Err(GeometryError::AxisCount {
                    expected: dim,
                    got: len,
                });
            }
        }
        for axis in 0..dim {
            let (lo, hi) = (self.lo[axis], self.hi[axis]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::EmptyBox { axis, lo, hi });
            }
            if self.resolution[axis] < MIN_RESOLUTION {
                return Err(GeometryError::Resolution {
                    axis,
                    resolution: self.resolution[axis],
                });
            }
        }
        Ok(())
    }

    /// True when `p` lies strictly inside the box.
    pub fn strictly_contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .enumerate()
                .all(|(d, &x)| self.lo[d] < x && x < self.hi[d])
    }

    /// Distance from `p` to the nearest box face (negative outside).
    pub fn depth(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(d, &x)| (x - self.lo[d]).min(self.hi[d] - x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `F` sampled at the nodes of a regular grid. Node `(i, j, k)` is stored
/// at `i + nx * (j + ny * k)` where `nx`, `ny` count nodes.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    spec: GridSpec,
    function: ScalarExpr,
    dim: usize,
    lo: Point,
    hi: Point,
    step: Point,
    cells: [usize; 3],
    nodes: [usize; 3],
    values: Vec<f64>,
}

/// Samples `function` on the grid described by `spec`.
pub fn build_grid(function: &ScalarExpr, spec: &GridSpec) -> Result<SampleGrid, GeometryError> {
    spec.validate()?;
    let dim = spec.dim();
    if function.dim() != dim {
        return Err(GeometryError::AxisCount {
            expected: function.dim(),
            got: dim,
        });
    }
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    let mut step = [1.0; 3];
    let mut cells = [0; 3];
    let mut nodes = [1; 3];
    for d in 0..dim {
        lo[d] = spec.lo[d];
        hi[d] = spec.hi[d];
        cells[d] = spec.resolution[d];
        nodes[d] = cells[d] + 1;
        step[d] = (hi[d] - lo[d]) / cells[d] as f64;
    }
    let mut grid = SampleGrid {
        spec: spec.clone(),
        function: function.clone(),
        dim,
        lo,
        hi,
        step,
        cells,
        nodes,
        values: Vec::new(),
    };
    let total = nodes[0] * nodes[1] * nodes[2];
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let p = grid.node_position(idx);
            function.eval_raw(&p[..dim])
        })
        .collect();
    let bad: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(i, _)| i)
        .collect();
    if let Some(&first) = bad.first() {
        return Err(GeometryError::NonFinite {
            count: bad.len(),
            first: grid.node_position(first)[..dim].to_vec(),
        });
    }
    grid.values = values;
    Ok(grid)
}

impl SampleGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn function(&self) -> &ScalarExpr {
        &self.function
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn node_counts(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn step(&self) -> Point {
        self.step
    }

    /// Smallest cell edge.
    pub fn min_cell(&self) -> f64 {
        self.step[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest cell edge.
    pub fn max_cell(&self) -> f64 {
        self.step[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nodes[0] * (j + self.nodes[1] * k)
    }

    pub fn node_coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.nodes[0];
        let rest = idx / self.nodes[0];
        [i, rest % self.nodes[1], rest / self.nodes[1]]
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            0.0
        } else if i == self.cells[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.step[axis]
        }
    }

    pub fn node_position(&self, idx: usize) -> Point {
        let c = self.node_coords(idx);
        [self.coord(0, c[0]), self.coord(1, c[1]), self.coord(2, c[2])]
    }

    /// Index of the cell containing `p`, clamped into the grid.
    pub fn cell_of(&self, p: &[f64]) -> [usize; 3] {
        let mut c = [0; 3];
        for d in 0..self.dim {
            let t = ((p[d] - self.lo[d]) / self.step[d]).floor();
            c[d] = (t.max(0.0) as usize).min(self.cells[d] - 1);
        }
        c
    }

    pub(crate) fn collides(&self, level: f64) -> bool {
        self.values.contains(&level)
    }

    /// The same grid translated by `offset` cells along every axis.
    pub fn shifted(&self, offset: f64) -> Result<SampleGrid, GeometryError> {
        let mut spec = self.spec.clone();
        for d in 0..self.dim {
            spec.lo[d] += offset * self.step[d];
            spec.hi[d] += offset * self.step[d];
        }
        build_grid(&self.function, &spec)
    }
}
