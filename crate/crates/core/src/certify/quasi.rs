use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CertifyError;
use crate::expr::ScalarExpr;
use crate::geometry::SampleGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiVerdict {
    QuasiIsolated,
    NotQuasiIsolated,
    Inconclusive,
}

impl fmt::Display for QuasiVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuasiVerdict::QuasiIsolated => "quasi-isolated",
            QuasiVerdict::NotQuasiIsolated => "not-quasi-isolated",
            QuasiVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiParams {
    /// First band half-width; defaults to the largest `|F - F(x0)|` over
    /// nodes within `delta / 2` of `x0`.
    pub eps0: Option<f64>,
    pub steps: usize,
    /// Final diameter below which the point counts as quasi-isolated;
    /// defaults to `max(10 cells, first diameter / 4)`.
    pub quasi_tol: Option<f64>,
    /// Relative spread of the last three diameters that counts as a stall.
    pub stall_tol: f64,
}

impl Default for QuasiParams {
    fn default() -> Self {
        QuasiParams {
            eps0: None,
            steps: 12,
            quasi_tol: None,
            stall_tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsolationReport {
    pub verdict: QuasiVerdict,
    pub delta: f64,
    pub epsilons: Vec<f64>,
    pub diameters: Vec<f64>,
    pub cells_in_band: Vec<usize>,
    pub touches_box: Vec<bool>,
    pub quasi_tol: f64,
    pub cell: f64,
}

struct CellGeom {
    dim: usize,
    cells: [usize; 3],
    lo: [f64; 3],
    step: [f64; 3],
}

impl CellGeom {
    fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.cells[0] * (c[1] + self.cells[1] * c[2])
    }

    fn center(&self, c: [usize; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = self.lo[d] + (c[d] as f64 + 0.5) * self.step[d];
        }
        p
    }
}

/// Per-cell min and max of the node values, shifted by `-F(x0)`.
fn cell_ranges(grid: &SampleGrid, shift: f64) -> Vec<(f64, f64)> {
    let [nx, ny, nz] = grid.cells();
    let nz = nz.max(1);
    let corners = if grid.dim() == 2 { 4 } else { 8 };
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in 0..corners {
                    let v = grid.values()[grid.node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))] - shift;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Flood-fills the shrinking bands `|F - F(x0)| < eps_i` from the cell
/// holding `x0`, inside the largest ball around `x0` that fits in the box,
/// and classifies the trend of the component diameters.
pub fn check_quasi_isolated(
    f: &ScalarExpr,
    x0: &[f64],
    grid: &SampleGrid,
    params: &QuasiParams,
) -> Result<QuasiIsolationReport, CertifyError> {
    let spec = grid.spec();
    if !spec.strictly_contains(x0) {
        return Err(CertifyError::OutsideBox(x0.to_vec()));
    }
    let c0 = f.evaluate(x0)?;
    let delta = spec.depth(x0);
    let dim = grid.dim();
    let cells = grid.cells();
    let geom = CellGeom {
        dim,
        cells: [cells[0], cells[1], cells[2].max(1)],
        lo: grid.lo(),
        step: grid.step(),
    };
    let ranges = cell_ranges(grid, c0);
    let dist = |p: &[f64; 3]| -> f64 { (0..dim).map(|d| (p[d] - x0[d]).powi(2)).sum::<f64>().sqrt() };

    let eps0 = params.eps0.unwrap_or_else(|| {
        (0..grid.values().len())
            .filter(|&n| dist(&grid.node_position(n)) <= delta / 2.0)
            .map(|n| (grid.values()[n] - c0).abs())
            .fold(0.0, f64::max)
    });
    let seed = grid.cell_of(x0);
    let seed_idx = geom.index(seed);
    let in_band = |idx: usize, eps: f64| ranges[idx].0 < eps && ranges[idx].1 > -eps;
    if !(eps0 > 0.0) || !in_band(seed_idx, eps0) {
        return Err(CertifyError::SeedOutsideBand { eps0 });
    }

    let total = geom.cells[0] * geom.cells[1] * geom.cells[2];
    let mut epsilons = Vec::new();
    let mut diameters = Vec::new();
    let mut counts = Vec::new();
    let mut touches = Vec::new();
    let mut mark = vec![u32::MAX; total];
    for step in 0..params.steps {
        let eps = eps0 * 0.5f64.powi(step as i32);
        if !in_band(seed_idx, eps) {
            break;
        }
        let stamp = step as u32;
        let mut queue = VecDeque::from([seed]);
        mark[seed_idx] = stamp;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut count = 0;
        let mut touch = false;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for d in 0..dim {
                lo[d] = lo[d].min(geom.lo[d] + c[d] as f64 * geom.step[d]);
                hi[d] = hi[d].max(geom.lo[d] + (c[d] + 1) as f64 * geom.step[d]);
                if c[d] == 0 || c[d] + 1 == geom.cells[d] {
                    touch = true;
                }
            }
            for d in 0..dim {
                for forward in [false, true] {
                    let mut n = c;
                    if forward {
                        if c[d] + 1 == geom.cells[d] {
                            continue;
                        }
                        n[d] += 1;
                    } else {
                        if c[d] == 0 {
                            continue;
                        }
                        n[d] -= 1;
                    }
                    let idx = geom.index(n);
                    if mark[idx] == stamp || !in_band(idx, eps) {
                        continue;
                    }
                    if dist(&geom.center(n)) > delta {
                        continue;
                    }
                    mark[idx] = stamp;
                    queue.push_back(n);
                }
            }
        }
        let diameter = (0..dim).map(|d| (hi[d] - lo[d]).powi(2)).sum::<f64>().sqrt();
        if step == 0 && count == 1 {
            return Err(CertifyError::GridTooCoarse);
        }
        epsilons.push(eps);
        diameters.push(diameter);
        counts.push(count);
        touches.push(touch);
    }

    let cell = grid.max_cell();
    let quasi_tol = params
        .quasi_tol
        .unwrap_or_else(|| (10.0 * cell).max(0.25 * diameters.first().copied().unwrap_or(0.0)));
    let verdict = classify(&diameters, &touches, quasi_tol, params.stall_tol, cell);
    Ok(QuasiIsolationReport {
        verdict,
        delta,
        epsilons,
        diameters,
        cells_in_band: counts,
        touches_box: touches,
        quasi_tol,
        cell,
    })
}

fn classify(diameters: &[f64], touches: &[bool], quasi_tol: f64, stall_tol: f64, cell: f64) -> QuasiVerdict {
    let n = diameters.len();
    if n >= 3 {
        let tail = &diameters[n - 3..];
        let max = tail.iter().copied().fold(0.0, f64::max);
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        if max - min <= stall_tol * max && min > 10.0 * cell {
            return QuasiVerdict::NotQuasiIsolated;
        }
    }
    match (diameters.last(), touches.last()) {
        (Some(&d), Some(false)) if d < quasi_tol => QuasiVerdict::QuasiIsolated,
        _ => QuasiVerdict::Inconclusive,
    }
}
