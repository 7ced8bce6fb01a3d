use std::collections::HashMap;

use super::grid::SampleGrid;
use super::{sub, GeometryError, Point};

/// Edges are oriented so that the sublevel side `F < a` lies to the left
/// of each segment (2D) or behind each triangle's right-handed normal (3D).
#[derive(Clone, Debug, PartialEq)]
pub enum Connectivity {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Connectivity {
    pub fn len(&self) -> usize {
        match self {
            Connectivity::Segments(s) => s.len(),
            Connectivity::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One connected piece of a level set as extracted from the grid.
#[derive(Clone, Debug)]
pub struct Component {
    pub dim: usize,
    /// The level actually contoured, after any collision nudge.
    pub level: f64,
    pub vertices: Vec<Point>,
    pub connectivity: Connectivity,
    /// Some vertex lies on a grid edge in the box boundary.
    pub touches_box: bool,
    /// Smallest cell edge of the grid used.
    pub cell: f64,
}

/// Extracts the connected components of `F = a` from `grid`.
///
/// If `a` equals a node value it is lowered by `1e-12 * max(1, |a|)`; if
/// that still collides, the grid is shifted by `1e-6` cells and resampled.
pub fn extract_level_components(grid: &SampleGrid, a: f64) -> Result<Vec<Component>, GeometryError> {
    if !grid.collides(a) {
        return Ok(extract(grid, a));
    }
    let nudged = a - 1e-12 * a.abs().max(1.0);
    if !grid.collides(nudged) {
        return Ok(extract(grid, nudged));
    }
    let shifted = grid.shifted(1e-6)?;
    if shifted.collides(nudged) {
        return Err(GeometryError::LevelCollision { level: a });
    }
    Ok(extract(&shifted, nudged))
}

struct Builder<'g> {
    grid: &'g SampleGrid,
    level: f64,
    keys: HashMap<(usize, usize), usize>,
    vertices: Vec<Point>,
    on_boundary: Vec<bool>,
}

impl Builder<'_> {
    fn vertex(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.keys.get(&key) {
            return v;
        }
        let (ga, gb) = (self.grid.values()[key.0], self.grid.values()[key.1]);
        let t = (self.level - ga) / (gb - ga);
        let pa = self.grid.node_position(key.0);
        let pb = self.grid.node_position(key.1);
        let p = [
            pa[0] + t * (pb[0] - pa[0]),
            pa[1] + t * (pb[1] - pa[1]),
            pa[2] + t * (pb[2] - pa[2]),
        ];
        let id = self.vertices.len();
        self.vertices.push(p);
        self.on_boundary.push(self.boundary_edge(key.0, key.1));
        self.keys.insert(key, id);
        id
    }

    fn boundary_edge(&self, a: usize, b: usize) -> bool {
        let ca = self.grid.node_coords(a);
        let cb = self.grid.node_coords(b);
        let cells = self.grid.cells();
        (0..self.grid.dim()).any(|d| {
            (ca[d] == 0 && cb[d] == 0) || (ca[d] == cells[d] && cb[d] == cells[d])
        })
    }

    fn inside(&self, node: usize) -> bool {
        self.grid.values()[node] < self.level
    }
}

fn extract(grid: &SampleGrid, level: f64) -> Vec<Component> {
    let mut b = Builder {
        grid,
        level,
        keys: HashMap::new(),
        vertices: Vec::new(),
        on_boundary: Vec::new(),
    };
    let connectivity = if grid.dim() == 2 {
        Connectivity::Segments(march_squares(&mut b))
    } else {
        Connectivity::Triangles(march_tetrahedra(&mut b))
    };
    split_components(grid, level, b.vertices, b.on_boundary, connectivity)
}

fn cross2(u: &Point, v: &Point) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn centroid(points: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in points {
        for d in 0..3 {
            c[d] += p[d];
        }
    }
    let n = points.len() as f64;
    [c[0] / n, c[1] / n, c[2] / n]
}

fn march_squares(b: &mut Builder) -> Vec<[usize; 2]> {
    let grid = b.grid;
    let [nx, ny, _] = grid.cells();
    let mut segments = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let corners = [
                grid.node_index(i, j, 0),
                grid.node_index(i + 1, j, 0),
                grid.node_index(i + 1, j + 1, 0),
                grid.node_index(i, j + 1, 0),
            ];
            let inside = corners.map(|c| b.inside(c));
            let case = inside
                .iter()
                .enumerate()
                .fold(0u8, |m, (k, &s)| m | ((s as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let pos = corners.map(|c| grid.node_position(c));
            // edge e joins corner e and corner e+1
            let crossed: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            let mut pairs: Vec<([usize; 2], Point)> = Vec::with_capacity(2);
            if crossed.len() == 2 {
                let ins: Vec<Point> = (0..4).filter(|&k| inside[k]).map(|k| pos[k]).collect();
                let out: Vec<Point> = (0..4).filter(|&k| !inside[k]).map(|k| pos[k]).collect();
                pairs.push(([crossed[0], crossed[1]], sub(&centroid(&out), &centroid(&ins))));
            } else {
                let g = corners.map(|c| grid.values()[c] - b.level);
                let saddle = (g[0] * g[2] - g[1] * g[3]) / (g[0] + g[2] - g[1] - g[3]);
                let saddle_inside = saddle < 0.0;
                // corners whose side differs from the saddle's are cut off
                let cut: [usize; 2] = if inside[0] != saddle_inside { [0, 2] } else { [1, 3] };
                let center = centroid(&pos);
                for c in cut {
                    let away = sub(&center, &pos[c]);
                    let dir = if inside[c] { away } else { sub(&pos[c], &center) };
                    pairs.push(([(c + 3) % 4, c], dir));
                }
            }
            for ([e0, e1], outward) in pairs {
                let v0 = b.vertex(corners[e0], corners[(e0 + 1) % 4]);
                let v1 = b.vertex(corners[e1], corners[(e1 + 1) % 4]);
                let t = sub(&b.vertices[v1], &b.vertices[v0]);
                if cross2(&t, &outward) > 0.0 {
                    segments.push([v1, v0]);
                } else {
                    segments.push([v0, v1]);
                }
            }
        }
    }
    segments
}

/// Corner offsets of the unit cube, bit 0 = x, bit 1 = y, bit 2 = z.
const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn march_tetrahedra(b: &mut Builder) -> Vec<[usize; 3]> {
    let grid = b.grid;
    let [nx, ny, nz] = grid.cells();
    let mut triangles = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |c: usize| grid.node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                let nodes: [usize; 8] = std::array::from_fn(corner);
                let any_in = nodes.iter().any(|&n| b.inside(n));
                let any_out = nodes.iter().any(|&n| !b.inside(n));
                if !(any_in && any_out) {
                    continue;
                }
                for tet in KUHN_TETS {
                    let t = tet.map(|c| nodes[c]);
                    let ins: Vec<usize> = t.iter().copied().filter(|&n| b.inside(n)).collect();
                    let out: Vec<usize> = t.iter().copied().filter(|&n| !b.inside(n)).collect();
                    if ins.is_empty() || out.is_empty() {
                        continue;
                    }
                    let pin: Vec<Point> = ins.iter().map(|&n| grid.node_position(n)).collect();
                    let pout: Vec<Point> = out.iter().map(|&n| grid.node_position(n)).collect();
                    let outward = sub(&centroid(&pout), &centroid(&pin));
                    let mut polys: Vec<Vec<usize>> = Vec::new();
                    match (ins.len(), out.len()) {
                        (1, 3) => polys.push(out.iter().map(|&o| b.vertex(ins[0], o)).collect()),
                        (3, 1) => polys.push(ins.iter().map(|&n| b.vertex(n, out[0])).collect()),
                        _ => {
                            let q = [
                                b.vertex(ins[0], out[0]),
                                b.vertex(ins[0], out[1]),
                                b.vertex(ins[1], out[1]),
                                b.vertex(ins[1], out[0]),
                            ];
                            polys.push(vec![q[0], q[1], q[2]]);
                            polys.push(vec![q[0], q[2], q[3]]);
                        }
                    }
                    for p in polys {
                        let n = super::cross(
                            &sub(&b.vertices[p[1]], &b.vertices[p[0]]),
                            &sub(&b.vertices[p[2]], &b.vertices[p[0]]),
                        );
                        if super::dot(&n, &outward) < 0.0 {
                            triangles.push([p[0], p[2], p[1]]);
                        } else {
                            triangles.push([p[0], p[1], p[2]]);
                        }
                    }
                }
            }
        }
    }
    triangles
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
}

fn split_components(
    grid: &SampleGrid,
    level: f64,
    vertices: Vec<Point>,
    on_boundary: Vec<bool>,
    connectivity: Connectivity,
) -> Vec<Component> {
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    let elements: Vec<Vec<usize>> = match &connectivity {
        Connectivity::Segments(s) => s.iter().map(|e| e.to_vec()).collect(),
        Connectivity::Triangles(t) => t.iter().map(|e| e.to_vec()).collect(),
    };
    for e in &elements {
        for w in e.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    // components ordered by their first vertex; vertices keep extraction order
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut local = vec![0usize; vertices.len()];
    let mut groups: Vec<(Vec<Point>, bool, Vec<Vec<usize>>)> = Vec::new();
    for v in 0..vertices.len() {
        let root = find(&mut parent, v);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push((Vec::new(), false, Vec::new()));
            groups.len() - 1
        });
        local[v] = groups[g].0.len();
        groups[g].0.push(vertices[v]);
        groups[g].1 |= on_boundary[v];
    }
    for e in elements {
        let g = slot[&find(&mut parent, e[0])];
        groups[g].2.push(e.iter().map(|&v| local[v]).collect());
    }
    let dim = grid.dim();
    groups
        .into_iter()
        .map(|(verts, touches_box, elems)| Component {
            dim,
            level,
            vertices: verts,
            connectivity: if dim == 2 {
                Connectivity::Segments(elems.iter().map(|e| [e[0], e[1]]).collect())
            } else {
                Connectivity::Triangles(elems.iter().map(|e| [e[0], e[1], e[2]]).collect())
            },
            touches_box,
            cell: grid.min_cell(),
        })
        .collect()
}
