use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use robust::{orient2d, Coord};
use thiserror::Error;

use super::contour::{Component, Connectivity};
use super::{add_scaled, cross, dist, dot, norm, sub, GeometryError, Point};
use crate::expr::{gradient, ScalarExpr, VectorFieldDef};

/// Why an extracted component is not accepted as a closed hypersurface.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Rejection {
    #[error("touches the grid box")]
    TouchesBox,
    #[error("open curve or surface with boundary")]
    OpenCurve,
    #[error("non-manifold: {0}")]
    NonManifold(String),
    #[error("degenerate: only {0} vertices")]
    Degenerate(usize),
    #[error("inward orientation fails at {0} vertices")]
    AmbiguousOrientation(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    /// Closed polyline through the vertices in storage order.
    Polyline,
    /// Watertight, consistently oriented triangle mesh.
    Mesh(Vec<[usize; 3]>),
}

/// A closed curve (n = 2) or closed surface (n = 3) with inward unit normals.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    pub dim: usize,
    pub level: f64,
    pub vertices: Vec<Point>,
    pub topology: Topology,
    pub normals: Vec<Point>,
    pub diameter: f64,
    pub internal_witness: Point,
    /// Smallest cell edge of the grid the surface came from.
    pub cell: f64,
    pub bbox: (Point, Point),
    index: OnceLock<Arc<SurfaceIndex>>,
}

impl Hypersurface {
    /// Assembles a surface from parts, checking closedness but not normals.
    pub fn from_parts(
        dim: usize,
        level: f64,
        vertices: Vec<Point>,
        topology: Topology,
        normals: Vec<Point>,
        cell: f64,
    ) -> Result<Self, Rejection> {
        if vertices.len() < 8 {
            return Err(Rejection::Degenerate(vertices.len()));
        }
        if let Topology::Mesh(tris) = &topology {
            check_mesh(vertices.len(), tris)?;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let mut h = Hypersurface {
            dim,
            level,
            vertices,
            topology,
            normals,
            diameter: 0.0,
            internal_witness: [0.0; 3],
            cell,
            bbox: (lo, hi),
            index: OnceLock::new(),
        };
        h.diameter = diameter(&h);
        if !h.normals.is_empty() {
            h.internal_witness = add_scaled(&h.vertices[0], cell / 2.0, &h.normals[0]);
        }
        Ok(h)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Segments (2D) as vertex pairs, in cyclic order.
    pub fn segments(&self) -> Vec<[usize; 2]> {
        let n = self.vertices.len();
        (0..n).map(|i| [i, (i + 1) % n]).collect()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        match &self.topology {
            Topology::Mesh(t) => t,
            Topology::Polyline => &[],
        }
    }

    fn index(&self) -> &SurfaceIndex {
        self.index.get_or_init(|| Arc::new(SurfaceIndex::build(self)))
    }

    /// Parity test with no distance guard.
    pub(crate) fn contains_raw(&self, p: &Point) -> Result<bool, GeometryError> {
        if self.dim == 2 {
            Ok(polygon_contains(&self.vertices, p))
        } else {
            self.index().mesh_contains(self, p)
        }
    }

    /// Distance from `p` to the nearest point of the surface if it is at
    /// most `radius`.
    pub fn distance_within(&self, p: &Point, radius: f64) -> Option<f64> {
        self.index().nearest_within(self, p, radius)
    }

    /// The `+h` probe lands inside and the `-h` probe outside.
    pub(crate) fn probe_ok(&self, vertex: usize, normal: &Point) -> Result<bool, GeometryError> {
        let h = self.cell / 2.0;
        let v = &self.vertices[vertex];
        Ok(self.contains_raw(&add_scaled(v, h, normal))?
            && !self.contains_raw(&add_scaled(v, -h, normal))?)
    }
}

/// Accepts a component as a closed hypersurface with inward normals taken
/// from the local geometry.
pub fn classify_closed(c: &Component) -> Result<Hypersurface, Rejection> {
    if c.touches_box {
        return Err(Rejection::TouchesBox);
    }
    if c.vertices.len() < 8 {
        return Err(Rejection::Degenerate(c.vertices.len()));
    }
    let mut h = match &c.connectivity {
        Connectivity::Segments(segs) => {
            let order = cycle_order(c.vertices.len(), segs)?;
            let vertices: Vec<Point> = order.iter().map(|&i| c.vertices[i]).collect();
            if let Some(detail) = self_intersection(&vertices) {
                return Err(Rejection::NonManifold(detail));
            }
            let normals = polyline_normals(&vertices);
            Hypersurface::from_parts(2, c.level, vertices, Topology::Polyline, normals, c.cell)?
        }
        Connectivity::Triangles(tris) => {
            check_mesh(c.vertices.len(), tris)?;
            let normals = mesh_normals(&c.vertices, tris);
            Hypersurface::from_parts(
                3,
                c.level,
                c.vertices.clone(),
                Topology::Mesh(tris.clone()),
                normals,
                c.cell,
            )?
        }
    };
    let normals = h.normals.clone();
    let failures = count_probe_failures(&h, &normals).map_err(|_| Rejection::AmbiguousOrientation(h.vertices.len()))?;
    if failures > 0 {
        return Err(Rejection::AmbiguousOrientation(failures));
    }
    h.internal_witness = add_scaled(&h.vertices[0], h.cell / 2.0, &h.normals[0]);
    Ok(h)
}

fn count_probe_failures(h: &Hypersurface, normals: &[Point]) -> Result<usize, GeometryError> {
    let mut failures = 0;
    for (i, n) in normals.iter().enumerate() {
        if !h.probe_ok(i, n)? {
            failures += 1;
        }
    }
    Ok(failures)
}

fn cycle_order(n: usize, segs: &[[usize; 2]]) -> Result<Vec<usize>, Rejection> {
    let mut next = vec![usize::MAX; n];
    let mut indeg = vec![0usize; n];
    for &[a, b] in segs {
        if next[a] != usize::MAX {
            return Err(Rejection::NonManifold(format!("vertex {a} has two outgoing edges")));
        }
        next[a] = b;
        indeg[b] += 1;
    }
    if let Some(v) = indeg.iter().position(|&d| d > 1) {
        return Err(Rejection::NonManifold(format!("vertex {v} has two incoming edges")));
    }
    if next.contains(&usize::MAX) || indeg.contains(&0) {
        return Err(Rejection::OpenCurve);
    }
    let mut order = Vec::with_capacity(n);
    let mut v = 0;
    loop {
        order.push(v);
        v = next[v];
        if v == 0 {
            break;
        }
        if order.len() > n {
            return Err(Rejection::NonManifold("edge cycle does not close".into()));
        }
    }
    if order.len() != n {
        return Err(Rejection::NonManifold("more than one edge cycle".into()));
    }
    Ok(order)
}

fn coord(p: &Point) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orient2d(coord(a), coord(b), coord(c));
    let o2 = orient2d(coord(a), coord(b), coord(d));
    let o3 = orient2d(coord(c), coord(d), coord(a));
    let o4 = orient2d(coord(c), coord(d), coord(b));
    if o1 == 0.0 && o2 == 0.0 {
        // collinear: overlap of projections
        let axis = if (a[0] - b[0]).abs() >= (a[1] - b[1]).abs() { 0 } else { 1 };
        let (lo1, hi1) = (a[axis].min(b[axis]), a[axis].max(b[axis]));
        let (lo2, hi2) = (c[axis].min(d[axis]), c[axis].max(d[axis]));
        return lo1 <= hi2 && lo2 <= hi1;
    }
    o1 * o2 <= 0.0 && o3 * o4 <= 0.0
}

/// Exact-sign test over all pairs of non-adjacent edges.
fn self_intersection(vertices: &[Point]) -> Option<String> {
    let n = vertices.len();
    let boxes: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            (a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1]))
        })
        .collect();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            let (c, d) = (&vertices[j], &vertices[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Some(format!("edges {i} and {j} intersect"));
            }
        }
    }
    None
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

fn unit(v: Point) -> Point {
    let l = norm(&v);
    if l > 0.0 {
        [v[0] / l, v[1] / l, v[2] / l]
    } else {
        v
    }
}

fn polyline_normals(vertices: &[Point]) -> Vec<Point> {
    let n = vertices.len();
    let left = signed_area(vertices) > 0.0;
    (0..n)
        .map(|i| {
            let t = sub(&vertices[(i + 1) % n], &vertices[(i + n - 1) % n]);
            unit(if left { [-t[1], t[0], 0.0] } else { [t[1], -t[0], 0.0] })
        })
        .collect()
}

fn signed_volume(vertices: &[Point], tris: &[[usize; 3]]) -> f64 {
    tris.iter()
        .map(|t| dot(&vertices[t[0]], &cross(&vertices[t[1]], &vertices[t[2]])))
        .sum::<f64>()
        / 6.0
}

fn mesh_normals(vertices: &[Point], tris: &[[usize; 3]]) -> Vec<Point> {
    let mut acc = vec![[0.0; 3]; vertices.len()];
    for t in tris {
        let n = cross(
            &sub(&vertices[t[1]], &vertices[t[0]]),
            &sub(&vertices[t[2]], &vertices[t[0]]),
        );
        for &v in t {
            for d in 0..3 {
                acc[v][d] += n[d];
            }
        }
    }
    // positive volume means the right-handed normals face outward
    let s = if signed_volume(vertices, tris) > 0.0 { -1.0 } else { 1.0 };
    acc.into_iter().map(|n| unit([s * n[0], s * n[1], s * n[2]])).collect()
}

/// Every directed edge must appear once and be matched by its reverse.
fn check_mesh(n: usize, tris: &[[usize; 3]]) -> Result<(), Rejection> {
    let mut directed: HashMap<(usize, usize), u32> = HashMap::with_capacity(tris.len() * 3);
    for t in tris {
        if t.iter().any(|&v| v >= n) {
            return Err(Rejection::NonManifold("triangle references a missing vertex".into()));
        }
        for e in 0..3 {
            let key = (t[e], t[(e + 1) % 3]);
            let count = directed.entry(key).or_default();
            *count += 1;
            if *count > 1 {
                return Err(Rejection::NonManifold(format!(
                    "edge {:?} is shared inconsistently",
                    key
                )));
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            return Err(Rejection::OpenCurve);
        }
    }
    Ok(())
}

/// Crossing-number test with the half-open rule and exact side signs.
fn polygon_contains(vertices: &[Point], p: &Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let o = orient2d(coord(a), coord(b), coord(p));
            // crossing lies to the right of p iff p is left of the upward edge
            if (b[1] > a[1]) == (o > 0.0) {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug)]
struct SurfaceIndex {
    bin: f64,
    elems: Vec<Vec<usize>>,
    elements: HashMap<[i64; 3], Vec<u32>>,
    /// Triangles binned by their projection along each axis.
    projected: Vec<HashMap<[i64; 2], Vec<u32>>>,
}

fn bin_of(x: f64, bin: f64) -> i64 {
    (x / bin).floor() as i64
}

impl SurfaceIndex {
    fn build(h: &Hypersurface) -> Self {
        let bin = 2.0 * h.cell.max(f64::MIN_POSITIVE);
        let elems = element_list(h);
        let mut elements: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut projected: Vec<HashMap<[i64; 2], Vec<u32>>> = vec![HashMap::new(); 3];
        for (id, e) in elems.iter().enumerate() {
            let (lo, hi) = element_bounds(h, e);
            let l = lo.map(|x| bin_of(x, bin));
            let u = hi.map(|x| bin_of(x, bin));
            for i in l[0]..=u[0] {
                for j in l[1]..=u[1] {
                    for k in l[2]..=u[2] {
                        elements.entry([i, j, k]).or_default().push(id as u32);
                    }
                }
            }
            if h.dim == 3 {
                for (axis, map) in projected.iter_mut().enumerate() {
                    let (a, b) = other_axes(axis);
                    for i in l[a]..=u[a] {
                        for j in l[b]..=u[b] {
                            map.entry([i, j]).or_default().push(id as u32);
                        }
                    }
                }
            }
        }
        SurfaceIndex {
            bin,
            elems,
            elements,
            projected,
        }
    }

    fn nearest_within(&self, h: &Hypersurface, p: &Point, radius: f64) -> Option<f64> {
        let elems = &self.elems;
        let lo = [p[0] - radius, p[1] - radius, p[2] - radius].map(|x| bin_of(x, self.bin));
        let hi = [p[0] + radius, p[1] + radius, p[2] + radius].map(|x| bin_of(x, self.bin));
        let mut best = f64::INFINITY;
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    if let Some(ids) = self.elements.get(&[i, j, k]) {
                        for &id in ids {
                            let d = element_distance(h, &elems[id as usize], p);
                            best = best.min(d);
                        }
                    }
                }
            }
        }
        (best <= radius).then_some(best)
    }

    fn mesh_contains(&self, h: &Hypersurface, p: &Point) -> Result<bool, GeometryError> {
        let tris = h.triangles();
        let mut q = *p;
        let jitter = 1e-9 * h.cell;
        for attempt in 0..8 {
            for axis in 0..3 {
                if let Some(inside) = self.ray_parity(h, tris, &q, axis) {
                    return Ok(inside);
                }
            }
            // every axis grazed an edge: move off it by a negligible amount
            let t = attempt as f64 + 1.0;
            q = [p[0] + jitter * t.sin(), p[1] + jitter * (1.7 * t).cos(), p[2] + jitter * (0.3 * t).sin()];
        }
        Err(GeometryError::DegenerateRay)
    }

    /// Parity of crossings of the ray from `p` along `+axis`, or `None`
    /// when the ray meets an edge or vertex.
    fn ray_parity(&self, h: &Hypersurface, tris: &[[usize; 3]], p: &Point, axis: usize) -> Option<bool> {
        let (a, b) = other_axes(axis);
        let key = [bin_of(p[a], self.bin), bin_of(p[b], self.bin)];
        let Some(ids) = self.projected[axis].get(&key) else {
            return Some(false);
        };
        let pc = Coord { x: p[a], y: p[b] };
        let mut inside = false;
        for &id in ids {
            let t = tris[id as usize];
            let [va, vb, vc] = t.map(|i| h.vertices[i]);
            let (ca, cb, cc) = (
                Coord { x: va[a], y: va[b] },
                Coord { x: vb[a], y: vb[b] },
                Coord { x: vc[a], y: vc[b] },
            );
            let s1 = orient2d(ca, cb, pc);
            let s2 = orient2d(cb, cc, pc);
            let s3 = orient2d(cc, ca, pc);
            let pos = (s1 > 0.0) as u8 + (s2 > 0.0) as u8 + (s3 > 0.0) as u8;
            let neg = (s1 < 0.0) as u8 + (s2 < 0.0) as u8 + (s3 < 0.0) as u8;
            if pos == 3 || neg == 3 {
                let total = s1 + s2 + s3;
                let hit = (s2 * va[axis] + s3 * vb[axis] + s1 * vc[axis]) / total;
                if hit > p[axis] {
                    inside = !inside;
                } else if hit == p[axis] {
                    return None;
                }
            } else if pos + neg < 3 && (pos == 0 || neg == 0) {
                return None;
            }
        }
        Some(inside)
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    }
}

fn element_list(h: &Hypersurface) -> Vec<Vec<usize>> {
    match &h.topology {
        Topology::Polyline => h.segments().iter().map(|s| s.to_vec()).collect(),
        Topology::Mesh(t) => t.iter().map(|t| t.to_vec()).collect(),
    }
}

fn element_bounds(h: &Hypersurface, e: &[usize]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &v in e {
        for d in 0..3 {
            lo[d] = lo[d].min(h.vertices[v][d]);
            hi[d] = hi[d].max(h.vertices[v][d]);
        }
    }
    (lo, hi)
}

fn element_distance(h: &Hypersurface, e: &[usize], p: &Point) -> f64 {
    if e.len() == 2 {
        segment_distance(&h.vertices[e[0]], &h.vertices[e[1]], p)
    } else {
        triangle_distance(&h.vertices[e[0]], &h.vertices[e[1]], &h.vertices[e[2]], p)
    }
}

fn segment_distance(a: &Point, b: &Point, p: &Point) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(&ab, &ab);
    let t = if l2 > 0.0 { (dot(&sub(p, a), &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    dist(&add_scaled(a, t, &ab), p)
}

/// Closest-point distance by Voronoi region classification.
fn triangle_distance(a: &Point, b: &Point, c: &Point, p: &Point) -> f64 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return dist(a, p);
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return dist(b, p);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return dist(&add_scaled(a, d1 / (d1 - d3), &ab), p);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return dist(c, p);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return dist(&add_scaled(a, d2 / (d2 - d6), &ac), p);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return dist(&add_scaled(b, w, &sub(c, b)), p);
    }
    if degenerate_triangle(&ab, &ac) {
        return segment_distance(a, b, p)
            .min(segment_distance(b, c, p))
            .min(segment_distance(c, a, p));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let q = add_scaled(&add_scaled(a, v, &ab), w, &ac);
    dist(&q, p)
}

fn degenerate_triangle(ab: &Point, ac: &Point) -> bool {
    norm(&cross(ab, ac)) == 0.0
}

/// True iff `p` lies in the bounded component of the complement of `h`.
pub fn bounds_point(h: &Hypersurface, p: &[f64]) -> Result<bool, GeometryError> {
    let q = super::to_point(p);
    let limit = h.cell / 2.0;
    if let Some(distance) = h.distance_within(&q, limit) {
        return Err(GeometryError::TooClose { distance, limit });
    }
    h.contains_raw(&q)
}

/// Largest pairwise vertex distance.
pub fn diameter(h: &Hypersurface) -> f64 {
    let v = &h.vertices;
    let mut best = 0.0f64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.max(dist(&v[i], &v[j]));
        }
    }
    best
}

/// `max_v |p - v|` over the vertices of `h`.
pub fn distance_to_point(p: &[f64], h: &Hypersurface) -> f64 {
    let q = super::to_point(p);
    h.vertices.iter().map(|v| dist(v, &q)).fold(0.0, f64::max)
}

/// Signs the normals of `h` so they point toward the component holding
/// `x0`. With a gradient, normals become `+-grad F / |grad F|`.
pub fn orient_inward(
    h: &Hypersurface,
    x0: &[f64],
    grad: Option<&VectorFieldDef>,
) -> Result<Hypersurface, GeometryError> {
    if !bounds_point(h, x0)? {
        return Err(GeometryError::NotBounding);
    }
    let mut out = h.clone();
    if let Some(g) = grad {
        let mut raw = Vec::with_capacity(h.vertices.len());
        let mut best = (0usize, -1.0f64);
        for (i, v) in h.vertices.iter().enumerate() {
            let gv = g.evaluate(&v[..h.dim])?;
            let n = norm(&super::to_point(&gv));
            if !(n.is_finite() && n > 0.0) {
                return Err(GeometryError::NonRegular { vertex: i });
            }
            if n > best.1 {
                best = (i, n);
            }
            raw.push(unit(super::to_point(&gv)));
        }
        let sign = if h.probe_ok(best.0, &raw[best.0])? {
            1.0
        } else {
            let flipped = raw[best.0].map(|x| -x);
            if h.probe_ok(best.0, &flipped)? {
                -1.0
            } else {
                return Err(GeometryError::AmbiguousOrientation {
                    failures: h.vertices.len(),
                    vertices: h.vertices.len(),
                });
            }
        };
        out.normals = raw.into_iter().map(|n| n.map(|x| sign * x)).collect();
    }
    let normals = out.normals.clone();
    let failures = count_probe_failures(&out, &normals)?;
    if failures > 0 {
        return Err(GeometryError::AmbiguousOrientation {
            failures,
            vertices: out.vertices.len(),
        });
    }
    out.internal_witness = add_scaled(&out.vertices[0], out.cell / 2.0, &out.normals[0]);
    Ok(out)
}

/// True iff every vertex of `inner` is bounded by `outer`.
pub fn is_nested(outer: &Hypersurface, inner: &Hypersurface) -> Result<bool, GeometryError> {
    let limit = outer.cell.max(inner.cell);
    for v in &inner.vertices {
        if let Some(distance) = outer.distance_within(v, limit) {
            return Err(GeometryError::TooClose { distance, limit });
        }
    }
    for v in &inner.vertices {
        if !outer.contains_raw(v)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `min_v |grad F(v)|` over the vertices of `h`.
pub fn min_gradient_norm(f: &ScalarExpr, h: &Hypersurface) -> Result<f64, GeometryError> {
    let g = gradient(f)?;
    let mut best = f64::INFINITY;
    for v in &h.vertices {
        let gv = g.evaluate(&v[..h.dim])?;
        best = best.min(gv.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Variables};
    use crate::geometry::{build_grid, extract_level_components, GridSpec};

    fn surface(src: &str, level: f64, dim: usize, half: f64, res: usize) -> (ScalarExpr, Hypersurface) {
        let f = parse_expression(src, Variables::cartesian(dim)).unwrap();
        let g = build_grid(&f, &GridSpec::centered(&vec![0.0; dim], half, res)).unwrap();
        let comps = extract_level_components(&g, level).unwrap();
        assert_eq!(comps.len(), 1);
        (f, classify_closed(&comps[0]).unwrap())
    }

    #[test]
    fn circle_predicates() {
        let (_, h) = surface("x^2+y^2", 1.0, 2, 2.0, 256);
        assert!(bounds_point(&h, &[0.0, 0.0]).unwrap());
        assert!(!bounds_point(&h, &[3.0, 0.0]).unwrap());
        assert!(matches!(bounds_point(&h, &[1.0, 0.0]), Err(GeometryError::TooClose { .. })));
        let chord = h.cell;
        assert!((h.diameter - 2.0).abs() <= 2.0 * chord * chord);
        assert!((distance_to_point(&[0.0, 0.0], &h) - 1.0).abs() < 1e-3);
        assert!((distance_to_point(&[1.0, 0.0], &h) - 2.0).abs() < 1e-3);
        let (_, small) = surface("x^2+y^2", 0.0625, 2, 2.0, 256);
        assert!((small.diameter - 0.5).abs() < 1e-3);
    }

    #[test]
    fn gradient_normals_point_inward() {
        let (f, h) = surface("x^2+y^2", 1.0, 2, 2.0, 256);
        let g = gradient(&f).unwrap();
        let o = orient_inward(&h, &[0.0, 0.0], Some(&g)).unwrap();
        for (v, n) in o.vertices.iter().zip(&o.normals) {
            assert!((norm(n) - 1.0).abs() < 1e-9);
            let r = norm(v);
            assert!((n[0] + v[0] / r).abs() < 1e-6 && (n[1] + v[1] / r).abs() < 1e-6);
        }
        let top = o.vertices.iter().position(|v| v[0].abs() < 1e-9 && v[1] > 0.0).unwrap();
        assert!((o.normals[top][1] + 1.0).abs() < 1e-6);
        // geometric normals agree to within chord-scale error
        for (a, b) in h.normals.iter().zip(&o.normals) {
            assert!(dot(a, b) > 0.999);
        }
    }

    #[test]
    fn sphere_normals_and_containment() {
        let (f, h) = surface("x^2+y^2+z^2", 1.0, 3, 2.0, 32);
        assert!(bounds_point(&h, &[0.0, 0.0, 0.5]).unwrap());
        assert!(!bounds_point(&h, &[0.0, 1.5, 0.0]).unwrap());
        let g = gradient(&f).unwrap();
        let o = orient_inward(&h, &[0.0, 0.0, 0.0], Some(&g)).unwrap();
        for (v, n) in o.vertices.iter().zip(&o.normals) {
            let r = norm(v);
            for d in 0..3 {
                assert!((n[d] + v[d] / r).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn nesting_order() {
        let (_, outer) = surface("x^2+y^2", 1.0, 2, 2.0, 128);
        let (_, inner) = surface("x^2+y^2", 0.25, 2, 2.0, 128);
        assert!(is_nested(&outer, &inner).unwrap());
        assert!(!is_nested(&inner, &outer).unwrap());
        let (_, shifted) = surface("(x-2.5)^2+y^2", 1.0, 2, 4.0, 128);
        assert!(!is_nested(&outer, &shifted).unwrap());
    }

    #[test]
    fn gradient_norm_on_circle() {
        let (f, h) = surface("x^2+y^2", 1.0, 2, 2.0, 256);
        assert!((min_gradient_norm(&f, &h).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn touching_and_small_components_rejected() {
        let f = parse_expression("x", Variables::cartesian(2)).unwrap();
        let g = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 1.0, 16)).unwrap();
        let c = &extract_level_components(&g, 0.5).unwrap()[0];
        assert_eq!(classify_closed(c).unwrap_err(), Rejection::TouchesBox);
        let f = parse_expression("x^2+y^2", Variables::cartesian(2)).unwrap();
        let g = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 2.0, 16)).unwrap();
        let c = &extract_level_components(&g, 0.01).unwrap()[0];
        assert!(matches!(classify_closed(c), Err(Rejection::Degenerate(_))));
    }

    #[test]
    fn open_component_rejected_when_not_touching() {
        let c = Component {
            dim: 2,
            level: 0.0,
            vertices: (0..10).map(|i| [i as f64, 0.5 * i as f64, 0.0]).collect(),
            connectivity: Connectivity::Segments((0..9).map(|i| [i, i + 1]).collect()),
            touches_box: false,
            cell: 0.1,
        };
        assert_eq!(classify_closed(&c).unwrap_err(), Rejection::OpenCurve);
    }

    #[test]
    fn crossing_polygon_rejected() {
        // a bow-tie through 10 vertices, traversed in one cycle
        let pts = [
            [0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [2.0, 1.0], [2.0, 0.0],
            [1.0, 1.0 + 1e-3], [0.0, 2.0], [-0.5, 1.5], [-0.5, 1.0], [-0.5, 0.5],
        ];
        let c = Component {
            dim: 2,
            level: 0.0,
            vertices: pts.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            connectivity: Connectivity::Segments((0..10).map(|i| [i, (i + 1) % 10]).collect()),
            touches_box: false,
            cell: 0.1,
        };
        assert!(matches!(classify_closed(&c), Err(Rejection::NonManifold(_))));
    }
}
