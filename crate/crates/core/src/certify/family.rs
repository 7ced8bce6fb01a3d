use serde::{Deserialize, Serialize};

use super::CertifyError;
use crate::expr::{gradient, ScalarExpr, VectorFieldDef};
use crate::geometry::{
    bounds_point, classify_closed, distance_to_point, extract_level_components, is_nested,
    orient_inward, GeometryError, GridSpec, Hypersurface, SampleGrid,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub count: usize,
    /// Lower bound on `|grad F|` over every accepted surface.
    pub eta: f64,
    /// First level offset `a_0`, measured from `F(x0)`; defaults to half the
    /// largest `|F - F(x0)|` over nodes within `delta / 2` of `x0`.
    pub a0: Option<f64>,
    /// Candidate magnitudes `a_0 2^-i` tried before giving up.
    pub max_levels: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            count: 6,
            eta: 1e-5,
            a0: None,
            max_levels: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRejection {
    /// Offset from `F(x0)`.
    pub level: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct FamilySurface {
    /// Offset `a_i` from `F(x0)`; the surface is a component of `F = F(x0) + a_i`.
    pub offset: f64,
    /// Surface with normals `+-grad F / |grad F|` pointing inward.
    pub surface: Hypersurface,
    pub d_to_x0: f64,
    pub min_grad_norm: f64,
    /// `max |F(v) - level|` over vertices.
    pub residual: f64,
}

/// Closed level surfaces of `F`, outermost first, each bounding `x0` and
/// nested inside its predecessor.
#[derive(Clone, Debug)]
pub struct NestedFamily {
    pub function: ScalarExpr,
    pub x0: Vec<f64>,
    pub f_at_x0: f64,
    pub grid: GridSpec,
    pub eta: f64,
    pub a0: f64,
    pub surfaces: Vec<FamilySurface>,
    pub rejections: Vec<LevelRejection>,
}

impl NestedFamily {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// The surfaces at the given indices, in order, as a new family.
    pub fn subfamily(&self, indices: &[usize]) -> NestedFamily {
        NestedFamily {
            surfaces: indices.iter().map(|&i| self.surfaces[i].clone()).collect(),
            ..self.clone()
        }
    }

    pub fn innermost(&self) -> Option<&Hypersurface> {
        self.surfaces.last().map(|s| &s.surface)
    }

    pub fn outermost(&self) -> Option<&Hypersurface> {
        self.surfaces.first().map(|s| &s.surface)
    }
}

fn largest_offset_near(grid: &SampleGrid, x0: &[f64], c0: f64) -> f64 {
    let radius = grid.spec().depth(x0) / 2.0;
    (0..grid.values().len())
        .filter(|&n| {
            let p = grid.node_position(n);
            (0..x0.len()).map(|d| (p[d] - x0[d]).powi(2)).sum::<f64>().sqrt() <= radius
        })
        .map(|n| (grid.values()[n] - c0).abs())
        .fold(0.0, f64::max)
}

struct Candidate<'a> {
    f: &'a ScalarExpr,
    grad: &'a VectorFieldDef,
    grid: &'a SampleGrid,
    x0: &'a [f64],
    c0: f64,
    eta: f64,
}

impl Candidate<'_> {
    fn try_level(&self, offset: f64, prev: Option<&FamilySurface>) -> Result<FamilySurface, String> {
        let dim = self.x0.len();
        let comps = extract_level_components(self.grid, self.c0 + offset).map_err(|e| e.to_string())?;
        if comps.is_empty() {
            return Err("level set misses the grid".into());
        }
        let mut best: Option<Hypersurface> = None;
        let mut notes = Vec::new();
        for c in &comps {
            match classify_closed(c) {
                Ok(h) => match bounds_point(&h, self.x0) {
                    Ok(true) => {
                        if best.as_ref().is_none_or(|b| h.diameter < b.diameter) {
                            best = Some(h);
                        }
                    }
                    Ok(false) => notes.push("does not bound x0".to_string()),
                    Err(e) => notes.push(e.to_string()),
                },
                Err(r) => notes.push(r.to_string()),
            }
        }
        let Some(h) = best else {
            notes.sort();
            notes.dedup();
            return Err(format!(
                "no closed component bounds x0 ({} components: {})",
                comps.len(),
                notes.join(", ")
            ));
        };
        let mut min_grad = f64::INFINITY;
        let mut residual = 0.0f64;
        for v in &h.vertices {
            let p = &v[..dim];
            if let Some(what) = self.f.nonsmooth_at(p) {
                return Err(format!("F is not smooth on the surface: {what}"));
            }
            if let Some(what) = self.grad.nonsmooth_at(p) {
                return Err(format!("grad F is not smooth on the surface: {what}"));
            }
            let g = self.grad.evaluate(p).map_err(|e| e.to_string())?;
            min_grad = min_grad.min(g.iter().map(|x| x * x).sum::<f64>().sqrt());
            residual = residual.max((self.f.eval_raw(p) - h.level).abs());
        }
        if min_grad < self.eta {
            return Err(format!("min |grad F| = {min_grad:e} is below eta = {:e}", self.eta));
        }
        let oriented = orient_inward(&h, self.x0, Some(self.grad)).map_err(|e| e.to_string())?;
        let d = distance_to_point(self.x0, &oriented);
        if let Some(p) = prev {
            match is_nested(&p.surface, &oriented) {
                Ok(true) => {}
                Ok(false) => return Err("not nested inside the previous surface".into()),
                Err(GeometryError::TooClose { distance, .. }) => {
                    return Err(format!("within {distance:e} of the previous surface"))
                }
                Err(e) => return Err(e.to_string()),
            }
            if d >= p.d_to_x0 {
                return Err("distance to x0 does not decrease".into());
            }
            if oriented.diameter >= p.surface.diameter {
                return Err("diameter does not decrease".into());
            }
        }
        Ok(FamilySurface {
            offset,
            surface: oriented,
            d_to_x0: d,
            min_grad_norm: min_grad,
            residual,
        })
    }
}

/// Builds closed level surfaces of `F` around `x0` at offsets
/// `+-a_0 2^-i` from `F(x0)`, positive sign first, until `params.count`
/// surfaces are accepted.
pub fn build_nested_family(
    f: &ScalarExpr,
    x0: &[f64],
    grid: &SampleGrid,
    params: &FamilyParams,
) -> Result<NestedFamily, CertifyError> {
    if !grid.spec().strictly_contains(x0) {
        return Err(CertifyError::OutsideBox(x0.to_vec()));
    }
    let c0 = f.evaluate(x0)?;
    let grad = gradient(f)?;
    let a0 = params.a0.unwrap_or_else(|| 0.5 * largest_offset_near(grid, x0, c0));
    let cand = Candidate {
        f,
        grad: &grad,
        grid,
        x0,
        c0,
        eta: params.eta,
    };
    let mut surfaces: Vec<FamilySurface> = Vec::new();
    let mut rejections = Vec::new();
    if a0 > 0.0 {
        for i in 0..params.max_levels {
            if surfaces.len() >= params.count {
                break;
            }
            let a = a0 * 0.5f64.powi(i as i32);
            for offset in [a, -a] {
                match cand.try_level(offset, surfaces.last()) {
                    Ok(s) => {
                        surfaces.push(s);
                        break;
                    }
                    Err(reason) => rejections.push(LevelRejection { level: offset, reason }),
                }
            }
        }
    }
    if surfaces.len() < params.count {
        return Err(CertifyError::InsufficientSurfaces {
            found: surfaces.len(),
            needed: params.count,
            rejections,
        });
    }
    Ok(NestedFamily {
        function: f.clone(),
        x0: x0.to_vec(),
        f_at_x0: c0,
        grid: grid.spec().clone(),
        eta: params.eta,
        a0,
        surfaces,
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Variables};
    use crate::geometry::build_grid;

    fn setup(src: &str) -> (ScalarExpr, SampleGrid) {
        let f = parse_expression(src, Variables::cartesian(2)).unwrap();
        let g = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 2.0, 256)).unwrap();
        (f, g)
    }

    #[test]
    fn concentric_circles() {
        let (f, g) = setup("x^2+y^2");
        let fam = build_nested_family(&f, &[0.0, 0.0], &g, &FamilyParams::default()).unwrap();
        assert_eq!(fam.surfaces.len(), 6);
        assert_eq!(fam.a0, 0.5);
        for (i, s) in fam.surfaces.iter().enumerate() {
            let r = (0.5 * 0.5f64.powi(i as i32)).sqrt();
            assert!((s.d_to_x0 - r).abs() < 1e-3, "{} vs {r}", s.d_to_x0);
            assert!((s.min_grad_norm - 2.0 * r).abs() < 1e-2);
        }
        assert!(fam.surfaces.windows(2).all(|w| w[1].d_to_x0 < w[0].d_to_x0));
    }

    #[test]
    fn strict_eta_rejects_every_level() {
        let (f, g) = setup("x^2+y^2");
        let p = FamilyParams {
            eta: 3.0,
            ..FamilyParams::default()
        };
        match build_nested_family(&f, &[0.0, 0.0], &g, &p) {
            Err(CertifyError::InsufficientSurfaces { found: 0, rejections, .. }) => {
                assert!(rejections.iter().any(|r| r.reason.contains("below eta")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn maximum_uses_negative_offsets() {
        let (f, g) = setup("-(x^2+y^2)");
        let fam = build_nested_family(&f, &[0.0, 0.0], &g, &FamilyParams::default()).unwrap();
        assert!(fam.surfaces.iter().all(|s| s.offset < 0.0));
        // inward normals equal +grad F / |grad F| at a maximum
        let s = &fam.surfaces[0].surface;
        let v = s.vertices[0];
        let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
        assert!((s.normals[0][0] + v[0] / r).abs() < 1e-6);
    }
}
