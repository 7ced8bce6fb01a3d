use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{StabilityCertificate, SurfaceRecord, Tolerances, Verdict, Witness};
use super::family::NestedFamily;
use super::CertifyError;
use crate::expr::{gradient, ScalarExpr, VectorFieldDef};
use crate::geometry::{dot, to_point, Hypersurface, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignParams {
    /// Tolerance relative to `max |f|` over the surface.
    pub rel_tol: f64,
    /// Absolute tolerance replacing `rel_tol * max |f|` when set.
    pub abs_tol: Option<f64>,
}

impl Default for SignParams {
    fn default() -> Self {
        SignParams {
            rel_tol: 1e-6,
            abs_tol: None,
        }
    }
}

/// Extrema of `S(v) = <N(v), f(v)>` over the vertices of one surface.
#[derive(Clone, Debug, PartialEq)]
pub struct SignReport {
    pub index: usize,
    pub min_s: f64,
    pub max_s: f64,
    pub argmin: usize,
    pub argmax: usize,
    /// Vertices with `S < -tol_s`.
    pub violations: usize,
    /// Vertices with `S > tol_s`.
    pub positives: usize,
    pub tol_s: f64,
    pub margin: f64,
    pub max_f: f64,
    pub values: Vec<f64>,
}

impl SignReport {
    pub fn max_abs(&self) -> f64 {
        self.min_s.abs().max(self.max_s.abs())
    }

    /// Certain violation: below `-tol_s` by more than the margin.
    pub fn violated(&self) -> bool {
        self.min_s < -self.tol_s - self.margin
    }
}

fn report(index: usize, values: Vec<f64>, max_f: f64, margin: f64, params: &SignParams) -> SignReport {
    let tol_s = params.abs_tol.unwrap_or(params.rel_tol * max_f) + margin;
    let mut argmin = 0;
    let mut argmax = 0;
    for (i, &s) in values.iter().enumerate() {
        if s < values[argmin] {
            argmin = i;
        }
        if s > values[argmax] {
            argmax = i;
        }
    }
    SignReport {
        index,
        min_s: values[argmin],
        max_s: values[argmax],
        argmin,
        argmax,
        violations: values.iter().filter(|&&s| s < -tol_s).count(),
        positives: values.iter().filter(|&&s| s > tol_s).count(),
        tol_s,
        margin,
        max_f,
        values,
    }
}

fn field_at(f: &VectorFieldDef, v: &Point, dim: usize) -> Result<Vec<f64>, CertifyError> {
    Ok(f.evaluate(&v[..dim])?)
}

fn length(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `S(v) = <N(v), f(v)>` at every vertex of `h`. `margin` is added to the
/// tolerance; see [`interpolation_margin`].
pub fn sign_condition(
    f: &VectorFieldDef,
    h: &Hypersurface,
    margin: f64,
    params: &SignParams,
) -> Result<SignReport, CertifyError> {
    let mut values = Vec::with_capacity(h.vertices.len());
    let mut max_f = 0.0f64;
    for (v, n) in h.vertices.iter().zip(&h.normals) {
        let fv = field_at(f, v, h.dim)?;
        max_f = max_f.max(length(&fv));
        values.push(dot(n, &to_point(&fv)));
    }
    Ok(report(0, values, max_f, margin, params))
}

/// How much `S` moves when each vertex is projected onto the exact level
/// set by Newton steps along `grad F`, with the normal recomputed there.
pub fn interpolation_margin(
    func: &ScalarExpr,
    f: &VectorFieldDef,
    h: &Hypersurface,
) -> Result<f64, CertifyError> {
    let grad = gradient(func)?;
    let dim = h.dim;
    let mut margin = 0.0f64;
    for (v, n) in h.vertices.iter().zip(&h.normals) {
        let mut p = v[..dim].to_vec();
        for _ in 0..2 {
            let g = grad.evaluate(&p)?;
            let g2: f64 = g.iter().map(|x| x * x).sum();
            if !(g2 > 0.0) {
                break;
            }
            let r = func.evaluate(&p)? - h.level;
            for d in 0..dim {
                p[d] -= r * g[d] / g2;
            }
        }
        let g = to_point(&grad.evaluate(&p)?);
        let gl = dot(&g, &g).sqrt();
        if !(gl > 0.0) {
            continue;
        }
        let side = if dot(&g, n) >= 0.0 { 1.0 } else { -1.0 };
        let projected: Point = g.map(|x| side * x / gl);
        let s_here = dot(n, &to_point(&f.evaluate(&v[..dim])?));
        let s_there = dot(&projected, &to_point(&f.evaluate(&p)?));
        margin = margin.max((s_there - s_here).abs());
    }
    Ok(margin)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TildeReport {
    /// `+1` when `grad F` points toward the internal component.
    pub epsilon: f64,
    pub report: SignReport,
}

/// `S~(v) = <eps(H) grad F(v), f(v)>`, with `eps(H)` fixed by probing at
/// the vertex of largest `|grad F|` and validated at every vertex.
pub fn tilde_sign_condition(
    func: &ScalarExpr,
    f: &VectorFieldDef,
    h: &Hypersurface,
    params: &SignParams,
) -> Result<TildeReport, CertifyError> {
    let grad = gradient(func)?;
    let dim = h.dim;
    let mut grads = Vec::with_capacity(h.vertices.len());
    let mut best = (0usize, -1.0f64);
    for (i, v) in h.vertices.iter().enumerate() {
        let g = to_point(&grad.evaluate(&v[..dim])?);
        let l = dot(&g, &g).sqrt();
        if !(l.is_finite() && l > 0.0) {
            return Err(crate::geometry::GeometryError::NonRegular { vertex: i }.into());
        }
        if l > best.1 {
            best = (i, l);
        }
        grads.push(g);
    }
    let unit = |g: &Point| -> Point {
        let l = dot(g, g).sqrt();
        g.map(|x| x / l)
    };
    let epsilon = if h.probe_ok(best.0, &unit(&grads[best.0]))? {
        1.0
    } else if h.probe_ok(best.0, &unit(&grads[best.0]).map(|x| -x))? {
        -1.0
    } else {
        return Err(CertifyError::MixedProbeSigns { surface: 0 });
    };
    for (i, g) in grads.iter().enumerate() {
        if !h.probe_ok(i, &unit(g).map(|x| epsilon * x))? {
            return Err(CertifyError::MixedProbeSigns { surface: 0 });
        }
    }
    let mut values = Vec::with_capacity(grads.len());
    let mut scale = 0.0f64;
    for (v, g) in h.vertices.iter().zip(&grads) {
        let fv = field_at(f, v, dim)?;
        scale = scale.max(length(&fv) * dot(g, g).sqrt());
        values.push(epsilon * dot(g, &to_point(&fv)));
    }
    Ok(TildeReport {
        epsilon,
        report: report(0, values, scale, 0.0, params),
    })
}

/// Evaluates the sign condition on every surface of `family` and issues a
/// verdict: certified-stable when every `min S >= -tol_S`, violated when
/// some vertex lies below `-tol_S` by more than the interpolation margin,
/// inconclusive otherwise.
pub fn certify_stability(
    f: &VectorFieldDef,
    family: &NestedFamily,
    params: &SignParams,
) -> StabilityCertificate {
    let dim = family.dim();
    let results: Vec<Result<SignReport, String>> = family
        .surfaces
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            for v in &s.surface.vertices {
                if let Some(what) = f.nonsmooth_at(&v[..dim]) {
                    return Err(format!("surface {i}: field is not smooth on the surface: {what}"));
                }
            }
            let margin = interpolation_margin(&family.function, f, &s.surface)
                .map_err(|e| format!("surface {i}: {e}"))?;
            let mut r = sign_condition(f, &s.surface, margin, params).map_err(|e| format!("surface {i}: {e}"))?;
            r.index = i;
            Ok(r)
        })
        .collect();

    let mut reasons = Vec::new();
    let mut reports = Vec::new();
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(msg) => reasons.push(msg),
        }
    }
    let mut witness = None;
    let verdict = if !reasons.is_empty() {
        Verdict::Inconclusive
    } else if reports.is_empty() {
        reasons.push("family has no surfaces".into());
        Verdict::Inconclusive
    } else if reports.iter().all(|r| r.min_s >= -r.tol_s) {
        Verdict::CertifiedStable
    } else if let Some(worst) = reports
        .iter()
        .filter(|r| r.violated())
        .min_by(|a, b| a.min_s.total_cmp(&b.min_s))
    {
        let v = family.surfaces[worst.index].surface.vertices[worst.argmin];
        witness = Some(Witness {
            surface: worst.index,
            vertex: worst.argmin,
            point: v[..dim].to_vec(),
            s: worst.min_s,
            threshold: -worst.tol_s - worst.margin,
        });
        Verdict::Violated
    } else {
        for r in reports.iter().filter(|r| r.min_s < -r.tol_s) {
            reasons.push(format!(
                "surface {}: min S = {:e} is below -tol_S = {:e} but within the interpolation margin {:e}",
                r.index, r.min_s, -r.tol_s, r.margin
            ));
        }
        Verdict::Inconclusive
    };

    let surfaces = reports
        .iter()
        .map(|r| {
            let s = &family.surfaces[r.index];
            SurfaceRecord {
                index: r.index,
                offset: s.offset,
                level: s.surface.level,
                vertex_count: s.surface.vertex_count(),
                diameter: s.surface.diameter,
                d_to_x0: s.d_to_x0,
                min_s: r.min_s,
                max_s: r.max_s,
                argmin: s.surface.vertices[r.argmin][..dim].to_vec(),
                violations: r.violations,
                tol_s: r.tol_s,
                margin: r.margin,
                min_grad_norm: s.min_grad_norm,
                residual: s.residual,
                mesh: None,
            }
        })
        .collect();

    StabilityCertificate {
        format: super::CERTIFICATE_FORMAT.to_string(),
        verdict,
        mode: "explicit".into(),
        dimension: dim,
        field: f.sources(),
        function: family.function.to_string(),
        equilibrium: family.x0.clone(),
        function_at_equilibrium: family.f_at_x0,
        assumptions: vec![
            "F is C^n near x0 (user-asserted, not verified)".into(),
            "f is C^1 near x0 (user-asserted; checked only for flagged non-smooth operations)".into(),
        ],
        tolerances: Tolerances {
            tol_s_rel: params.rel_tol,
            tol_s_abs: params.abs_tol,
            eta: family.eta,
            tol_h: None,
            quasi_tol: None,
        },
        grid: family.grid.clone(),
        a0: Some(family.a0),
        quasi_isolation: None,
        surfaces,
        rejected_levels: family.rejections.clone(),
        witness,
        reasons,
        empirical: None,
        gradient_verdict: None,
    }
}
