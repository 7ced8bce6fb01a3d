use std::fmt;

use serde::{Deserialize, Serialize};

use super::certificate::{StabilityCertificate, Verdict};
use super::family::{build_nested_family, NestedFamily};
use super::quasi::{check_quasi_isolated, QuasiVerdict};
use super::sign::{certify_stability, interpolation_margin, sign_condition};
use super::{CertifyError, CertifyParams};
use crate::expr::{make_gradient_system, make_hamiltonian_system, ScalarExpr};
use crate::geometry::SampleGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientVerdict {
    /// `dx/dt = -grad F` is stable.
    StableForF,
    /// `dx/dt = +grad F` is stable.
    StableForMinusF,
}

impl fmt::Display for GradientVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientVerdict::StableForF => "stable-for-F",
            GradientVerdict::StableForMinusF => "stable-for-minus-F",
        })
    }
}

#[derive(Clone, Debug)]
pub struct GradientClassification {
    pub verdict: GradientVerdict,
    /// Surfaces on which `S > 0` for `f = -grad F`.
    pub positive: Vec<usize>,
    /// Surfaces on which `S < 0` for `f = -grad F`.
    pub negative: Vec<usize>,
    pub certificate: StabilityCertificate,
    /// The surfaces the certificate covers.
    pub family: NestedFamily,
}

fn quasi_gate(
    f: &ScalarExpr,
    x0: &[f64],
    grid: &SampleGrid,
    params: &CertifyParams,
) -> Result<super::QuasiIsolationReport, CertifyError> {
    let q = check_quasi_isolated(f, x0, grid, &params.quasi)?;
    if q.verdict == QuasiVerdict::NotQuasiIsolated {
        return Err(CertifyError::NotQuasiIsolated(q.verdict));
    }
    Ok(q)
}

/// Decides which of `dx/dt = -grad F` and `dx/dt = +grad F` the family of
/// level sets of `F` certifies, by the sign of `S` for `f = -grad F` on
/// each surface.
pub fn classify_gradient_system(
    f: &ScalarExpr,
    x0: &[f64],
    grid: &SampleGrid,
    params: &CertifyParams,
) -> Result<GradientClassification, CertifyError> {
    let quasi = quasi_gate(f, x0, grid, params)?;
    let family = build_nested_family(f, x0, grid, &params.family)?;
    let descent = make_gradient_system(f, false)?;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for (i, s) in family.surfaces.iter().enumerate() {
        let margin = interpolation_margin(f, &descent, &s.surface)?;
        let r = sign_condition(&descent, &s.surface, margin, &params.sign)?;
        match (r.positives, r.violations) {
            (p, n) if p > 0 && n > 0 => {
                return Err(CertifyError::MixedSign {
                    surface: i,
                    positive: p,
                    negative: n,
                })
            }
            (p, _) if p > 0 => positive.push(i),
            (_, n) if n > 0 => negative.push(i),
            _ => {}
        }
    }
    let (verdict, chosen, field) = if positive.len() >= negative.len() {
        (GradientVerdict::StableForF, positive.clone(), descent)
    } else {
        (GradientVerdict::StableForMinusF, negative.clone(), make_gradient_system(f, true)?)
    };
    let sub = family.subfamily(&chosen);
    let mut certificate = certify_stability(&field, &sub, &params.sign);
    certificate.mode = "gradient".into();
    certificate.quasi_isolation = Some(quasi);
    certificate.tolerances.quasi_tol = params.quasi.quasi_tol;
    certificate.gradient_verdict = Some(verdict);
    Ok(GradientClassification {
        verdict,
        positive,
        negative,
        certificate,
        family: sub,
    })
}

/// Certifies the Hamiltonian system of `F` with `dof` degrees of freedom,
/// additionally requiring `|S| <= tol_h` at every vertex.
pub fn certify_hamiltonian(
    f: &ScalarExpr,
    dof: usize,
    x0: &[f64],
    grid: &SampleGrid,
    params: &CertifyParams,
) -> Result<(StabilityCertificate, NestedFamily), CertifyError> {
    let field = make_hamiltonian_system(f, dof)?;
    let quasi = quasi_gate(f, x0, grid, params)?;
    let family = build_nested_family(f, x0, grid, &params.family)?;
    let mut certificate = certify_stability(&field, &family, &params.sign);
    certificate.mode = "hamiltonian".into();
    certificate.quasi_isolation = Some(quasi);
    certificate.tolerances.tol_h = Some(params.tol_h);
    certificate.tolerances.quasi_tol = params.quasi.quasi_tol;
    for rec in &certificate.surfaces {
        let max_abs_s = rec.min_s.abs().max(rec.max_s.abs());
        if max_abs_s > params.tol_h {
            return Err(CertifyError::HamiltonianResidual {
                surface: rec.index,
                max_abs_s,
                tol_h: params.tol_h,
            });
        }
    }
    debug_assert!(certificate.verdict != Verdict::Violated);
    Ok((certificate, family))
}
