//! Stability certification from a nested family of level hypersurfaces.
//!
//! The pipeline is: check that `x0` is quasi-isolated for `F`, build a
//! family of closed level sets of `F` shrinking onto `x0`, evaluate the
//! sign condition `S(x) = <N(x), f(x)>` on every surface, and issue a
//! certificate.

mod certificate;
mod family;
mod quasi;
mod sign;
mod theorems;

pub use certificate::{
    to_canonical_json, StabilityCertificate, SurfaceRecord, Tolerances, Verdict, Witness,
    CERTIFICATE_FORMAT,
};
pub use family::{build_nested_family, FamilyParams, FamilySurface, LevelRejection, NestedFamily};
pub use quasi::{check_quasi_isolated, QuasiIsolationReport, QuasiParams, QuasiVerdict};
pub use sign::{
    certify_stability, interpolation_margin, sign_condition, tilde_sign_condition, SignParams,
    SignReport, TildeReport,
};
pub use theorems::{
    certify_hamiltonian, classify_gradient_system, GradientClassification, GradientVerdict,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, FieldError};
use crate::geometry::GeometryError;

/// All tunable parameters of the certification pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub quasi: QuasiParams,
    pub family: FamilyParams,
    pub sign: SignParams,
    /// Bound on `|S|` required by the Hamiltonian certifier.
    pub tol_h: f64,
}

impl Default for CertifyParams {
    fn default() -> Self {
        CertifyParams {
            quasi: QuasiParams::default(),
            family: FamilyParams::default(),
            sign: SignParams::default(),
            tol_h: 1e-9,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("equilibrium {0:?} is not strictly inside the grid box")]
    OutsideBox(Vec<f64>),
    #[error("the cell containing x0 is not in the band |F - F(x0)| < {eps0:e}; start the schedule higher")]
    SeedOutsideBand { eps0: f64 },
    #[error("grid too coarse: the band component at the first step is a single cell")]
    GridTooCoarse,
    #[error("x0 is {0} for F")]
    NotQuasiIsolated(QuasiVerdict),
    #[error("only {found} of {needed} surfaces accepted; {}", summarize(rejections))]
    InsufficientSurfaces {
        found: usize,
        needed: usize,
        rejections: Vec<LevelRejection>,
    },
    #[error("surface {surface}: S takes both signs ({positive} vertices above and {negative} below tolerance)")]
    MixedSign {
        surface: usize,
        positive: usize,
        negative: usize,
    },
    #[error("surface {surface}: grad F points inward at some vertices and outward at others")]
    MixedProbeSigns { surface: usize },
    #[error("surface {surface}: max |S| = {max_abs_s:e} exceeds the Hamiltonian tolerance {tol_h:e}")]
    HamiltonianResidual {
        surface: usize,
        max_abs_s: f64,
        tol_h: f64,
    },
}

fn summarize(rejections: &[LevelRejection]) -> String {
    if rejections.is_empty() {
        return "no levels tried".into();
    }
    rejections
        .iter()
        .map(|r| format!("level {:e}: {}", r.level, r.reason))
        .collect::<Vec<_>>()
        .join("; ")
}
