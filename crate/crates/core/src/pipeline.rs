//! End-to-end runs over a validated [`System`].

use thiserror::Error;

use crate::certify::{
    build_nested_family, certify_stability, check_quasi_isolated, classify_gradient_system,
    CertifyError, NestedFamily, QuasiVerdict, StabilityCertificate, Tolerances, Verdict,
    CERTIFICATE_FORMAT,
};
use crate::config::{ConfigError, Mode, System};
use crate::dynamics::{containment_test, DynamicsError, Trajectory};
use crate::expr::{make_hamiltonian_system, FieldError, VectorFieldDef};
use crate::geometry::{build_grid, GeometryError, SampleGrid};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Run the falsifier even when the configuration leaves it off.
    pub falsify: bool,
    /// Keep falsifier trajectories in the outcome.
    pub keep_trajectories: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub certificate: StabilityCertificate,
    /// Surfaces listed in the certificate, in the same order.
    pub family: Option<NestedFamily>,
    pub field: VectorFieldDef,
    pub trajectories: Vec<Trajectory>,
}

/// The vector field the system is checked against.
pub fn system_field(sys: &System) -> Result<VectorFieldDef, PipelineError> {
    Ok(match sys.mode {
        Mode::Explicit => sys.field.clone().expect("validated explicit config has a field"),
        Mode::Gradient => crate::expr::make_gradient_system(&sys.function, false)?,
        Mode::Hamiltonian => make_hamiltonian_system(&sys.function, sys.dof)?,
    })
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Explicit => "explicit",
        Mode::Gradient => "gradient",
        Mode::Hamiltonian => "hamiltonian",
    }
}

/// Certificate for a run that stopped before the sign condition was evaluated.
fn inconclusive(sys: &System, field: &VectorFieldDef, reason: String) -> StabilityCertificate {
    let t = &sys.params;
    StabilityCertificate {
        format: CERTIFICATE_FORMAT.into(),
        verdict: Verdict::Inconclusive,
        mode: mode_name(sys.mode).into(),
        dimension: sys.dim,
        field: field.sources(),
        function: sys.function.to_string(),
        equilibrium: sys.x0.clone(),
        function_at_equilibrium: sys.function.eval_raw(&sys.x0),
        assumptions: Vec::new(),
        tolerances: Tolerances {
            tol_s_rel: t.sign.rel_tol,
            tol_s_abs: t.sign.abs_tol,
            eta: t.family.eta,
            tol_h: (sys.mode == Mode::Hamiltonian).then_some(t.tol_h),
            quasi_tol: t.quasi.quasi_tol,
        },
        grid: sys.grid.clone(),
        a0: t.family.a0,
        quasi_isolation: None,
        surfaces: Vec::new(),
        rejected_levels: Vec::new(),
        witness: None,
        reasons: vec![reason],
        empirical: None,
        gradient_verdict: None,
    }
}

/// Samples `F` on the configured grid.
pub fn sample(sys: &System) -> Result<SampleGrid, PipelineError> {
    Ok(build_grid(&sys.function, &sys.grid)?)
}

/// Builds the nested family only.
pub fn extract_levels(sys: &System) -> Result<NestedFamily, PipelineError> {
    let grid = sample(sys)?;
    Ok(build_nested_family(&sys.function, &sys.x0, &grid, &sys.params.family)?)
}

/// Runs quasi-isolation, family construction, the sign condition and,
/// when enabled, the falsifier. Failures of the method itself (no
/// quasi-isolation, too few surfaces, mixed signs) yield an inconclusive
/// certificate; malformed input yields an error.
pub fn run_certify(sys: &System, opts: &RunOptions) -> Result<RunOutcome, PipelineError> {
    let field = system_field(sys)?;
    let grid = sample(sys)?;
    let (mut certificate, family) = match certify_on_grid(sys, &field, &grid) {
        Ok(pair) => pair,
        Err(reason) => (inconclusive(sys, &field, reason), None),
    };
    // gradient mode may have settled on +grad F
    let field = match (&certificate.gradient_verdict, sys.mode) {
        (Some(crate::certify::GradientVerdict::StableForMinusF), _) => field.negated(),
        _ => field,
    };
    certificate.field = field.sources();

    let mut trajectories = Vec::new();
    if (opts.falsify || sys.config.falsify.enabled) && family.is_some() {
        let fam = family.as_ref().expect("checked above");
        let mut cfg = sys.falsify.clone();
        cfg.keep_trajectories = opts.keep_trajectories;
        match containment_test(&field, fam, &cfg) {
            Ok((report, trs)) => {
                if report.escapes > 0 && certificate.verdict == Verdict::CertifiedStable {
                    certificate.verdict = Verdict::Inconclusive;
                    certificate.reasons.push(format!(
                        "falsifier: {} of {} trajectories left the outermost surface",
                        report.escapes, report.trials
                    ));
                }
                certificate.empirical = Some(report);
                trajectories = trs;
            }
            Err(e) => certificate.reasons.push(format!("falsifier not run: {e}")),
        }
    }
    Ok(RunOutcome {
        certificate,
        family,
        field,
        trajectories,
    })
}

fn certify_on_grid(
    sys: &System,
    field: &VectorFieldDef,
    grid: &SampleGrid,
) -> Result<(StabilityCertificate, Option<NestedFamily>), String> {
    let p = &sys.params;
    if sys.mode == Mode::Gradient {
        let c = classify_gradient_system(&sys.function, &sys.x0, grid, p).map_err(reason)?;
        return Ok((c.certificate, Some(c.family)));
    }
    let quasi = check_quasi_isolated(&sys.function, &sys.x0, grid, &p.quasi).map_err(reason)?;
    if quasi.verdict == QuasiVerdict::NotQuasiIsolated {
        return Err(format!("{}", QuasiVerdict::NotQuasiIsolated));
    }
    let family = build_nested_family(&sys.function, &sys.x0, grid, &p.family).map_err(reason)?;
    let mut cert = certify_stability(field, &family, &p.sign);
    cert.mode = mode_name(sys.mode).into();
    cert.tolerances.quasi_tol = p.quasi.quasi_tol;
    if quasi.verdict == QuasiVerdict::Inconclusive {
        cert.assumptions
            .push("quasi-isolation of x0 was inconclusive on this grid".into());
    }
    cert.quasi_isolation = Some(quasi);
    if sys.mode == Mode::Hamiltonian {
        cert.tolerances.tol_h = Some(p.tol_h);
        if cert.verdict == Verdict::CertifiedStable {
            if let Some(rec) = cert
                .surfaces
                .iter()
                .find(|r| r.min_s.abs().max(r.max_s.abs()) > p.tol_h)
            {
                let e = CertifyError::HamiltonianResidual {
                    surface: rec.index,
                    max_abs_s: rec.min_s.abs().max(rec.max_s.abs()),
                    tol_h: p.tol_h,
                };
                cert.verdict = Verdict::Inconclusive;
                cert.reasons.push(e.to_string());
            }
        }
    }
    Ok((cert, Some(family)))
}

fn reason(e: CertifyError) -> String {
    match e {
        CertifyError::NotQuasiIsolated(v) => v.to_string(),
        other => other.to_string(),
    }
}
