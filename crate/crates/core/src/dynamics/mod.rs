//! Trajectory integration used as an empirical cross-check on certificates.

mod falsify;
mod integrate;

pub use falsify::{
    containment_test, epsilon_delta_probe, escape_time, sample_inside, EpsDeltaRow, EscapeWitness,
    FalsificationReport, FalsifyConfig, ProbeConfig, GRAZING_CONVENTION,
};
pub use integrate::{integrate, integrate_until, IntegratorConfig, Termination, Trajectory};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("start has {got} coordinates, field has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field is not finite at {at:?}")]
    NonFinite { at: Vec<f64> },
    #[error("step size underflow ({step:e}) at t = {t}")]
    StepUnderflow { t: f64, step: f64 },
    #[error("step limit {limit} reached at t = {t}")]
    TooManySteps { t: f64, limit: usize },
    #[error("|f(x0)| = {residual:e} exceeds the equilibrium tolerance {tol:e}")]
    NotEquilibrium { residual: f64, tol: f64 },
    #[error("sampler failure: {0}")]
    Sampler(String),
    #[error("family has no surfaces")]
    EmptyFamily,
}
