//! TOML description of one certification run.
//!
//! ```toml
//! mode = "explicit"            # or "gradient", "hamiltonian"
//! field = ["y", "-x-y"]        # explicit mode only
//! function = "x^2+y^2"
//! equilibrium = [0.0, 0.0]
//! seed = 42
//!
//! [grid]
//! lo = [-2.0, -2.0]
//! hi = [2.0, 2.0]
//! resolution = 256             # or one value per axis
//!
//! [family]
//! count = 6
//! eta = 1e-5
//! a0 = 1.0
//!
//! [tolerances]
//! tol_s_rel = 1e-6
//! tol_h = 1e-9
//!
//! [falsify]
//! trials = 200
//! horizon = 100.0
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{CertifyParams, FamilyParams, QuasiParams, SignParams};
use crate::dynamics::{FalsifyConfig, IntegratorConfig};
use crate::expr::{parse_expression, ParseError, ScalarExpr, Variables, VectorFieldDef};
use crate::geometry::GridSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Toml(String),
    #[error("`{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("`{field}`: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Explicit,
    Gradient,
    Hamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableNames {
    Cartesian,
    Canonical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Resolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySection {
    pub count: usize,
    pub eta: f64,
    pub a0: Option<f64>,
    pub max_levels: usize,
}

impl Default for FamilySection {
    fn default() -> Self {
        let d = FamilyParams::default();
        FamilySection {
            count: d.count,
            eta: d.eta,
            a0: d.a0,
            max_levels: d.max_levels,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    /// `tol_S` relative to `max |f|` on each surface.
    pub tol_s_rel: f64,
    /// Absolute `tol_S`, replacing the relative one.
    pub tol_s: Option<f64>,
    pub tol_h: f64,
    pub quasi_tol: Option<f64>,
    pub eps0: Option<f64>,
    pub quasi_steps: usize,
    pub stall_tol: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let q = QuasiParams::default();
        ToleranceSection {
            tol_s_rel: SignParams::default().rel_tol,
            tol_s: None,
            tol_h: CertifyParams::default().tol_h,
            quasi_tol: q.quasi_tol,
            eps0: q.eps0,
            quasi_steps: q.steps,
            stall_tol: q.stall_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FalsifySection {
    pub enabled: bool,
    pub trials: usize,
    pub horizon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for FalsifySection {
    fn default() -> Self {
        let f = FalsifyConfig::default();
        FalsifySection {
            enabled: false,
            trials: f.trials,
            horizon: f.horizon,
            rel_tol: f.integrator.rel_tol,
            abs_tol: f.integrator.abs_tol,
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// The raw TOML document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: Option<usize>,
    #[serde(default)]
    pub mode: Mode,
    pub field: Option<Vec<String>>,
    pub function: String,
    pub equilibrium: Vec<f64>,
    /// Degrees of freedom in Hamiltonian mode; defaults to half the dimension.
    pub dof: Option<usize>,
    /// `"cartesian"` (x, y, z) or `"canonical"` (y, z); Hamiltonian mode
    /// defaults to canonical.
    pub variables: Option<VariableNames>,
    pub grid: GridSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub falsify: FalsifySection,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// A validated configuration with parsed expressions.
#[derive(Clone, Debug)]
pub struct System {
    pub config: SystemConfig,
    pub mode: Mode,
    pub dim: usize,
    pub vars: Variables,
    pub function: ScalarExpr,
    pub field: Option<VectorFieldDef>,
    pub dof: usize,
    pub x0: Vec<f64>,
    pub grid: GridSpec,
    pub params: CertifyParams,
    pub falsify: FalsifyConfig,
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    /// Checks consistency and parses every expression.
    pub fn validate(&self) -> Result<System, ConfigError> {
        let dim = self.dimension.unwrap_or(self.equilibrium.len());
        if !(2..=3).contains(&dim) {
            return Err(invalid("dimension", format!("{dim} is not supported (only 2 and 3)")));
        }
        if self.equilibrium.len() != dim {
            return Err(invalid(
                "equilibrium",
                format!("has {} coordinates, dimension is {dim}", self.equilibrium.len()),
            ));
        }
        let names = self.variables.unwrap_or(match self.mode {
            Mode::Hamiltonian => VariableNames::Canonical,
            _ => VariableNames::Cartesian,
        });
        let vars = match names {
            VariableNames::Cartesian => Variables::cartesian(dim),
            VariableNames::Canonical => {
                if !dim.is_multiple_of(2) {
                    return Err(invalid("variables", "canonical names need an even dimension"));
                }
                Variables::canonical(dim / 2)
            }
        };
        let function = parse_expression(&self.function, vars).map_err(|source| ConfigError::Expression {
            field: "function".into(),
            source,
        })?;
        let field = match (self.mode, &self.field) {
            (Mode::Explicit, None) => return Err(invalid("field", "required in explicit mode")),
            (Mode::Explicit, Some(srcs)) => {
                if srcs.len() != dim {
                    return Err(invalid("field", format!("has {} components, dimension is {dim}", srcs.len())));
                }
                let comps = srcs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        parse_expression(s, vars).map_err(|source| ConfigError::Expression {
                            field: format!("field[{i}]"),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(VectorFieldDef::new(comps).map_err(|e| invalid("field", e.to_string()))?)
            }
            (_, Some(_)) => {
                return Err(invalid("field", "not allowed in gradient or hamiltonian mode; f is derived from F"))
            }
            (_, None) => None,
        };
        if self.mode == Mode::Hamiltonian && !dim.is_multiple_of(2) {
            return Err(invalid("mode", format!("hamiltonian mode needs an even dimension, got {dim}")));
        }
        let dof = self.dof.unwrap_or(dim / 2);
        if self.mode == Mode::Hamiltonian && 2 * dof != dim {
            return Err(invalid("dof", format!("{dof} degrees of freedom do not match dimension {dim}")));
        }

        let g = &self.grid;
        let resolution = match &g.resolution {
            Resolution::Uniform(r) => vec![*r; dim],
            Resolution::PerAxis(r) => r.clone(),
        };
        let grid = GridSpec {
            lo: g.lo.clone(),
            hi: g.hi.clone(),
            resolution,
        };
        if grid.lo.len() != dim || grid.hi.len() != dim || grid.resolution.len() != dim {
            return Err(invalid("grid", format!("lo, hi and resolution need {dim} entries")));
        }
        grid.validate().map_err(|e| invalid("grid", e.to_string()))?;
        if !grid.strictly_contains(&self.equilibrium) {
            return Err(invalid("equilibrium", "must lie strictly inside the grid box"));
        }

        let fam = &self.family;
        if fam.count == 0 {
            return Err(invalid("family.count", "must be at least 1"));
        }
        if !(fam.eta >= 0.0) {
            return Err(invalid("family.eta", "must be non-negative"));
        }
        if let Some(a0) = fam.a0 {
            if !(a0 > 0.0 && a0.is_finite()) {
                return Err(invalid("family.a0", "must be positive"));
            }
        }
        let t = &self.tolerances;
        if !(t.tol_s_rel >= 0.0) || t.tol_s.is_some_and(|v| !(v >= 0.0)) {
            return Err(invalid("tolerances.tol_s", "must be non-negative"));
        }
        if !(t.tol_h >= 0.0) {
            return Err(invalid("tolerances.tol_h", "must be non-negative"));
        }
        let params = CertifyParams {
            quasi: QuasiParams {
                eps0: t.eps0,
                steps: t.quasi_steps,
                quasi_tol: t.quasi_tol,
                stall_tol: t.stall_tol,
            },
            family: FamilyParams {
                count: fam.count,
                eta: fam.eta,
                a0: fam.a0,
                max_levels: fam.max_levels,
            },
            sign: SignParams {
                rel_tol: t.tol_s_rel,
                abs_tol: t.tol_s,
            },
            tol_h: t.tol_h,
        };
        let fs = &self.falsify;
        if fs.trials == 0 || !(fs.horizon > 0.0) {
            return Err(invalid("falsify", "trials and horizon must be positive"));
        }
        let falsify = FalsifyConfig {
            trials: fs.trials,
            horizon: fs.horizon,
            seed: self.seed,
            integrator: IntegratorConfig {
                rel_tol: fs.rel_tol,
                abs_tol: fs.abs_tol,
                ..IntegratorConfig::default()
            },
            keep_trajectories: false,
        };
        Ok(System {
            config: self.clone(),
            mode: self.mode,
            dim,
            vars,
            function,
            field,
            dof,
            x0: self.equilibrium.clone(),
            grid,
            params,
            falsify,
        })
    }
}
