use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::family::LevelRejection;
use super::quasi::QuasiIsolationReport;
use super::theorems::GradientVerdict;
use crate::dynamics::FalsificationReport;
use crate::geometry::GridSpec;

pub const CERTIFICATE_FORMAT: &str = "lyapcert-certificate/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedStable,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Process exit code for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::CertifiedStable => 0,
            Verdict::Violated => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedStable => "certified-stable",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_s_rel: f64,
    pub tol_s_abs: Option<f64>,
    pub eta: f64,
    pub tol_h: Option<f64>,
    pub quasi_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub index: usize,
    /// `a_i`, measured from `F(x0)`.
    pub offset: f64,
    /// Level of `F` actually contoured.
    pub level: f64,
    pub vertex_count: usize,
    pub diameter: f64,
    pub d_to_x0: f64,
    pub min_s: f64,
    pub max_s: f64,
    pub argmin: Vec<f64>,
    pub violations: usize,
    pub tol_s: f64,
    pub margin: f64,
    pub min_grad_norm: f64,
    pub residual: f64,
    /// Mesh sidecar file name, relative to the certificate.
    pub mesh: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub surface: usize,
    pub vertex: usize,
    pub point: Vec<f64>,
    pub s: f64,
    /// The violation threshold `-tol_S - margin` that `s` falls below.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub format: String,
    pub verdict: Verdict,
    pub mode: String,
    pub dimension: usize,
    pub field: Vec<String>,
    pub function: String,
    pub equilibrium: Vec<f64>,
    pub function_at_equilibrium: f64,
    pub assumptions: Vec<String>,
    pub tolerances: Tolerances,
    pub grid: GridSpec,
    pub a0: Option<f64>,
    pub quasi_isolation: Option<QuasiIsolationReport>,
    pub surfaces: Vec<SurfaceRecord>,
    pub rejected_levels: Vec<LevelRejection>,
    pub witness: Option<Witness>,
    pub reasons: Vec<String>,
    pub empirical: Option<FalsificationReport>,
    /// Which gradient flow the family certifies, in gradient mode.
    pub gradient_verdict: Option<GradientVerdict>,
}

impl StabilityCertificate {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits, enough to round-trip).
struct CanonicalFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` with fixed float formatting and struct field order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        CanonicalFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}
