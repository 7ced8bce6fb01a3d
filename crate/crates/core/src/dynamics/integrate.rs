//! Dormand–Prince 5(4) with cubic Hermite resampling between steps.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::expr::VectorFieldDef;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Insert interpolated samples so consecutive states are at most this
    /// far apart.
    pub sample_spacing: Option<f64>,
    /// State norm at which the run stops with [`Termination::BlowUp`].
    pub blowup: f64,
    /// Box outside of which the run stops with [`Termination::LeftBox`].
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    /// Take steps of exactly this size with no error control.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            sample_spacing: None,
            blowup: 1e6,
            bounds: None,
            fixed_step: None,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    LeftBox,
    BlowUp,
    /// The caller's stop predicate fired.
    Event,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Accepted step sizes.
    pub steps: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("a trajectory holds at least its start")
    }

    /// `t,x1,...,xn` rows with a header line.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.16e}"));
            for x in s {
                out.push_str(&format!(",{x:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    f: &'a VectorFieldDef,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl Stepper<'_> {
    fn eval(&mut self, y: &[f64], stage: usize) -> Result<(), DynamicsError> {
        self.f.eval_into(y, &mut self.k[stage]);
        if self.k[stage].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(DynamicsError::NonFinite { at: y.to_vec() })
        }
    }

    /// One step from `y` with `k[0] = f(y)`. Leaves `f(y_new)` in `k[6]`.
    fn step(&mut self, y: &[f64], h: f64, y_new: &mut [f64], err: &mut [f64]) -> Result<(), DynamicsError> {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let tmp = std::mem::take(&mut self.tmp);
            let r = self.eval(&tmp, s);
            self.tmp = tmp;
            r?;
        }
        // stage 6 was evaluated at the fifth-order solution
        y_new.copy_from_slice(&self.tmp);
        for i in 0..n {
            err[i] = h * (0..7).map(|j| E[j] * self.k[j][i]).sum::<f64>();
        }
        Ok(())
    }
}

fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], h: f64, s: f64) -> Vec<f64> {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn integrate(
    f: &VectorFieldDef,
    start: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    integrate_until(f, start, horizon, cfg, |_, _| false)
}

/// Integrates `dx/dt = f(x)` from `start` over `[0, horizon]`, stopping
/// early at the first sample where `stop(t, x)` holds.
pub fn integrate_until(
    f: &VectorFieldDef,
    start: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
    stop: impl Fn(f64, &[f64]) -> bool,
) -> Result<Trajectory, DynamicsError> {
    let n = f.dim();
    if start.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            got: start.len(),
        });
    }
    if start.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite { at: start.to_vec() });
    }
    let mut st = Stepper {
        f,
        k: vec![vec![0.0; n]; 7],
        tmp: vec![0.0; n],
    };
    st.eval(start, 0)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![start.to_vec()],
        steps: Vec::new(),
        termination: Termination::Horizon,
    };
    let outside = |y: &[f64]| -> Option<Termination> {
        if norm(y) > cfg.blowup {
            return Some(Termination::BlowUp);
        }
        if let Some((lo, hi)) = &cfg.bounds {
            if y.iter().enumerate().any(|(i, &x)| x < lo[i] || x > hi[i]) {
                return Some(Termination::LeftBox);
            }
        }
        None
    };
    if let Some(t) = outside(start) {
        traj.termination = t;
        return Ok(traj);
    }
    if stop(0.0, start) {
        traj.termination = Termination::Event;
        return Ok(traj);
    }
    if horizon <= 0.0 {
        return Ok(traj);
    }
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY).min(horizon);
    let mut h = match cfg.fixed_step {
        Some(h) => h,
        None => {
            let sc: Vec<f64> = start.iter().map(|x| cfg.abs_tol + cfg.rel_tol * x.abs()).collect();
            let d0 = norm(&start.iter().zip(&sc).map(|(x, s)| x / s).collect::<Vec<_>>());
            let d1 = norm(&st.k[0].iter().zip(&sc).map(|(x, s)| x / s).collect::<Vec<_>>());
            if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }
        }
    }
    .min(max_step);

    let mut t = 0.0;
    let mut y = start.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut rejected = false;
    for _ in 0..cfg.max_steps {
        if t >= horizon {
            return Ok(traj);
        }
        let last = t + h >= horizon;
        let step = if last { horizon - t } else { h };
        if step <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(DynamicsError::StepUnderflow { t, step });
        }
        st.step(&y, step, &mut y_new, &mut err)?;
        if cfg.fixed_step.is_none() {
            let e = (err
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                    (e / sc).powi(2)
                })
                .sum::<f64>()
                / n as f64)
                .sqrt();
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if e > 1.0 {
                h = step * factor.min(1.0);
                rejected = true;
                continue;
            }
            h = (step * if rejected { factor.min(1.0) } else { factor }).min(max_step);
            rejected = false;
        }
        let t_new = if last { horizon } else { t + step };
        traj.steps.push(step);

        // resample so consecutive states stay within the spacing
        let pieces = match cfg.sample_spacing {
            Some(s) if s > 0.0 => {
                let d = norm(&y_new.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
                ((2.0 * d / s).ceil() as usize).max(1)
            }
            _ => 1,
        };
        for p in 1..=pieces {
            let (tp, yp) = if p == pieces {
                (t_new, y_new.clone())
            } else {
                let s = p as f64 / pieces as f64;
                (t + s * step, hermite(&y, &st.k[0], &y_new, &st.k[6], step, s))
            };
            traj.times.push(tp);
            let term = outside(&yp);
            let fire = term.is_none() && stop(tp, &yp);
            traj.states.push(yp);
            if let Some(term) = term {
                traj.termination = term;
                return Ok(traj);
            }
            if fire {
                traj.termination = Termination::Event;
                return Ok(traj);
            }
        }
        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        let (first, rest) = st.k.split_at_mut(1);
        first[0].copy_from_slice(&rest[5]);
    }
    Err(DynamicsError::TooManySteps { t, limit: cfg.max_steps })
}
