use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate_until, IntegratorConfig, Termination, Trajectory};
use super::DynamicsError;
use crate::certify::NestedFamily;
use crate::expr::VectorFieldDef;
use crate::geometry::{to_point, Hypersurface};

pub const GRAZING_CONVENTION: &str =
    "states within one grid cell outside the outermost surface count as contained";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsifyConfig {
    pub trials: usize,
    pub horizon: f64,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    /// Return every trajectory alongside the report.
    pub keep_trajectories: bool,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        FalsifyConfig {
            trials: 200,
            horizon: 100.0,
            seed: 42,
            integrator: IntegratorConfig::default(),
            keep_trajectories: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeWitness {
    pub start: Vec<f64>,
    /// Time of the first sample outside the outermost surface.
    pub time: f64,
    /// Index of the surface left (the outermost one).
    pub surface: usize,
    pub point: Vec<f64>,
}

/// Outcome of integrating trajectories started inside the innermost surface.
/// Evidence only: it can corroborate or contradict a certificate but never
/// proves stability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub trials: usize,
    pub escapes: usize,
    pub horizon: f64,
    pub seed: u64,
    pub witness: Option<EscapeWitness>,
    /// Largest `|x(t) - x0|` over all runs divided by `d(x0, outermost)`.
    pub max_excursion_ratio: f64,
    pub grazing_convention: String,
}

fn escaped(outer: &Hypersurface, p: &[f64]) -> bool {
    let q = to_point(p);
    !outer.contains_raw(&q).unwrap_or(true) && outer.distance_within(&q, outer.cell).is_none()
}

/// Uniform samples from the internal component of `h`, by rejection from its
/// bounding box.
pub fn sample_inside(h: &Hypersurface, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let (lo, hi) = h.bbox;
    let dim = h.dim;
    if (0..dim).any(|d| hi[d] - lo[d] < h.cell) {
        return Err(DynamicsError::Sampler(format!(
            "surface extent is below one cell ({:e})",
            h.cell
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let budget = 1000 * count.max(1);
    for _ in 0..budget {
        if out.len() == count {
            break;
        }
        let mut p = [0.0; 3];
        for d in 0..dim {
            p[d] = rng.random_range(lo[d]..hi[d]);
        }
        if h.contains_raw(&p).unwrap_or(false) {
            out.push(p[..dim].to_vec());
        }
    }
    if out.len() < count {
        return Err(DynamicsError::Sampler(format!(
            "only {} of {count} points landed inside",
            out.len()
        )));
    }
    Ok(out)
}

/// Integrates from `start` until the state leaves `outer` by more than a
/// cell. Returns the trajectory and, on escape, the time of the first
/// sample outside.
pub fn escape_time(
    f: &VectorFieldDef,
    outer: &Hypersurface,
    start: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, Option<f64>), DynamicsError> {
    let tr = integrate_until(f, start, horizon, cfg, |_, x| escaped(outer, x))?;
    let left = match tr.termination {
        Termination::Event | Termination::BlowUp | Termination::LeftBox => {
            let mut i = tr.states.len() - 1;
            while i > 0 && !outer.contains_raw(&to_point(&tr.states[i - 1])).unwrap_or(true) {
                i -= 1;
            }
            Some(tr.times[i])
        }
        Termination::Horizon => None,
    };
    Ok((tr, left))
}

/// Samples `trials` starts inside the innermost surface and reports how many
/// trajectories leave the outermost one before the horizon.
pub fn containment_test(
    f: &VectorFieldDef,
    family: &NestedFamily,
    cfg: &FalsifyConfig,
) -> Result<(FalsificationReport, Vec<Trajectory>), DynamicsError> {
    let (Some(inner), Some(outer)) = (family.innermost(), family.outermost()) else {
        return Err(DynamicsError::EmptyFamily);
    };
    let starts = sample_inside(inner, cfg.trials, cfg.seed)?;
    let mut icfg = cfg.integrator.clone();
    if icfg.sample_spacing.is_none() {
        icfg.sample_spacing = Some(outer.cell);
    }
    let x0 = &family.x0;
    let reach = family.surfaces[0].d_to_x0;
    let runs: Vec<(Trajectory, Option<f64>)> = starts
        .par_iter()
        .map(|s| escape_time(f, outer, s, cfg.horizon, &icfg))
        .collect::<Result<_, _>>()?;

    let mut escapes = 0;
    let mut witness: Option<EscapeWitness> = None;
    let mut excursion = 0.0f64;
    for (start, (tr, left)) in starts.iter().zip(&runs) {
        for s in &tr.states {
            let r = s.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            excursion = excursion.max(r / reach);
        }
        if let Some(t) = *left {
            escapes += 1;
            if witness.as_ref().is_none_or(|w| t < w.time) {
                witness = Some(EscapeWitness {
                    start: start.clone(),
                    time: t,
                    surface: 0,
                    point: tr.last().to_vec(),
                });
            }
        }
    }
    let report = FalsificationReport {
        trials: cfg.trials,
        escapes,
        horizon: cfg.horizon,
        seed: cfg.seed,
        witness,
        max_excursion_ratio: excursion,
        grazing_convention: GRAZING_CONVENTION.into(),
    };
    let kept = if cfg.keep_trajectories {
        runs.into_iter().map(|(t, _)| t).collect()
    } else {
        Vec::new()
    };
    Ok((report, kept))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Starts per tested radius, evenly spread on the sphere of radius delta.
    pub trials: usize,
    pub horizon: f64,
    pub bisection_steps: usize,
    /// Largest `|f(x0)|` accepted as an equilibrium.
    pub equil_tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            trials: 16,
            horizon: 100.0,
            bisection_steps: 24,
            equil_tol: 1e-9,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsDeltaRow {
    pub eps: f64,
    /// Largest radius found whose starts all stayed within `eps`.
    pub delta: f64,
    /// `delta < 1e-3 eps`.
    pub effectively_zero: bool,
}

fn directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(1);
    match dim {
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    v.into_iter().map(|x| x / l).collect()
                })
                .collect()
        }
    }
}

/// For each `eps`, bisects for the largest `delta` such that trajectories
/// started at distance `delta` from `x0` stay within `eps` up to the
/// horizon. Empirical evidence for the epsilon-delta definition only.
pub fn epsilon_delta_probe(
    f: &VectorFieldDef,
    x0: &[f64],
    eps_list: &[f64],
    cfg: &ProbeConfig,
) -> Result<Vec<EpsDeltaRow>, DynamicsError> {
    let f0 = f.evaluate(x0).map_err(|_| DynamicsError::NonFinite { at: x0.to_vec() })?;
    let residual = f0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if residual > cfg.equil_tol {
        return Err(DynamicsError::NotEquilibrium {
            residual,
            tol: cfg.equil_tol,
        });
    }
    let dirs = directions(x0.len(), cfg.trials);
    let dist = |x: &[f64]| x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut icfg = cfg.integrator.clone();
        if icfg.sample_spacing.is_none() {
            icfg.sample_spacing = Some(eps / 100.0);
        }
        let stays = |delta: f64| -> Result<bool, DynamicsError> {
            let results: Vec<bool> = dirs
                .par_iter()
                .map(|u| {
                    let start: Vec<f64> = x0.iter().zip(u).map(|(c, d)| c + delta * d).collect();
                    let tr = integrate_until(f, &start, cfg.horizon, &icfg, |_, x| dist(x) >= eps)?;
                    Ok(tr.termination == Termination::Horizon)
                })
                .collect::<Result<_, DynamicsError>>()?;
            Ok(results.into_iter().all(|b| b))
        };
        let (mut lo, mut hi) = (0.0, eps);
        for _ in 0..cfg.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if stays(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        rows.push(EpsDeltaRow {
            eps,
            delta: lo,
            effectively_zero: lo < 1e-3 * eps,
        });
    }
    Ok(rows)
}
