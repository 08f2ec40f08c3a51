//! Single-point analysis and ordered parameter sweeps.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::action::{action_jet_ek, action_jet_qkdv, ActionError, ActionJet3, ActionJet4, Numerics};
use crate::config::{Range, RunConfig, Wave};
use crate::models::{make_builtin, ModelError, ModelOptions, NonlinearModel};
use crate::modulation::{modulation_matrix_ekl, modulation_matrix_qkdv, ModulationResult};
use crate::profile::{ek_to_qkdv, find_well, ProfileError};
use crate::stability::{verdict_ek, verdict_qkdv, StabilityReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("well fractions need a well bounded by a saddle")]
    OpenWell,
    #[error("no feasible point in the sweep")]
    Empty,
    #[error("thread pool: {0}")]
    Pool(String),
}

pub fn build_model(cfg: &RunConfig) -> Result<NonlinearModel, ModelError> {
    make_builtin(&cfg.model.name, ModelOptions { gamma: cfg.model.gamma, sign: cfg.model.sign })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub value: f64,
    pub period: f64,
    pub theta: f64,
    pub report: StabilityReport,
    #[serde(skip)]
    pub jet3: ActionJet3,
    #[serde(skip)]
    pub jet4: Option<ActionJet4>,
    pub modulation: Option<ModulationResult>,
    /// Set when modulation was requested but the Hessian was singular.
    pub modulation_error: Option<String>,
}

impl PointResult {
    /// A nonreal modulation eigenvalue signals a sideband instability.
    pub fn sideband_advisory(&self) -> bool {
        self.modulation.as_ref().is_some_and(|m| !m.hyperbolic)
    }
}

pub fn analyze_point(
    model: &NonlinearModel,
    wave: &Wave,
    numerics: &Numerics,
    hint: Option<f64>,
    with_modulation: bool,
) -> Result<PointResult, SweepError> {
    let value = wave.get(wave.energy_var()).unwrap_or(f64::NAN);
    match wave {
        Wave::Qkdv(q) => {
            let jet = action_jet_qkdv(model, q, numerics, hint)?;
            let report = verdict_qkdv(&jet, numerics.sign_tol);
            let (modulation, modulation_error) = if with_modulation {
                match modulation_matrix_qkdv(&jet, q.c) {
                    Ok(m) => (Some(m), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            Ok(PointResult { value, period: jet.grad[0], theta: jet.value, report, jet3: jet, jet4: None, modulation, modulation_error })
        }
        Wave::Ek(p) => {
            let jet = action_jet_ek(model, p, numerics, hint)?;
            let report = verdict_ek(&jet, numerics.sign_tol);
            let (modulation, modulation_error) = if with_modulation {
                match modulation_matrix_ekl(&jet, p.j) {
                    Ok(m) => (Some(m), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            Ok(PointResult {
                value,
                period: jet.underlying.grad[0],
                theta: jet.value,
                report,
                jet3: jet.underlying.clone(),
                jet4: Some(jet),
                modulation,
                modulation_error,
            })
        }
    }
}

/// The qKdV (λ, c) that fix the potential for a wave, and the offset from the
/// qKdV energy μ to the swept energy variable.
fn potential_params(wave: &Wave) -> (f64, f64, f64) {
    match wave {
        Wave::Qkdv(q) => (q.lambda, q.c, 0.0),
        Wave::Ek(p) => {
            let q = ek_to_qkdv(&crate::profile::WaveParamsEK { lambda: 0.0, ..*p });
            (q.lambda, q.c, 0.5 * p.sigma * p.sigma)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPlan {
    pub variable: String,
    pub values: Vec<f64>,
    /// Well center used as a hint for every point.
    pub center: Option<f64>,
}

pub fn plan(cfg: &RunConfig, model: &NonlinearModel) -> Result<SweepPlan, SweepError> {
    let spec = cfg.sweep.as_ref().ok_or(SweepError::Empty)?;
    let n = spec.count;
    let lin = |a: f64, b: f64| -> Vec<f64> {
        if n == 1 {
            vec![a]
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let (lambda, c, offset) = potential_params(&cfg.wave);
    let well = if spec.variable == cfg.wave.energy_var() { find_well(model, lambda, c, cfg.center_hint).ok() } else { None };
    let values = match spec.range {
        Range::Absolute(a, b) => lin(a, b),
        Range::WellFraction(a, b) => {
            let w = well.as_ref().ok_or(SweepError::Profile(ProfileError::NoWell))?;
            let top = w.top();
            if !top.is_finite() {
                return Err(SweepError::OpenWell);
            }
            lin(a, b).into_iter().map(|s| w.w0 + s * (top - w.w0) + offset).collect()
        }
    };
    Ok(SweepPlan { variable: spec.variable.clone(), values, center: well.map(|w| w.v0).or(cfg.center_hint) })
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub index: usize,
    pub value: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub variable: String,
    pub rows: Vec<(usize, PointResult)>,
    pub skipped: Vec<Skipped>,
}

/// Runs `f` on a pool of `workers` threads, or on the global pool if None.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, String> {
    match workers {
        Some(0) => Err("worker count must be positive".into()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?.install(f)),
        None => Ok(f()),
    }
}

/// Evaluates every planned point on `workers` threads (all cores if None);
/// rows keep the sweep order. Infeasible points are listed in `skipped`.
pub fn run_sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<SweepOutput, SweepError> {
    let model = build_model(cfg)?;
    let plan = plan(cfg, &model)?;
    let eval = |(i, &x): (usize, &f64)| {
        let wave = cfg.wave.with(&plan.variable, x);
        let mut r = analyze_point(&model, &wave, &cfg.numerics, plan.center, cfg.output.modulation);
        if let Ok(p) = &mut r {
            p.value = x;
        }
        (i, x, r)
    };
    let results: Vec<_> =
        with_workers(workers, || plan.values.par_iter().enumerate().map(eval).collect()).map_err(SweepError::Pool)?;
    let mut out = SweepOutput { variable: plan.variable, rows: Vec::new(), skipped: Vec::new() };
    for (i, x, r) in results {
        match r {
            Ok(p) => out.rows.push((i, p)),
            Err(e) => out.skipped.push(Skipped { index: i, value: x, reason: e.to_string() }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Crossing {
    pub after_index: usize,
    /// Period at the crossing, linearly interpolated.
    pub period: f64,
    pub from: i64,
    pub to: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub variable: String,
    pub rows: usize,
    pub skipped: Vec<Skipped>,
    pub period_range: (f64, f64),
    pub n_hess_values: Vec<usize>,
    /// Sign patterns of the leading minors, e.g. "+--", with row counts.
    pub minor_sign_patterns: Vec<(String, usize)>,
    pub det_crossings: Vec<Crossing>,
    pub n_hess_changes: Vec<Crossing>,
    pub spectral_counts: Vec<(String, usize)>,
    pub orbital_counts: Vec<(String, String, usize)>,
    pub condition_counts: Vec<(String, usize)>,
    pub limit_zone_rows: usize,
    pub worst_identity_residual: f64,
    pub min_cauchy_schwarz_margin: f64,
    pub integer_identity_ok: Option<bool>,
    pub modulation_hyperbolic_rows: Option<usize>,
    pub sideband_advisory_rows: Option<usize>,
}

fn bump(v: &mut Vec<(String, usize)>, key: String) {
    match v.iter_mut().find(|(k, _)| *k == key) {
        Some((_, n)) => *n += 1,
        None => v.push((key, 1)),
    }
}

pub fn summarize(out: &SweepOutput) -> SweepSummary {
    let rows = &out.rows;
    let periods: Vec<f64> = rows.iter().map(|(_, p)| p.period).collect();
    let mut n_hess_values: Vec<usize> = rows.iter().map(|(_, p)| p.report.n_hess).collect();
    n_hess_values.sort_unstable();
    n_hess_values.dedup();
    let mut det_crossings = Vec::new();
    let mut n_hess_changes = Vec::new();
    for w in rows.windows(2) {
        let ((i, a), (_, b)) = (&w[0], &w[1]);
        let (da, db) = (a.report.det, b.report.det);
        if da.signum() != db.signum() {
            let t = da / (da - db);
            det_crossings.push(Crossing {
                after_index: *i,
                period: a.period + t * (b.period - a.period),
                from: da.signum() as i64,
                to: db.signum() as i64,
            });
        }
        if a.report.n_hess != b.report.n_hess {
            n_hess_changes.push(Crossing {
                after_index: *i,
                period: 0.5 * (a.period + b.period),
                from: a.report.n_hess as i64,
                to: b.report.n_hess as i64,
            });
        }
    }
    let mut minor_sign_patterns = Vec::new();
    for (_, p) in rows {
        bump(&mut minor_sign_patterns, p.report.minors.iter().map(|&m| if m > 0.0 { '+' } else if m < 0.0 { '-' } else { '0' }).collect());
    }
    let mut spectral_counts = Vec::new();
    let mut condition_counts = Vec::new();
    let mut orbital: Vec<(String, usize)> = Vec::new();
    for (_, p) in rows {
        let r = &p.report;
        bump(&mut spectral_counts, r.verdict_spectral.as_str().to_string());
        for (kind, v) in [("qkdv", r.verdict_orbital_qkdv), ("ekl", r.verdict_orbital_ekl), ("eke", r.verdict_orbital_eke)] {
            if let Some(v) = v {
                bump(&mut orbital, format!("{kind}\u{0}{}", v.as_str()));
            }
        }
        for c in &r.conditions {
            bump(&mut condition_counts, c.as_str().to_string());
        }
    }
    let orbital_counts = orbital
        .into_iter()
        .map(|(k, n)| {
            let (a, b) = k.split_once('\u{0}').unwrap();
            (a.to_string(), b.to_string(), n)
        })
        .collect();
    let integer: Vec<bool> = rows.iter().filter_map(|(_, p)| p.report.residuals.integer_identity).collect();
    let with_mod = rows.iter().any(|(_, p)| p.modulation.is_some());
    SweepSummary {
        variable: out.variable.clone(),
        rows: rows.len(),
        skipped: out.skipped.clone(),
        period_range: (periods.iter().cloned().fold(f64::INFINITY, f64::min), periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        n_hess_values,
        minor_sign_patterns,
        det_crossings,
        n_hess_changes,
        spectral_counts,
        orbital_counts,
        condition_counts,
        limit_zone_rows: rows.iter().filter(|(_, p)| p.report.limit_zone != crate::profile::LimitZone::None).count(),
        worst_identity_residual: rows.iter().map(|(_, p)| p.report.residuals.worst()).fold(0.0, f64::max),
        min_cauchy_schwarz_margin: rows.iter().map(|(_, p)| p.report.residuals.cauchy_schwarz_margin).fold(f64::INFINITY, f64::min),
        integer_identity_ok: if integer.is_empty() { None } else { Some(integer.iter().all(|&b| b)) },
        modulation_hyperbolic_rows: with_mod.then(|| rows.iter().filter(|(_, p)| p.modulation.as_ref().is_some_and(|m| m.hyperbolic)).count()),
        sideband_advisory_rows: with_mod.then(|| rows.iter().filter(|(_, p)| p.sideband_advisory()).count()),
    }
}
