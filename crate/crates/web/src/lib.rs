//! wasm-bindgen entry points for the browser demo. Each call returns a JSON
//! string; the plain-Rust `*_json` functions behind them are what the native
//! tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use wavestab::action::{action_jet_qkdv, Numerics};
use wavestab::cases::find_case;
use wavestab::evans::{evans_scan_qkdv, scan_profile};
use wavestab::linalg;
use wavestab::models::{make_builtin, ModelOptions, NonlinearModel};
use wavestab::profile::{find_well, reconstruct_profile, WaveParamsQ, Well};
use wavestab::stability::verdict_qkdv;
use wavestab::sweep::{analyze_point, build_model, plan};

/// μ above the well bottom used when the well has no saddle.
const OPEN_DEPTH: f64 = 5.0;
const CURVE_POINTS: usize = 400;

fn model(name: &str, gamma: f64, sign: f64) -> Result<NonlinearModel, String> {
    let opt = |x: f64| if x.is_finite() { Some(x) } else { None };
    make_builtin(name, ModelOptions { gamma: opt(gamma), sign: opt(sign) }).map_err(|e| e.to_string())
}

/// μ at depth fraction s of the well.
fn level(well: &Well, s: f64) -> f64 {
    let top = well.top();
    if top.is_finite() {
        well.w0 + s * (top - well.w0)
    } else {
        well.w0 + s * OPEN_DEPTH
    }
}

fn point(name: &str, gamma: f64, sign: f64, lambda: f64, c: f64, s: f64) -> Result<(NonlinearModel, Well, WaveParamsQ), String> {
    if !(s > 0.0 && s < 1.0) {
        return Err("depth fraction must lie in (0, 1)".into());
    }
    let m = model(name, gamma, sign)?;
    let well = find_well(&m, lambda, c, None).map_err(|e| e.to_string())?;
    let q = WaveParamsQ { mu: level(&well, s), lambda, c };
    Ok((m, well, q))
}

#[derive(Serialize)]
struct Portrait {
    mu: f64,
    center: f64,
    floor: f64,
    top: Option<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    x: Vec<f64>,
    profile: Vec<f64>,
    period: f64,
    minors: Vec<f64>,
    n_hess: usize,
    spectral: &'static str,
    orbital: Option<&'static str>,
    conditions: Vec<&'static str>,
}

/// Potential W(v) around the well, one period of the profile at depth
/// fraction s, and the stability verdict of that wave.
pub fn portrait_json(name: &str, gamma: f64, sign: f64, lambda: f64, c: f64, s: f64) -> Result<String, String> {
    let (m, well, q) = point(name, gamma, sign, lambda, c, s)?;
    let jet = action_jet_qkdv(&m, &q, &Numerics::default(), Some(well.v0)).map_err(|e| e.to_string())?;
    let tp = jet.point.tp;
    let prof = reconstruct_profile(&m, &q, &tp, jet.grad[0], 512).map_err(|e| e.to_string())?;
    let rep = verdict_qkdv(&jet, Numerics::default().sign_tol);
    let (a, b) = (tp.v2.min(tp.v3), tp.v2.max(tp.v3));
    let pad = 0.35 * (b - a).max(1e-3);
    let (lo, hi) = ((a - pad).max(m.domain.0 + 1e-3 * pad), (b + pad).min(m.domain.1));
    let v: Vec<f64> = (0..=CURVE_POINTS).map(|i| lo + (hi - lo) * i as f64 / CURVE_POINTS as f64).collect();
    let w = v.iter().map(|&x| m.potential_unchecked(x, lambda, c).w).collect();
    let top = well.top();
    let out = Portrait {
        mu: q.mu,
        center: well.v0,
        floor: well.w0,
        top: top.is_finite().then_some(top),
        v,
        w,
        x: prof.x,
        profile: prof.v,
        period: jet.grad[0],
        minors: rep.minors.clone(),
        n_hess: rep.n_hess,
        spectral: rep.verdict_spectral.as_str(),
        orbital: rep.verdict_orbital_qkdv.map(|o| o.as_str()),
        conditions: rep.conditions.iter().map(|c| c.as_str()).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CaseRow {
    value: f64,
    period: f64,
    minors: Vec<f64>,
    n_hess: usize,
    spectral: &'static str,
    conditions: Vec<&'static str>,
    limit_zone: &'static str,
}

#[derive(Serialize)]
struct CaseSweep {
    name: &'static str,
    variable: String,
    minor_order: Vec<&'static str>,
    expected: &'static [&'static str],
    note: &'static str,
    rows: Vec<CaseRow>,
    skipped: usize,
}

/// Sequential version of a named reproduction sweep, with `count` points.
pub fn case_sweep_json(case: &str, count: usize) -> Result<String, String> {
    let def = find_case(case).ok_or_else(|| format!("unknown case `{case}`"))?;
    let mut cfg = def.config();
    if let Some(s) = cfg.sweep.as_mut() {
        s.count = count.clamp(2, 200);
    }
    let m = build_model(&cfg).map_err(|e| e.to_string())?;
    let p = plan(&cfg, &m).map_err(|e| e.to_string())?;
    let mut out = CaseSweep {
        name: def.name,
        variable: p.variable.clone(),
        minor_order: Vec::new(),
        expected: def.expected,
        note: def.note,
        rows: Vec::new(),
        skipped: 0,
    };
    for &x in &p.values {
        let wave = cfg.wave.with(&p.variable, x);
        match analyze_point(&m, &wave, &cfg.numerics, p.center, false) {
            Ok(r) => {
                out.minor_order = r.report.minor_order.clone();
                out.rows.push(CaseRow {
                    value: x,
                    period: r.period,
                    minors: r.report.minors.clone(),
                    n_hess: r.report.n_hess,
                    spectral: r.report.verdict_spectral.as_str(),
                    conditions: r.report.conditions.iter().map(|c| c.as_str()).collect(),
                    limit_zone: r.report.limit_zone.as_str(),
                });
            }
            Err(_) => out.skipped += 1,
        }
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Evans {
    r: Vec<f64>,
    values: Vec<f64>,
    det_hessian: f64,
    fit_coeff: Option<f64>,
    fit_slope: Option<f64>,
    fit_window: Option<(f64, f64)>,
    tail_sign: i8,
    sign_changes: usize,
}

/// qKdV Evans function d(r) on a log grid for the wave at depth fraction s.
pub fn evans_json(name: &str, gamma: f64, sign: f64, lambda: f64, c: f64, s: f64) -> Result<String, String> {
    let (m, well, q) = point(name, gamma, sign, lambda, c, s)?;
    let n = Numerics { evans_steps: 1024, ..Numerics::default() };
    let jet = action_jet_qkdv(&m, &q, &n, Some(well.v0)).map_err(|e| e.to_string())?;
    let (prof, steps) = scan_profile(&m, &q, &jet.point.tp, jet.grad[0], &n).map_err(|e| e.to_string())?;
    let scan = evans_scan_qkdv(&prof, &m, None, 80, steps).map_err(|e| e.to_string())?;
    let out = Evans {
        r: scan.r,
        values: scan.values,
        det_hessian: linalg::det(&jet.hess),
        fit_coeff: scan.fit_coeff,
        fit_slope: scan.fit_slope,
        fit_window: scan.fit_window,
        tail_sign: scan.tail_sign,
        sign_changes: scan.sign_changes,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// NaN for gamma or sign selects the model default.
#[wasm_bindgen]
pub fn portrait(model: &str, gamma: f64, sign: f64, lambda: f64, c: f64, s: f64) -> Result<String, JsError> {
    js(portrait_json(model, gamma, sign, lambda, c, s))
}

#[wasm_bindgen]
pub fn case_sweep(case: &str, count: usize) -> Result<String, JsError> {
    js(case_sweep_json(case, count))
}

#[wasm_bindgen]
pub fn evans(model: &str, gamma: f64, sign: f64, lambda: f64, c: f64, s: f64) -> Result<String, JsError> {
    js(evans_json(model, gamma, sign, lambda, c, s))
}
