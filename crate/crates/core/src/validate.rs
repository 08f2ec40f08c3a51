//! Randomized self-consistency suite over the built-in models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::{action_jet_ek, Numerics};
use crate::evans::{evans_scan_ekl, evans_scan_qkdv, scan_profile, sturm_discriminant, EklOperator};
use crate::linalg;
use crate::models::{make_builtin, ModelOptions, NonlinearModel};
use crate::profile::{find_well, WaveParamsEK, WaveParamsQ};
use crate::stability::{verdict_ek, verdict_qkdv};

/// Parameter box for rejection sampling; c < 0 so every point also maps to an
/// EK wave.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sampler {
    pub label: &'static str,
    pub model: &'static str,
    pub gamma: Option<f64>,
    pub sign: Option<f64>,
    pub lambda: (f64, f64),
    pub c: (f64, f64),
    /// μ above the well bottom for wells without a saddle.
    pub open_depth: f64,
}

pub const SAMPLERS: [Sampler; 8] = [
    Sampler { label: "power-law", model: "power-law", gamma: None, sign: None, lambda: (-20.0, -0.5), c: (-10.0, -1.0), open_depth: 1.0 },
    Sampler { label: "kdv3", model: "kdv3", gamma: None, sign: None, lambda: (-20.0, -0.5), c: (-10.0, -1.0), open_depth: 1.0 },
    Sampler { label: "boussinesq", model: "boussinesq", gamma: None, sign: None, lambda: (-0.5, 0.5), c: (-2.0, -0.1), open_depth: 1.0 },
    Sampler { label: "perfect-gas", model: "perfect-gas", gamma: None, sign: None, lambda: (-5.0, -1.0), c: (-2.0, -0.5), open_depth: 1.0 },
    Sampler { label: "nls-capillarity", model: "nls-capillarity", gamma: None, sign: None, lambda: (-5.0, -1.0), c: (-2.0, -0.5), open_depth: 1.0 },
    Sampler { label: "constant-capillarity", model: "constant-capillarity", gamma: None, sign: None, lambda: (-5.0, -1.0), c: (-2.0, -0.5), open_depth: 1.0 },
    Sampler { label: "synthetic-quadratic", model: "synthetic-quadratic", gamma: None, sign: None, lambda: (-1.0, 1.0), c: (-3.0, -0.5), open_depth: 5.0 },
    Sampler { label: "quartic-hardening", model: "power-law", gamma: Some(3.0), sign: Some(1.0), lambda: (-2.0, 2.0), c: (-3.0, -0.5), open_depth: 5.0 },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePoint {
    pub q: WaveParamsQ,
    pub ek: WaveParamsEK,
    pub center: f64,
}

impl Sampler {
    pub fn build(&self) -> NonlinearModel {
        make_builtin(self.model, ModelOptions { gamma: self.gamma, sign: self.sign }).expect("sampler models are valid")
    }

    /// Draws up to n feasible points; returns them with the number of rejected draws.
    pub fn draw(&self, model: &NonlinearModel, rng: &mut ChaCha8Rng, n: usize) -> (Vec<SamplePoint>, usize) {
        let mut out = Vec::with_capacity(n);
        let mut rejected = 0;
        while out.len() < n && rejected < 100 * n.max(10) {
            let lambda = rng.gen_range(self.lambda.0..=self.lambda.1);
            let c = rng.gen_range(self.c.0..=self.c.1);
            let s: f64 = rng.gen_range(0.05..=0.95);
            let jsign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let sigma: f64 = rng.gen_range(-0.5..=0.5);
            let Ok(well) = find_well(model, lambda, c, None) else {
                rejected += 1;
                continue;
            };
            let top = well.top();
            let mu = if top.is_finite() { well.w0 + s * (top - well.w0) } else { well.w0 + s * self.open_depth };
            let j = jsign * (-c).sqrt();
            let q = WaveParamsQ { mu, lambda, c };
            let ek = WaveParamsEK { mu: j * sigma - lambda, lambda: mu + 0.5 * sigma * sigma, j, sigma };
            out.push(SamplePoint { q, ek, center: well.v0 });
        }
        (out, rejected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckStats {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelValidation {
    pub label: &'static str,
    pub points: usize,
    pub rejected_draws: usize,
    pub errors: Vec<String>,
    pub period_derivative_signs: (usize, usize),
    pub checks: Vec<CheckStats>,
}

impl ModelValidation {
    pub fn ok(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn check(&self, name: &str) -> Option<&CheckStats> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub n_points: usize,
    pub evans: bool,
    pub models: Vec<ModelValidation>,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    pub n_points: usize,
    pub evans: bool,
    /// Restrict to these sampler labels.
    pub only: Option<Vec<String>>,
    pub numerics: Numerics,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { seed: 1, n_points: 20, evans: false, only: None, numerics: Numerics::default() }
    }
}

pub const IDENTITY_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const STURM_TOL: f64 = 1e-6;
pub const EVANS_TOL_QKDV: f64 = 0.02;
pub const EVANS_TOL_EKL: f64 = 0.05;

/// Outcome of one check at one point: Some((passed, residual)) or None if not applicable.
type Outcome = Option<(bool, f64)>;

const CHECKS: [&str; 10] = [
    "det_action_c",
    "const_eke",
    "const_ekl",
    "det_action_action",
    "integer_identity",
    "cauchy_schwarz",
    "gradient",
    "sturm_rule",
    "evans_qkdv",
    "evans_ekl",
];

fn tol_check(r: Option<f64>, tol: f64) -> Outcome {
    r.map(|x| (x <= tol, x))
}

fn point_checks(model: &NonlinearModel, p: &SamplePoint, opts: &ValidateOptions) -> Result<([Outcome; 10], Option<i8>), String> {
    let n = &opts.numerics;
    let jet4 = action_jet_ek(model, &p.ek, n, Some(p.center)).map_err(|e| e.to_string())?;
    let jet3 = &jet4.underlying;
    let rep3 = verdict_qkdv(jet3, n.sign_tol);
    let rep4 = verdict_ek(&jet4, n.sign_tol);
    let r = &rep4.residuals;
    let mut out: [Outcome; 10] = [None; 10];
    out[0] = tol_check(rep3.residuals.det_action_c, IDENTITY_TOL);
    out[1] = tol_check(r.const_eke, IDENTITY_TOL);
    out[2] = tol_check(r.const_ekl, IDENTITY_TOL);
    out[3] = tol_check(r.det_action_action, IDENTITY_TOL);
    out[4] = r.integer_identity.map(|b| (b, if b { 0.0 } else { 1.0 }));
    out[5] = Some((r.cauchy_schwarz_margin > 0.0, r.cauchy_schwarz_margin));
    out[6] = Some((jet3.fd_grad_residual <= GRADIENT_TOL, jet3.fd_grad_residual));

    let (prof, steps) = scan_profile(model, &jet3.params, &jet3.point.tp, jet3.grad[0], n).map_err(|e| e.to_string())?;
    let st = sturm_discriminant(&prof, model, &[], steps).map_err(|e| e.to_string())?;
    let h = &jet3.hess;
    let scale = linalg::row_norms(h)[0];
    let ymu_sign = if h[0][0].abs() > 1e-6 * scale { Some(h[0][0].signum() as i8) } else { None };
    let sign_ok = ymu_sign.map_or(true, |s| st.slope_at_zero.signum() as i8 == s);
    out[7] = Some((st.t0_residual <= STURM_TOL && sign_ok, st.t0_residual));

    if opts.evans {
        let rel = |fit: Option<f64>, det: f64| fit.map_or(f64::INFINITY, |f| (f - det).abs() / det.abs());
        let decisive = |d: f64, h: &[f64]| d.abs() > 1e-4 * h.iter().product::<f64>();
        let d3 = linalg::det(h);
        if decisive(d3, &linalg::row_norms(h)) {
            let sc = evans_scan_qkdv(&prof, model, n.r_max, n.n_grid, steps).map_err(|e| e.to_string())?;
            let e = rel(sc.fit_coeff, d3);
            out[8] = Some((e <= EVANS_TOL_QKDV, e));
        }
        let d4 = linalg::det(&jet4.hess);
        if decisive(d4, &linalg::row_norms(&jet4.hess)) {
            let sc = evans_scan_ekl(&prof, model, p.ek.j, EklOperator::Bare, n.r_max, n.n_grid, steps).map_err(|e| e.to_string())?;
            let e = rel(sc.fit_coeff, d4);
            out[9] = Some((e <= EVANS_TOL_EKL, e));
        }
    }
    Ok((out, ymu_sign))
}

pub fn validate_sampler(sampler: &Sampler, opts: &ValidateOptions, index: usize) -> ModelValidation {
    let model = sampler.build();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64));
    let (points, rejected) = sampler.draw(&model, &mut rng, opts.n_points);
    let results: Vec<_> = points.par_iter().map(|p| point_checks(&model, p, opts)).collect();
    let mut checks: Vec<CheckStats> = CHECKS.iter().map(|&name| CheckStats { name, passed: 0, failed: 0, skipped: 0, worst: 0.0 }).collect();
    let mut errors = Vec::new();
    let mut signs = (0, 0);
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok((outcomes, ymu)) => {
                match ymu {
                    Some(1) => signs.0 += 1,
                    Some(_) => signs.1 += 1,
                    None => {}
                }
                for (c, o) in checks.iter_mut().zip(outcomes) {
                    match o {
                        None => c.skipped += 1,
                        Some((ok, x)) => {
                            if ok {
                                c.passed += 1;
                            } else {
                                c.failed += 1;
                            }
                            if x.is_finite() {
                                c.worst = c.worst.max(x.abs());
                            } else {
                                c.worst = f64::INFINITY;
                            }
                        }
                    }
                }
            }
            Err(e) => errors.push(format!("mu={} lambda={} c={}: {e}", p.q.mu, p.q.lambda, p.q.c)),
        }
    }
    if points.len() < opts.n_points {
        errors.push(format!("only {} feasible points drawn", points.len()));
    }
    // the cauchy-schwarz "worst" is a margin: report the smallest
    ModelValidation { label: sampler.label, points: points.len(), rejected_draws: rejected, errors, period_derivative_signs: signs, checks }
}

pub fn validate(opts: &ValidateOptions) -> ValidationReport {
    let models: Vec<ModelValidation> = SAMPLERS
        .iter()
        .enumerate()
        .filter(|(_, s)| opts.only.as_ref().map_or(true, |o| o.iter().any(|l| l == s.label)))
        .map(|(i, s)| validate_sampler(s, opts, i))
        .collect();
    let ok = !models.is_empty() && models.iter().all(|m| m.ok());
    ValidationReport { seed: opts.seed, n_points: opts.n_points, evans: opts.evans, models, ok }
}
