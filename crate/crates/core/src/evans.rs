//! Co-periodic Evans functions d(r) (qKdV, 3×3) and D(r) (EKL, 4×4) on the
//! positive real axis, and the Sturm discriminant T(r) of the reduced operator
//! a = −∂(∩(v̄)∂) + q̃.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat};
use crate::models::NonlinearModel;
use crate::action::Numerics;
use crate::profile::{reconstruct_profile, ProfileError, ProfileSamples, TurningPoints, WaveParamsQ};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvansError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("fundamental matrix overflowed at r = {0:e}; reduce r_max")]
    Overflow(f64),
    #[error("monodromy determinant drifted by {0:e}; increase evans_steps")]
    DeterminantDrift(f64),
    #[error("r_max must be positive")]
    BadRange,
}

/// Which operator sits inside the second EKL equation z w = ∂(a v − j w).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EklOperator {
    /// a = Hess e (no shift).
    Bare,
    /// a = Hess e − j², the reduced operator at the mapped parameters.
    Shifted,
}

/// Coefficients of a along one period at the RK4 stage points x = k·h/2.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub step: f64,
    /// ∩(v̄)
    pub k: Vec<f64>,
    /// d/dx ∩(v̄)
    pub dk: Vec<f64>,
    /// q̃ = f″ + c − ½∩″v̄ₓ² − ∩′v̄ₓₓ at the profile's c
    pub q: Vec<f64>,
}

impl Coefficients {
    pub fn new(profile: &ProfileSamples, model: &NonlinearModel, n_steps: usize) -> Result<Self, EvansError> {
        let n = n_steps.max(64);
        let step = profile.period / n as f64;
        let c = profile.params.c;
        let len = 2 * n + 1;
        let mut out = Coefficients { step, k: Vec::with_capacity(len), dk: Vec::with_capacity(len), q: Vec::with_capacity(len) };
        for i in 0..len {
            let x = (i as f64 * 0.5 * step).min(profile.period);
            let (v, vx, vxx) = profile.eval(model, x)?;
            let [_, _, d2f] = model.f3(v);
            let [k, dk, d2k] = model.cap3(v);
            out.k.push(k);
            out.dk.push(dk * vx);
            out.q.push(d2f + c - 0.5 * d2k * vx * vx - dk * vxx);
        }
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        (self.k.len() - 1) / 2
    }

    pub fn q_sup(&self) -> f64 {
        self.q.iter().fold(0.0_f64, |a, b| a.max(b.abs()))
    }

    /// ∫ ∩^(−1/p) dx over the period, used for growth estimates.
    fn growth_integral(&self, p: f64) -> f64 {
        let h = self.step;
        (0..self.steps())
            .map(|i| h / 6.0 * (self.k[2 * i].powf(-1.0 / p) + 4.0 * self.k[2 * i + 1].powf(-1.0 / p) + self.k[2 * i + 2].powf(-1.0 / p)))
            .sum()
    }
}

/// Largest local rate of the first-order systems at r = 0.
fn max_rate(coef: &Coefficients) -> f64 {
    (0..coef.k.len())
        .map(|i| (coef.q[i].abs() / coef.k[i]).sqrt() + (coef.dk[i] / coef.k[i]).abs())
        .fold(0.0, f64::max)
}

/// Step budget so that h times the fastest local rate stays below this.
const RATE_STEP: f64 = 0.01;
const MAX_STEPS: usize = 1 << 16;

/// Profile samples and RK4 step count for monodromy computations: at least
/// `numerics.evans_steps`, refined when the coefficients are stiff. The
/// profile carries 2n samples so RK4 stages fall on nodes.
pub fn scan_profile(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    tp: &TurningPoints,
    period: f64,
    numerics: &Numerics,
) -> Result<(ProfileSamples, usize), EvansError> {
    let base = numerics.evans_steps.max(64);
    let prof = reconstruct_profile(model, q, tp, period, 2 * base)?;
    let coef = Coefficients::new(&prof, model, base)?;
    let need = (period * max_rate(&coef) / RATE_STEP).ceil() as usize;
    if need <= base {
        return Ok((prof, base));
    }
    let n = need.div_ceil(64).saturating_mul(64).min(MAX_STEPS);
    Ok((reconstruct_profile(model, q, tp, period, 2 * n)?, n))
}

/// RK4 fundamental matrix over one period for X′ = A(x)X, A given by stage index.
pub fn monodromy<const N: usize>(coef: &Coefficients, a: impl Fn(usize) -> Mat<N>) -> Mat<N> {
    let h = coef.step;
    let mut f = linalg::identity::<N>();
    let axpy = |f: &Mat<N>, k: &Mat<N>, s: f64| {
        let mut o = *f;
        for i in 0..N {
            for j in 0..N {
                o[i][j] += s * k[i][j];
            }
        }
        o
    };
    for n in 0..coef.steps() {
        let (a0, a1, a2) = (a(2 * n), a(2 * n + 1), a(2 * n + 2));
        let k1 = linalg::matmul(&a0, &f);
        let k2 = linalg::matmul(&a1, &axpy(&f, &k1, 0.5 * h));
        let k3 = linalg::matmul(&a1, &axpy(&f, &k2, 0.5 * h));
        let k4 = linalg::matmul(&a2, &axpy(&f, &k3, h));
        for i in 0..N {
            for j in 0..N {
                f[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
    }
    f
}

/// State (h, h′, a h) for ∂(a h) = r h.
pub fn qkdv_matrix(coef: &Coefficients, i: usize, r: f64) -> Mat<3> {
    let (k, dk, q) = (coef.k[i], coef.dk[i], coef.q[i]);
    [[0.0, 1.0, 0.0], [q / k, -dk / k, -1.0 / k], [r, 0.0, 0.0]]
}

/// State (v, v′, w − jv, a v − j w) for z v = ∂(w − jv), z w = ∂(a v − j w).
pub fn ekl_matrix(coef: &Coefficients, i: usize, r: f64, j: f64, op: EklOperator) -> Mat<4> {
    let (k, dk) = (coef.k[i], coef.dk[i]);
    // coef.q already carries c = −j²
    let qa = match op {
        EklOperator::Bare => coef.q[i] + j * j,
        EklOperator::Shifted => coef.q[i],
    };
    [
        [0.0, 1.0, 0.0, 0.0],
        [(qa - j * j) / k, -dk / k, -j / k, -1.0 / k],
        [r, 0.0, 0.0, 0.0],
        [r * j, 0.0, r, 0.0],
    ]
}

pub fn evans_value_qkdv(coef: &Coefficients, r: f64) -> (f64, Mat<3>) {
    let m = monodromy(coef, |i| qkdv_matrix(coef, i, r));
    let mut d = m;
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    (linalg::det(&d), m)
}

pub fn evans_value_ekl(coef: &Coefficients, r: f64, j: f64, op: EklOperator) -> (f64, Mat<4>) {
    let m = monodromy(coef, |i| ekl_matrix(coef, i, r, j, op));
    let mut d = m;
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    (linalg::det(&d), m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvansScan {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    pub cumulative_sign_changes: Vec<usize>,
    pub sign_changes: usize,
    /// Leading power p in d(r) ~ C rᵖ.
    pub power: u32,
    pub fit_coeff: Option<f64>,
    pub fit_slope: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub tail_sign: i8,
    pub r_max: f64,
    pub max_det_drift: f64,
}

/// Values below this fraction of the monodromy scale are treated as noise.
const NOISE: f64 = 1e-8;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Picks the two-decade window where d/rᵖ is flattest and fits d/rᵖ = A + B r there; returns (A, log-log slope, window).
pub fn fit_leading(r: &[f64], d: &[f64], noise: &[f64], p: u32) -> Option<(f64, f64, (f64, f64))> {
    let ok: Vec<bool> = d.iter().zip(noise).map(|(x, n)| x.abs() > *n && x.is_finite()).collect();
    let g: Vec<f64> = r.iter().zip(d).map(|(r, d)| d / r.powi(p as i32)).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for start in 0..r.len() {
        let Some(end) = r.iter().position(|&x| x >= 100.0 * r[start]) else { break };
        if end - start < 4 || !(start..=end).all(|i| ok[i]) {
            continue;
        }
        let sign = d[start].signum();
        if (start..=end).any(|i| d[i].signum() != sign) {
            continue;
        }
        let (lo, hi) = (start..=end).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| (lo.min(g[i]), hi.max(g[i])));
        let spread = (hi - lo) / lo.abs().max(hi.abs());
        if best.map_or(true, |b| spread < b.0) {
            best = Some((spread, start, end));
        }
    }
    let (_, start, end) = best?;
    let xs: Vec<f64> = (start..=end).map(|i| r[i].ln()).collect();
    let ys: Vec<f64> = (start..=end).map(|i| d[i].abs().ln()).collect();
    let slope = least_squares(&xs, &ys).1;
    let xs: Vec<f64> = (start..=end).map(|i| r[i]).collect();
    let (a, _) = least_squares(&xs, &g[start..=end]);
    Some((a, slope, (r[start], r[end])))
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

fn count_changes(values: &[f64], noise: &[f64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(values.len());
    let mut last = 0.0;
    let mut n = 0;
    for (v, e) in values.iter().zip(noise) {
        if v.abs() > *e {
            if last != 0.0 && v.signum() != last {
                n += 1;
            }
            last = v.signum();
        }
        out.push(n);
    }
    out
}

fn max_abs<const N: usize>(m: &Mat<N>) -> f64 {
    m.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs()))
}

fn scan<const N: usize>(
    grid: Vec<f64>,
    power: u32,
    eval: impl Fn(f64) -> (f64, Mat<N>) + Sync,
) -> Result<EvansScan, EvansError> {
    use rayon::prelude::*;
    let res: Vec<(f64, Mat<N>)> = grid.par_iter().map(|&r| eval(r)).collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut noise = Vec::with_capacity(grid.len());
    let mut drift = 0.0_f64;
    for (&r, (d, m)) in grid.iter().zip(&res) {
        let big = max_abs(m);
        if !d.is_finite() || !big.is_finite() {
            return Err(EvansError::Overflow(r));
        }
        // det M = 1 is only checkable before cancellation sets in
        if big < 10.0 {
            drift = drift.max((linalg::det(m) - 1.0).abs());
        }
        values.push(*d);
        let mut shifted = *m;
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= 1.0;
        }
        let hadamard: f64 = linalg::row_norms(&shifted).iter().product();
        noise.push(NOISE * hadamard);
    }
    if drift > 1e-6 {
        return Err(EvansError::DeterminantDrift(drift));
    }
    let fit = fit_leading(&grid, &values, &noise, power);
    // below the fit window d is rounding noise
    if let Some((_, _, (lo, _))) = fit {
        for (n, r) in noise.iter_mut().zip(&grid) {
            if *r < lo {
                *n = f64::INFINITY;
            }
        }
    }
    let cumulative = count_changes(&values, &noise);
    let last = *values.last().unwrap();
    Ok(EvansScan {
        sign_changes: *cumulative.last().unwrap(),
        cumulative_sign_changes: cumulative,
        power,
        fit_coeff: fit.map(|f| f.0),
        fit_slope: fit.map(|f| f.1),
        fit_window: fit.map(|f| f.2),
        tail_sign: if last > 0.0 { 1 } else if last < 0.0 { -1 } else { 0 },
        r_max: *grid.last().unwrap(),
        max_det_drift: drift,
        r: grid,
        values,
    })
}

/// Characteristic spectral scale of ∂a on one period.
fn r_char(coef: &Coefficients, period: f64) -> f64 {
    let kk = 2.0 * std::f64::consts::PI / period;
    let kbar = coef.k.iter().sum::<f64>() / coef.k.len() as f64;
    kk * (kbar * kk * kk + coef.q_sup())
}

/// Default r_max: 10(‖q̃‖∞ + 1)², capped so the fastest mode grows by at most e⁴⁰ per period.
pub fn default_r_max(coef: &Coefficients, order: u32) -> f64 {
    let base = 10.0 * (coef.q_sup() + 1.0).powi(2);
    let cap = match order {
        3 => (40.0 / coef.growth_integral(3.0)).powi(3),
        _ => (40.0 / coef.growth_integral(4.0)).powi(2),
    };
    base.min(cap)
}

fn grid_for(coef: &Coefficients, period: f64, r_max: f64, n_grid: usize) -> Vec<f64> {
    let lo = (1e-7 * r_char(coef, period)).min(1e-6 * r_max);
    log_grid(lo, r_max, n_grid)
}

pub fn evans_scan_qkdv(
    profile: &ProfileSamples,
    model: &NonlinearModel,
    r_max: Option<f64>,
    n_grid: usize,
    steps: usize,
) -> Result<EvansScan, EvansError> {
    let coef = Coefficients::new(profile, model, steps)?;
    let r_max = r_max.unwrap_or_else(|| default_r_max(&coef, 3));
    if !(r_max > 0.0) {
        return Err(EvansError::BadRange);
    }
    let grid = grid_for(&coef, profile.period, r_max, n_grid);
    scan(grid, 3, |r| evans_value_qkdv(&coef, r))
}

pub fn evans_scan_ekl(
    profile: &ProfileSamples,
    model: &NonlinearModel,
    j: f64,
    op: EklOperator,
    r_max: Option<f64>,
    n_grid: usize,
    steps: usize,
) -> Result<EvansScan, EvansError> {
    let coef = Coefficients::new(profile, model, steps)?;
    let r_max = r_max.unwrap_or_else(|| default_r_max(&coef, 4));
    if !(r_max > 0.0) {
        return Err(EvansError::BadRange);
    }
    let grid = grid_for(&coef, profile.period, r_max, n_grid);
    scan(grid, 4, |r| evans_value_ekl(&coef, r, j, op))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantEval {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub t0_residual: f64,
    pub slope_at_zero: f64,
    pub curvature_at_zero: f64,
    pub max_det_drift: f64,
}

/// Trace of the monodromy of v′ = w/∩(v̄), w′ = (q̃ − r)v, and its determinant.
pub fn discriminant(coef: &Coefficients, r: f64) -> (f64, f64) {
    let m = monodromy(coef, |i| [[0.0, 1.0 / coef.k[i]], [coef.q[i] - r, 0.0]]);
    (m[0][0] + m[1][1], m[0][0] * m[1][1] - m[0][1] * m[1][0])
}

pub fn sturm_discriminant(
    profile: &ProfileSamples,
    model: &NonlinearModel,
    r_list: &[f64],
    steps: usize,
) -> Result<DiscriminantEval, EvansError> {
    let coef = Coefficients::new(profile, model, steps)?;
    let delta = 1e-3 * (coef.q_sup() + 1.0);
    let (t0, d0) = discriminant(&coef, 0.0);
    let (tp, dp) = discriminant(&coef, delta);
    let (tm, dm) = discriminant(&coef, -delta);
    let (tp2, _) = discriminant(&coef, 0.5 * delta);
    let (tm2, _) = discriminant(&coef, -0.5 * delta);
    let mut drift = [d0, dp, dm].iter().fold(0.0_f64, |a, d| a.max((d - 1.0).abs()));
    let mut t = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let (tr, det) = discriminant(&coef, r);
        drift = drift.max((det - 1.0).abs());
        t.push(tr);
    }
    if drift > 1e-6 {
        return Err(EvansError::DeterminantDrift(drift));
    }
    Ok(DiscriminantEval {
        r: r_list.to_vec(),
        t,
        t0_residual: (t0 - 2.0).abs(),
        slope_at_zero: (8.0 * (tp2 - tm2) - (tp - tm)) / (6.0 * delta),
        curvature_at_zero: (tp - 2.0 * t0 + tm) / (delta * delta),
        max_det_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{action_jet_ek, action_jet_qkdv, ActionJet3, Numerics};
    use crate::models::{make_builtin, ModelOptions};
    use crate::profile::{ek_to_qkdv, find_well, reconstruct_profile, WaveParamsEK, WaveParamsQ};
    use std::f64::consts::PI;

    fn qkdv_case(name: &str, opts: ModelOptions, lambda: f64, c: f64, s: f64) -> (NonlinearModel, ActionJet3, ProfileSamples) {
        let m = make_builtin(name, opts).unwrap();
        let well = find_well(&m, lambda, c, None).unwrap();
        let depth = if well.top().is_finite() { well.top() - well.w0 } else { 10.0 };
        let q = WaveParamsQ { mu: well.w0 + s * depth, lambda, c };
        let jet = action_jet_qkdv(&m, &q, &Numerics::default(), None).unwrap();
        let prof = reconstruct_profile(&m, &q, &jet.point.tp, jet.grad[0], 4096).unwrap();
        (m, jet, prof)
    }

    fn none() -> ModelOptions {
        ModelOptions { gamma: None, sign: None }
    }

    #[test]
    fn kdv_small_r_matches_hessian_determinant() {
        let (m, jet, prof) = qkdv_case("kdv3", none(), -60.0, 60.0, 0.5);
        let sc = evans_scan_qkdv(&prof, &m, None, 120, 2048).unwrap();
        let d = linalg::det(&jet.hess);
        let fit = sc.fit_coeff.unwrap();
        assert!((fit - d).abs() < 0.02 * d.abs(), "{fit} vs {d}");
        assert!((sc.fit_slope.unwrap() - 3.0).abs() < 0.05);
        assert_eq!(sc.tail_sign, -1);
        assert!(sc.max_det_drift < 1e-6);
    }

    fn nls() -> (NonlinearModel, crate::action::ActionJet4, ProfileSamples) {
        let m = make_builtin("nls-capillarity", none()).unwrap();
        let (mu, j) = (2.5, 1.0);
        let well = find_well(&m, -mu, -j * j, None).unwrap();
        let p = WaveParamsEK { mu, lambda: well.w0 + 0.5 * (well.top() - well.w0), j, sigma: 0.0 };
        let jet = action_jet_ek(&m, &p, &Numerics::default(), None).unwrap();
        let prof = reconstruct_profile(&m, &ek_to_qkdv(&p), &jet.underlying.point.tp, jet.underlying.grad[0], 4096).unwrap();
        (m, jet, prof)
    }

    #[test]
    fn nls_small_r_matches_ek_hessian_determinant() {
        let (m, jet, prof) = nls();
        let sc = evans_scan_ekl(&prof, &m, 1.0, EklOperator::Bare, None, 120, 2048).unwrap();
        let d = linalg::det(&jet.hess);
        let fit = sc.fit_coeff.unwrap();
        assert!((fit - d).abs() < 0.05 * d.abs(), "{fit} vs {d}");
        assert!((sc.fit_slope.unwrap() - 4.0).abs() < 0.05);
        assert_eq!(sc.tail_sign, 1);
        assert_eq!(sc.sign_changes % 2, 0);
    }

    #[test]
    fn shifted_operator_does_not_vanish_at_r4() {
        let (m, _, prof) = nls();
        let sc = evans_scan_ekl(&prof, &m, 1.0, EklOperator::Shifted, None, 120, 2048).unwrap();
        assert!((sc.fit_slope.unwrap() - 4.0).abs() > 0.5);
    }

    #[test]
    fn translation_mode_is_fixed_by_monodromy() {
        let (m, _, prof) = qkdv_case("kdv3", none(), -60.0, 60.0, 0.3);
        let coef = Coefficients::new(&prof, &m, 2048).unwrap();
        let (_, mono) = evans_value_qkdv(&coef, 0.0);
        let (_, _, vxx) = prof.eval(&m, 0.0).unwrap();
        let y = linalg::mat_vec(&mono, &[0.0, vxx, 0.0]);
        assert!((y[0]).abs() < 1e-6 * vxx.abs() && (y[1] - vxx).abs() < 1e-6 * vxx.abs() && y[2].abs() < 1e-6 * vxx.abs());
    }

    #[test]
    fn harmonic_discriminant_closed_form() {
        let m = make_builtin("synthetic-quadratic", none()).unwrap();
        let q = WaveParamsQ { mu: 1.3, lambda: 0.4, c: -2.0 };
        let jet = action_jet_qkdv(&m, &q, &Numerics::default(), None).unwrap();
        let prof = reconstruct_profile(&m, &q, &jet.point.tp, jet.grad[0], 4096).unwrap();
        let rs = [0.5, 1.0, 3.0, -1.0];
        let ev = sturm_discriminant(&prof, &m, &rs, 2048).unwrap();
        for (r, t) in rs.iter().zip(&ev.t) {
            let exact = 2.0 * (PI * 2f64.sqrt() * (2.0 + r).sqrt()).cos();
            assert!((t - exact).abs() < 1e-8, "{r}: {t} vs {exact}");
        }
        assert!(ev.t0_residual < 1e-9);
        assert!(ev.slope_at_zero.abs() < 1e-6);
        assert!((ev.curvature_at_zero + PI * PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn discriminant_slope_tracks_period_derivative() {
        let cases = [
            ("kdv3", none(), -60.0, 60.0),
            ("power-law", ModelOptions { gamma: Some(3.0), sign: Some(1.0) }, 0.5, -1.0),
        ];
        for (name, opts, lambda, c) in cases {
            for s in [0.1, 0.5, 0.9] {
                let (m, jet, prof) = qkdv_case(name, opts, lambda, c, s);
                let ev = sturm_discriminant(&prof, &m, &[], 2048).unwrap();
                assert!(ev.t0_residual < 1e-6, "{name} {s}: {}", ev.t0_residual);
                assert_eq!(ev.slope_at_zero.signum(), jet.hess[0][0].signum(), "{name} {s}: {} {}", ev.slope_at_zero, jet.hess[0][0]);
            }
        }
    }
}
