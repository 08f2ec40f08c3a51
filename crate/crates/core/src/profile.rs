//! Turning points of ½∩v̄ₓ² + W(v̄) = μ, period-type integrals by the
//! sin-substitution quadrature, and RK4 reconstruction of the profile.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::models::{ModelError, NonlinearModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("no center of the potential found")]
    NoWell,
    #[error("energy level {mu} is not above the well minimum {floor}")]
    NoOscillation { mu: f64, floor: f64 },
    #[error("energy level {mu} reaches the barrier {barrier}; orbit is not a closed loop")]
    AboveBarrier { mu: f64, barrier: f64 },
    #[error("turning point {v} is not a simple root of W = mu")]
    NonSimpleRoot { v: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("quadrature integrand not positive at omega = {omega} (G = {g})")]
    BadQuadrature { omega: f64, g: f64 },
    #[error("first-integral drift {drift:e} exceeds {limit:e}; increase rk4_steps")]
    Drift { drift: f64, limit: f64 },
    #[error("profile integration left the model domain at x = {x}")]
    LeftDomain { x: f64 },
    #[error("interpolation point {x} outside [0, {period}]")]
    Interpolation { x: f64, period: f64 },
}

/// Reduced-profile parameters (μ, λ, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParamsQ {
    pub mu: f64,
    pub lambda: f64,
    pub c: f64,
}

/// Euler–Korteweg parameters (μ, λ, j, σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParamsEK {
    pub mu: f64,
    pub lambda: f64,
    pub j: f64,
    pub sigma: f64,
}

pub fn ek_to_qkdv(p: &WaveParamsEK) -> WaveParamsQ {
    WaveParamsQ {
        mu: p.lambda - 0.5 * p.sigma * p.sigma,
        lambda: p.j * p.sigma - p.mu,
        c: -p.j * p.j,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Barrier {
    /// Local maximum of W.
    Saddle { v: f64, w: f64 },
    /// No critical point between the center and this end of the domain.
    Open { end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Well {
    pub v0: f64,
    pub w0: f64,
    pub left: Barrier,
    pub right: Barrier,
}

impl Well {
    /// Lowest saddle level, +∞ when both sides are open.
    pub fn top(&self) -> f64 {
        let lvl = |b: &Barrier| match b {
            Barrier::Saddle { w, .. } => *w,
            Barrier::Open { .. } => f64::INFINITY,
        };
        lvl(&self.left).min(lvl(&self.right))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitZone {
    None,
    Harmonic,
    Soliton,
}

impl LimitZone {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitZone::None => "none",
            LimitZone::Harmonic => "harmonic",
            LimitZone::Soliton => "soliton",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoints {
    pub v2: f64,
    pub v3: f64,
    pub v0: f64,
    pub w0: f64,
    pub residual2: f64,
    pub residual3: f64,
    pub limit: LimitZone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileIntegrals {
    pub period: f64,
    pub action: f64,
    pub mean: f64,
    pub half_square: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Midpoint,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub delta_omega: f64,
    pub rule: Rule,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { delta_omega: 1e-4, rule: Rule::Midpoint }
    }
}

/// Root of g in [a, b] by Newton steps, falling back to bisection whenever a
/// step leaves the bracket. `g` returns (value, derivative).
pub(crate) fn bracketed_newton(g: impl Fn(f64) -> (f64, f64), mut a: f64, mut b: f64) -> f64 {
    let (ga, _) = g(a);
    if ga == 0.0 {
        return a;
    }
    let neg_at_a = ga < 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..400 {
        let (gx, dgx) = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - gx / dgx;
        let next = if newton.is_finite() && newton > a.min(b) && newton < a.max(b) {
            newton
        } else {
            0.5 * (a + b)
        };
        let tol = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= tol || (b - a).abs() <= tol {
            return next;
        }
        x = next;
    }
    x
}

fn scan_grid(domain: (f64, f64)) -> Vec<f64> {
    const PER_DECADE: usize = 400;
    let positive: Vec<f64> = (0..=16 * PER_DECADE)
        .map(|k| 10f64.powf(-8.0 + k as f64 / PER_DECADE as f64))
        .collect();
    let mut grid = Vec::with_capacity(2 * positive.len() + 1);
    if domain.0 < 0.0 {
        grid.extend(positive.iter().rev().map(|x| -x));
        grid.push(0.0);
    }
    grid.extend(positive.iter().copied());
    grid.retain(|&v| v > domain.0 && v < domain.1);
    grid
}

#[derive(Debug, Clone, Copy)]
struct Critical {
    v: f64,
    w: f64,
    center: bool,
}

fn critical_points(model: &NonlinearModel, lambda: f64, c: f64) -> Vec<Critical> {
    let pot = |v: f64| model.potential_unchecked(v, lambda, c);
    let grid = scan_grid(model.domain);
    let mut out = Vec::new();
    let mut prev = (grid[0], pot(grid[0]).dw);
    for &v in &grid[1..] {
        let dw = pot(v).dw;
        if dw == 0.0 || (dw < 0.0) != (prev.1 < 0.0) {
            let root = if dw == 0.0 {
                v
            } else {
                bracketed_newton(
                    |x| {
                        let pe = pot(x);
                        (pe.dw, pe.d2w)
                    },
                    prev.0,
                    v,
                )
            };
            let pe = pot(root);
            // a rising W′ means a minimum of W
            let center = if pe.d2w != 0.0 { pe.d2w > 0.0 } else { dw > prev.1 };
            if out.last().map_or(true, |c: &Critical| c.v != root) {
                out.push(Critical { v: root, w: pe.w, center });
            }
        }
        prev = (v, dw);
    }
    out
}

/// Locate the oscillation well: the center nearest `hint`, or the deepest one.
pub fn find_well(
    model: &NonlinearModel,
    lambda: f64,
    c: f64,
    hint: Option<f64>,
) -> Result<Well, ProfileError> {
    let crit = critical_points(model, lambda, c);
    let centers = crit.iter().enumerate().filter(|(_, p)| p.center);
    let chosen = match hint {
        Some(h) => centers.min_by(|a, b| (a.1.v - h).abs().total_cmp(&(b.1.v - h).abs())),
        None => centers.min_by(|a, b| a.1.w.total_cmp(&b.1.w)),
    };
    let (idx, ctr) = chosen.ok_or(ProfileError::NoWell)?;
    let barrier = |p: Option<&Critical>, end: f64| match p {
        Some(p) => Barrier::Saddle { v: p.v, w: p.w },
        None => Barrier::Open { end },
    };
    Ok(Well {
        v0: ctr.v,
        w0: ctr.w,
        left: barrier(idx.checked_sub(1).map(|i| &crit[i]), model.domain.0),
        right: barrier(crit.get(idx + 1), model.domain.1),
    })
}

/// Bracket W = μ between the center and an open domain end.
fn march(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    v0: f64,
    end: f64,
) -> Result<(f64, f64), ProfileError> {
    let w = |v: f64| model.potential_unchecked(v, q.lambda, q.c).w;
    let dir = if end > v0 { 1.0 } else { -1.0 };
    let mut step = 1e-3 * v0.abs().max(1.0);
    let mut prev = (v0, w(v0));
    for _ in 0..4000 {
        let mut next = prev.0 + dir * step;
        if (next - end) * dir >= 0.0 {
            next = 0.5 * (prev.0 + end);
        }
        if next == prev.0 || !next.is_finite() {
            break;
        }
        let wn = w(next);
        if !(wn.is_finite()) || wn >= q.mu {
            return Ok((prev.0, next));
        }
        if wn < prev.1 {
            return Err(ProfileError::AboveBarrier { mu: q.mu, barrier: prev.1 });
        }
        prev = (next, wn);
        step *= 2.0;
    }
    Err(ProfileError::AboveBarrier { mu: q.mu, barrier: prev.1 })
}

pub fn find_turning_points(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    hint: Option<f64>,
) -> Result<TurningPoints, ProfileError> {
    let well = find_well(model, q.lambda, q.c, hint)?;
    if !(q.mu > well.w0) {
        return Err(ProfileError::NoOscillation { mu: q.mu, floor: well.w0 });
    }
    let bracket = |b: Barrier| -> Result<(f64, f64), ProfileError> {
        match b {
            Barrier::Saddle { v, w } if q.mu >= w => {
                let _ = v;
                Err(ProfileError::AboveBarrier { mu: q.mu, barrier: w })
            }
            Barrier::Saddle { v, .. } => Ok((well.v0, v)),
            Barrier::Open { end } => march(model, q, well.v0, end),
        }
    };
    let g = |v: f64| {
        let pe = model.potential_unchecked(v, q.lambda, q.c);
        (pe.w - q.mu, pe.dw)
    };
    let (l0, l1) = bracket(well.left)?;
    let (r0, r1) = bracket(well.right)?;
    let v2 = bracketed_newton(g, l1, l0);
    let v3 = bracketed_newton(g, r0, r1);
    let depth = q.mu - well.w0;
    let scale = q.mu.abs().max(depth);
    for v in [v2, v3] {
        let slope_scale = depth / (v - well.v0).abs();
        if g(v).1.abs() < 1e-8 * slope_scale {
            return Err(ProfileError::NonSimpleRoot { v });
        }
    }
    let near_saddle = |v: f64, b: Barrier| match b {
        Barrier::Saddle { v: vs, .. } => (v - vs).abs() < 1e-6 * vs.abs().max(1.0),
        Barrier::Open { .. } => false,
    };
    let limit = if v3 - v2 < 1e-6 * well.v0.abs() {
        LimitZone::Harmonic
    } else if near_saddle(v2, well.left) || near_saddle(v3, well.right) {
        LimitZone::Soliton
    } else {
        LimitZone::None
    };
    Ok(TurningPoints {
        v2,
        v3,
        v0: well.v0,
        w0: well.w0,
        residual2: g(v2).0.abs() / scale,
        residual3: g(v3).0.abs() / scale,
        limit,
    })
}

/// The four period-type integrals. The integrands are smooth even functions
/// of ω about ±π/2, so both rules converge far faster than their nominal order.
/// Within this fraction of v3 − v2 of a turning point, μ − W(v) is
/// integrated from W′ instead of subtracted.
const ENDPOINT_FRACTION: f64 = 1e-2;

pub fn profile_integrals(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    tp: &TurningPoints,
    quad: &Quadrature,
) -> Result<ProfileIntegrals, ProfileError> {
    let (v2, v3) = (tp.v2, tp.v3);
    let half = 0.5 * (v3 - v2);
    let n = (PI / quad.delta_omega).ceil().max(8.0) as usize;
    let h = PI / n as f64;
    let mut acc = [0.0; 4];
    let mut add = |weight: f64, v: f64, g: f64, ab: f64, omega: f64| -> Result<(), ProfileError> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(ProfileError::BadQuadrature { omega, g });
        }
        let k = model.cap(v);
        let period = (k / (2.0 * g)).sqrt();
        acc[0] += weight * period;
        acc[1] += weight * (2.0 * k * g).sqrt() * ab;
        acc[2] += weight * v * period;
        acc[3] += weight * 0.5 * v * v * period;
        Ok(())
    };
    let dw = |v: f64| model.potential_unchecked(v, q.lambda, q.c).dw;
    // ∫ W′ over [x, y] by Simpson: exact for cubic W, and free of the
    // cancellation in μ − W(v) when v is close to a turning point
    let simpson = |x: f64, y: f64| (y - x) / 6.0 * (dw(x) + 4.0 * dw(0.5 * (x + y)) + dw(y));
    let near = ENDPOINT_FRACTION * (v3 - v2);
    let node = |omega: f64| {
        // v − v2 and v3 − v without cancellation near the ends
        let a = 2.0 * half * ((omega + FRAC_PI_2) * 0.5).sin().powi(2);
        let b = 2.0 * half * ((FRAC_PI_2 - omega) * 0.5).sin().powi(2);
        let v = if omega < 0.0 { v2 + a } else { v3 - b };
        let gap = if a < near {
            -simpson(v2, v)
        } else if b < near {
            simpson(v, v3)
        } else {
            q.mu - model.potential_unchecked(v, q.lambda, q.c).w
        };
        (v, gap / (a * b), a * b)
    };
    match quad.rule {
        Rule::Midpoint => {
            for k in 0..n {
                let omega = -FRAC_PI_2 + (k as f64 + 0.5) * h;
                let (v, g, ab) = node(omega);
                add(h, v, g, ab, omega)?;
            }
        }
        Rule::Trapezoid => {
            let dw2 = model.potential_unchecked(v2, q.lambda, q.c).dw;
            let dw3 = model.potential_unchecked(v3, q.lambda, q.c).dw;
            add(0.5 * h, v2, -dw2 / (v3 - v2), 0.0, -FRAC_PI_2)?;
            add(0.5 * h, v3, dw3 / (v3 - v2), 0.0, FRAC_PI_2)?;
            for k in 1..n {
                let omega = -FRAC_PI_2 + k as f64 * h;
                let (v, g, ab) = node(omega);
                add(h, v, g, ab, omega)?;
            }
        }
    }
    Ok(ProfileIntegrals {
        period: 2.0 * acc[0],
        action: 2.0 * acc[1],
        mean: 2.0 * acc[2],
        half_square: 2.0 * acc[3],
    })
}

/// Samples of one period of the profile, starting at the trough.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSamples {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
    pub vxx: Vec<f64>,
    pub drift: f64,
    pub period: f64,
    pub params: WaveParamsQ,
}

fn profile_accel(model: &NonlinearModel, q: &WaveParamsQ, v: f64, vx: f64) -> f64 {
    let dw = model.potential_unchecked(v, q.lambda, q.c).dw;
    let [k, dk, _] = model.cap3(v);
    (-dw - 0.5 * dk * vx * vx) / k
}

pub fn reconstruct_profile(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    tp: &TurningPoints,
    period: f64,
    n_steps: usize,
) -> Result<ProfileSamples, ProfileError> {
    let n = n_steps.max(256);
    let h = period / n as f64;
    let acc = |x: f64, v: f64, vx: f64| -> Result<f64, ProfileError> {
        if !model.contains(v) {
            return Err(ProfileError::LeftDomain { x });
        }
        Ok(profile_accel(model, q, v, vx))
    };
    let energy = |v: f64, vx: f64| {
        0.5 * model.cap(v) * vx * vx + model.potential_unchecked(v, q.lambda, q.c).w - q.mu
    };
    let mut s = ProfileSamples {
        x: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        vx: Vec::with_capacity(n + 1),
        vxx: Vec::with_capacity(n + 1),
        drift: 0.0,
        period,
        params: *q,
    };
    let (mut v, mut y) = (tp.v2, 0.0);
    for k in 0..=n {
        let x = k as f64 * h;
        let a = acc(x, v, y)?;
        s.x.push(x);
        s.v.push(v);
        s.vx.push(y);
        s.vxx.push(a);
        s.drift = s.drift.max(energy(v, y).abs());
        if k == n {
            break;
        }
        let (k1v, k1y) = (y, a);
        let (k2v, k2y) = (y + 0.5 * h * k1y, acc(x, v + 0.5 * h * k1v, y + 0.5 * h * k1y)?);
        let (k3v, k3y) = (y + 0.5 * h * k2y, acc(x, v + 0.5 * h * k2v, y + 0.5 * h * k2y)?);
        let (k4v, k4y) = (y + h * k3y, acc(x, v + h * k3v, y + h * k3y)?);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    }
    let limit = 1e-6 * (q.mu.abs() + 1.0);
    if s.drift > limit {
        return Err(ProfileError::Drift { drift: s.drift, limit });
    }
    Ok(s)
}

impl ProfileSamples {
    pub fn step(&self) -> f64 {
        self.period / (self.x.len() - 1) as f64
    }

    /// (v̄, v̄ₓ, v̄ₓₓ) at x by cubic Hermite interpolation of the samples, with
    /// v̄ₓₓ recomputed from the profile equation.
    pub fn eval(&self, model: &NonlinearModel, x: f64) -> Result<(f64, f64, f64), ProfileError> {
        let n = self.x.len() - 1;
        let h = self.step();
        if !(x >= -1e-12 * self.period && x <= self.period * (1.0 + 1e-12)) {
            return Err(ProfileError::Interpolation { x, period: self.period });
        }
        let r = (x / h).clamp(0.0, n as f64);
        let k = (r.floor() as usize).min(n - 1);
        let t = r - k as f64;
        if t == 0.0 {
            return Ok((self.v[k], self.vx[k], self.vxx[k]));
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let (h00, h10, h01, h11) = (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, 3.0 * t2 - 2.0 * t3, t3 - t2);
        let v = h00 * self.v[k] + h10 * h * self.vx[k] + h01 * self.v[k + 1] + h11 * h * self.vx[k + 1];
        let vx = h00 * self.vx[k] + h10 * h * self.vxx[k] + h01 * self.vx[k + 1] + h11 * h * self.vxx[k + 1];
        Ok((v, vx, profile_accel(model, &self.params, v, vx)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_builtin, ModelOptions};
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn model(name: &str) -> NonlinearModel {
        make_builtin(name, ModelOptions::default()).unwrap()
    }

    fn kdv_center() -> f64 {
        (60.0 + (3600.0_f64 + 720.0).sqrt()) / 6.0
    }

    fn kdv_level(offset: f64) -> WaveParamsQ {
        let m = model("kdv3");
        let w0 = m.potential(kdv_center(), -60.0, 60.0).unwrap().w;
        WaveParamsQ { mu: w0 + offset, lambda: -60.0, c: 60.0 }
    }

    #[test]
    fn ek_mapping_examples() {
        let m = ek_to_qkdv(&WaveParamsEK { mu: -2.5, lambda: 2.0, j: 1.0, sigma: 0.0 });
        assert_eq!(m, WaveParamsQ { mu: 2.0, lambda: 2.5, c: -1.0 });
        let z = ek_to_qkdv(&WaveParamsEK { mu: 0.0, lambda: 0.0, j: 0.0, sigma: 0.0 });
        assert_eq!((z.mu, z.lambda, z.c.abs()), (0.0, 0.0, 0.0));
        let b = ek_to_qkdv(&WaveParamsEK { mu: -2.0, lambda: 1.0, j: -0.1, sigma: 0.0 });
        assert_eq!((b.mu, b.lambda), (1.0, 2.0));
        assert!((b.c + 0.01).abs() < 1e-17);
    }

    #[test]
    fn synthetic_turning_points_and_integrals() {
        let m = model("synthetic-quadratic");
        let q = WaveParamsQ { mu: 1.0, lambda: 0.0, c: -2.0 };
        let tp = find_turning_points(&m, &q, None).unwrap();
        assert!((tp.v2 + 1.0).abs() < 1e-14 && (tp.v3 - 1.0).abs() < 1e-14);
        assert!(tp.v0.abs() < 1e-14);
        for rule in [Rule::Midpoint, Rule::Trapezoid] {
            let pi = profile_integrals(&m, &q, &tp, &Quadrature { delta_omega: 1e-4, rule }).unwrap();
            assert!((pi.period - PI * SQRT_2).abs() < 1e-10);
            assert!((pi.action - PI * SQRT_2).abs() < 1e-10);
            assert!(pi.mean.abs() < 1e-10);
        }
    }

    #[test]
    fn kdv_turning_points_match_bisection_oracle() {
        let m = model("kdv3");
        let q = kdv_level(100.0);
        let tp = find_turning_points(&m, &q, None).unwrap();
        assert!((tp.v0 - kdv_center()).abs() < 1e-10);
        let g = |v: f64| v * v * v - 30.0 * v * v - 60.0 * v - q.mu;
        let bisect = |mut a: f64, mut b: f64| {
            while (b - a).abs() > 1e-12 {
                let m = 0.5 * (a + b);
                if (g(m) > 0.0) == (g(a) > 0.0) { a = m } else { b = m }
            }
            0.5 * (a + b)
        };
        let saddle = (60.0 - (4320.0_f64).sqrt()) / 6.0;
        assert!((tp.v2 - bisect(saddle, tp.v0)).abs() < 1e-10);
        assert!((tp.v3 - bisect(tp.v0, 100.0)).abs() < 1e-10);
        assert!(tp.v2 < tp.v0 && tp.v0 < tp.v3);
        assert!(tp.residual2 <= 1e-10 && tp.residual3 <= 1e-10);
        assert_eq!(tp.limit, LimitZone::None);
    }

    #[test]
    fn kdv_errors() {
        let m = model("kdv3");
        assert!(matches!(find_turning_points(&m, &kdv_level(-1.0), None), Err(ProfileError::NoOscillation { .. })));
        assert!(matches!(find_turning_points(&m, &kdv_level(1e5), None), Err(ProfileError::AboveBarrier { .. })));
        let q = WaveParamsQ { mu: 0.0, lambda: 0.0, c: 0.0 };
        // W = v³ has no center
        assert!(matches!(find_turning_points(&m, &q, None), Err(ProfileError::NoWell)));
    }

    #[test]
    fn kdv_period_grows_toward_soliton() {
        let m = model("kdv3");
        let saddle = (60.0 - (4320.0_f64).sqrt()) / 6.0;
        let ws = m.potential(saddle, -60.0, 60.0).unwrap().w;
        let w0 = kdv_level(0.0).mu;
        let mut last = 0.0;
        for s in [0.5, 0.9, 0.99, 0.999, 0.9999] {
            let q = WaveParamsQ { mu: w0 + s * (ws - w0), lambda: -60.0, c: 60.0 };
            let tp = find_turning_points(&m, &q, None).unwrap();
            let pi = profile_integrals(&m, &q, &tp, &Quadrature::default()).unwrap();
            assert!(pi.period > last);
            last = pi.period;
        }
    }

    #[test]
    fn halving_delta_omega_is_stable() {
        let m = model("nls-capillarity");
        let q = WaveParamsQ { mu: -2.5, lambda: -2.5, c: -1.0 };
        let tp = find_turning_points(&m, &q, None).unwrap();
        let a = profile_integrals(&m, &q, &tp, &Quadrature::default()).unwrap();
        let b = profile_integrals(&m, &q, &tp, &Quadrature { delta_omega: 5e-5, rule: Rule::Midpoint }).unwrap();
        assert!(((a.period - b.period) / a.period).abs() <= 1e-6);
        assert!(((a.action - b.action) / a.action).abs() <= 1e-6);
    }

    #[test]
    fn synthetic_profile_is_cosine() {
        let m = model("synthetic-quadratic");
        for mu in [1.0, 2.5] {
            let q = WaveParamsQ { mu, lambda: 0.0, c: -2.0 };
            let tp = find_turning_points(&m, &q, None).unwrap();
            let s = reconstruct_profile(&m, &q, &tp, PI * SQRT_2, 4096).unwrap();
            let err = s
                .x
                .iter()
                .zip(&s.v)
                .map(|(x, v)| (v + mu.sqrt() * (SQRT_2 * x).cos()).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-6, "sup error {err}");
            assert!(s.drift <= 1e-8 * (mu + 1.0));
        }
    }

    #[test]
    fn kdv_profile_properties() {
        let m = model("kdv3");
        let q = kdv_level(2000.0);
        let tp = find_turning_points(&m, &q, None).unwrap();
        let pi = profile_integrals(&m, &q, &tp, &Quadrature::default()).unwrap();
        let s = reconstruct_profile(&m, &q, &tp, pi.period, 4096).unwrap();
        let n = s.v.len() - 1;
        assert!((s.v[n] - tp.v2).abs() <= 1e-6 * (tp.v3 - tp.v2));
        assert!(s.vx[n].abs() <= 1e-6 * s.vx.iter().fold(0.0_f64, |a, b| a.max(b.abs())));
        assert!((s.v[n / 2] - tp.v3).abs() <= 1e-4 * (tp.v3 - tp.v2));
        assert!(s.vx[1..n / 2].iter().all(|&d| d > 0.0));
        assert!(s.drift <= 1e-8 * (q.mu.abs() + 1.0));
        let h = s.step();
        let trap: f64 = s.v.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        assert!(((trap - pi.mean) / pi.mean).abs() <= 1e-4);
        let (v, vx, _) = s.eval(&m, 0.37 * pi.period).unwrap();
        let e = 0.5 * vx * vx + m.potential(v, q.lambda, q.c).unwrap().w - q.mu;
        assert!(e.abs() < 1e-6 * q.mu.abs());
        assert!(s.eval(&m, 2.0 * pi.period).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cauchy_schwarz_and_positivity(s in 0.02f64..0.98, lambda in -4.0f64..-2.2) {
            let m = model("nls-capillarity");
            let well = find_well(&m, lambda, -1.0, None).unwrap();
            let q = WaveParamsQ { mu: well.w0 + s * (well.top() - well.w0), lambda, c: -1.0 };
            let tp = find_turning_points(&m, &q, None).unwrap();
            let pi = profile_integrals(&m, &q, &tp, &Quadrature { delta_omega: 1e-3, rule: Rule::Midpoint }).unwrap();
            prop_assert!(pi.period > 0.0 && pi.action > 0.0);
            prop_assert!(pi.period * 2.0 * pi.half_square - pi.mean * pi.mean > 0.0);
        }
    }
}
