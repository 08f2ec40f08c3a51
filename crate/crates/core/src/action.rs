//! Value, gradient and Hessian of the abbreviated action θ(μ, λ, c) and of the
//! Euler–Korteweg action Θ(μ, λ, j, σ) = θ(λ − ½σ², jσ − μ, −j²).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat};
use crate::models::NonlinearModel;
use crate::profile::{
    ek_to_qkdv, find_turning_points, profile_integrals, LimitZone, ProfileError, ProfileIntegrals,
    Quadrature, TurningPoints, WaveParamsEK, WaveParamsQ,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("stencil point {sign}{variable} left the wave family: {source}")]
    Stencil {
        variable: &'static str,
        sign: char,
        source: ProfileError,
    },
    #[error("eta needs j != 0")]
    ZeroFlux,
    #[error("2 theta_c theta_mu - theta_lambda^2 = {0:e} is not positive")]
    CauchySchwarz(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepMode {
    /// Step Δν·max(1, |parameter|).
    Relative,
    /// Step Δν.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HessianMethod {
    /// Central differences of the quadrature gradient.
    GradientFd,
    /// Second differences of θ on the 3×3 stencil of each variable pair.
    SecondDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EkSource {
    ChainRule,
    DirectFd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numerics {
    pub newton_tol: f64,
    pub quad: Quadrature,
    pub delta_nu: f64,
    pub step_mode: StepMode,
    pub hessian: HessianMethod,
    pub ek_source: EkSource,
    pub rk4_steps: usize,
    pub evans_steps: usize,
    pub r_max: Option<f64>,
    pub n_grid: usize,
    pub sign_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            newton_tol: 1e-10,
            quad: Quadrature::default(),
            delta_nu: 1e-4,
            step_mode: StepMode::Relative,
            hessian: HessianMethod::GradientFd,
            ek_source: EkSource::ChainRule,
            rk4_steps: 4096,
            evans_steps: 2048,
            r_max: None,
            n_grid: 120,
            sign_tol: 1e-6,
        }
    }
}

impl Numerics {
    pub fn step(&self, x: f64) -> f64 {
        match self.step_mode {
            StepMode::Relative => self.delta_nu * x.abs().max(1.0),
            StepMode::Absolute => self.delta_nu,
        }
    }
}

/// One solved point of the wave family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub params: WaveParamsQ,
    pub tp: TurningPoints,
    pub integrals: ProfileIntegrals,
}

impl ThetaPoint {
    pub fn value(&self) -> f64 {
        self.integrals.action
    }

    /// (θ_μ, θ_λ, θ_c) = (Υ, −∫v̄, ∫½v̄²).
    pub fn grad(&self) -> [f64; 3] {
        [self.integrals.period, -self.integrals.mean, self.integrals.half_square]
    }
}

pub fn theta_point(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    numerics: &Numerics,
    hint: Option<f64>,
) -> Result<ThetaPoint, ProfileError> {
    let tp = find_turning_points(model, q, hint)?;
    let integrals = profile_integrals(model, q, &tp, &numerics.quad)?;
    Ok(ThetaPoint { params: *q, tp, integrals })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionJet3 {
    pub params: WaveParamsQ,
    pub value: f64,
    /// Ordering (μ, λ, c).
    pub grad: [f64; 3],
    pub hess: Mat<3>,
    pub asym_residual: f64,
    pub fd_grad: [f64; 3],
    pub fd_grad_residual: f64,
    pub steps: [f64; 3],
    pub limit_zone: LimitZone,
    pub noise_warning: bool,
    pub point: ThetaPoint,
}

impl ActionJet3 {
    /// A jet from given derivatives, for algebra on synthetic inputs.
    pub fn from_parts(params: WaveParamsQ, value: f64, grad: [f64; 3], hess: Mat<3>) -> Self {
        let tp = TurningPoints {
            v2: f64::NAN,
            v3: f64::NAN,
            v0: f64::NAN,
            w0: f64::NAN,
            residual2: 0.0,
            residual3: 0.0,
            limit: LimitZone::None,
        };
        let integrals = ProfileIntegrals { period: grad[0], action: value, mean: -grad[1], half_square: grad[2] };
        ActionJet3 {
            params,
            value,
            grad,
            hess,
            asym_residual: 0.0,
            fd_grad: grad,
            fd_grad_residual: 0.0,
            steps: [0.0; 3],
            limit_zone: LimitZone::None,
            noise_warning: false,
            point: ThetaPoint { params, tp, integrals },
        }
    }
}

impl ActionJet4 {
    /// Chain-rule jet over a given qKdV jet.
    pub fn from_jet3(jet3: ActionJet3, j: f64, sigma: f64, mu: f64) -> Self {
        let q = jet3.params;
        let params = WaveParamsEK { mu, lambda: q.mu + 0.5 * sigma * sigma, j, sigma };
        ActionJet4 {
            params,
            value: jet3.value,
            grad: chain_rule_gradient(&jet3.grad, j, sigma),
            hess: chain_rule_hessian(&jet3.grad, &jet3.hess, j, sigma),
            source: EkSource::ChainRule,
            underlying: jet3,
            direct_fd_diff: None,
        }
    }
}

pub const QKDV_VARS: [&str; 3] = ["mu", "lambda", "c"];
pub const EK_VARS: [&str; 4] = ["mu", "lambda", "j", "sigma"];

fn shifted(q: &WaveParamsQ, i: usize, h: f64) -> WaveParamsQ {
    let mut a = [q.mu, q.lambda, q.c];
    a[i] += h;
    WaveParamsQ { mu: a[0], lambda: a[1], c: a[2] }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn worse(a: LimitZone, b: LimitZone) -> LimitZone {
    if a == LimitZone::None {
        b
    } else {
        a
    }
}

pub fn action_jet_qkdv(
    model: &NonlinearModel,
    q: &WaveParamsQ,
    numerics: &Numerics,
    hint: Option<f64>,
) -> Result<ActionJet3, ActionError> {
    let base = theta_point(model, q, numerics, hint)?;
    let hint = Some(base.tp.v0);
    let base_vals = [q.mu, q.lambda, q.c];
    let steps = base_vals.map(|x| numerics.step(x));
    let mut limit = base.tp.limit;
    let mut eval = |i: usize, s: f64, extra: Option<(usize, f64)>| -> Result<ThetaPoint, ActionError> {
        let mut p = shifted(q, i, s * steps[i]);
        if let Some((k, sk)) = extra {
            p = shifted(&p, k, sk * steps[k]);
        }
        let pt = theta_point(model, &p, numerics, hint).map_err(|e| ActionError::Stencil {
            variable: QKDV_VARS[i],
            sign: if s > 0.0 { '+' } else { '-' },
            source: e,
        })?;
        limit = worse(limit, pt.tp.limit);
        Ok(pt)
    };
    let mut plus = Vec::with_capacity(3);
    let mut minus = Vec::with_capacity(3);
    for i in 0..3 {
        plus.push(eval(i, 1.0, None)?);
        minus.push(eval(i, -1.0, None)?);
    }
    let grad = base.grad();
    // Richardson-extrapolated central differences of θ alone, on a step a
    // tenth of the Hessian step
    let mut fd_grad = [0.0; 3];
    for i in 0..3 {
        let d1 = (eval(i, 0.1, None)?.value() - eval(i, -0.1, None)?.value()) / (0.2 * steps[i]);
        let d2 = (eval(i, 0.05, None)?.value() - eval(i, -0.05, None)?.value()) / (0.1 * steps[i]);
        fd_grad[i] = (4.0 * d2 - d1) / 3.0;
    }
    let mut raw = [[0.0; 3]; 3];
    match numerics.hessian {
        HessianMethod::GradientFd => {
            for k in 0..3 {
                let (gp, gm) = (plus[k].grad(), minus[k].grad());
                for i in 0..3 {
                    raw[i][k] = (gp[i] - gm[i]) / (2.0 * steps[k]);
                }
            }
        }
        HessianMethod::SecondDifference => {
            for i in 0..3 {
                raw[i][i] = (plus[i].value() - 2.0 * base.value() + minus[i].value()) / (steps[i] * steps[i]);
                for k in i + 1..3 {
                    let mut corner = |si: f64, sk: f64| eval(i, si, Some((k, sk))).map(|p| p.value());
                    let v = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?;
                    raw[i][k] = v / (4.0 * steps[i] * steps[k]);
                    raw[k][i] = raw[i][k];
                }
            }
        }
    }
    let (hess, asym_residual) = linalg::symmetrize(&raw);
    // quadrature noise is near 1e-12 relative; flag entries within 10x of it
    let noise_warning = (0..3).any(|i| {
        (0..3).any(|k| {
            let noise = match numerics.hessian {
                HessianMethod::GradientFd => 1e-12 * grad[i].abs() / steps[k],
                HessianMethod::SecondDifference => 1e-12 * base.value().abs() / (steps[i] * steps[k]),
            };
            hess[i][k].abs() < 10.0 * noise
        })
    });
    Ok(ActionJet3 {
        params: *q,
        value: base.value(),
        grad,
        hess,
        asym_residual,
        fd_grad,
        fd_grad_residual: rel_diff(&grad, &fd_grad),
        steps,
        limit_zone: limit,
        noise_warning,
        point: base,
    })
}

/// ∇Θ in (μ, λ, j, σ) from ∇θ at the mapped point.
pub fn chain_rule_gradient(g: &[f64; 3], j: f64, sigma: f64) -> [f64; 4] {
    [-g[1], g[0], sigma * g[1] - 2.0 * j * g[2], -sigma * g[0] + j * g[1]]
}

/// Hess Θ = Jᵀ (Hess θ) J + Σ θ_k ∇²φ_k for φ = (λ − ½σ², jσ − μ, −j²).
pub fn chain_rule_hessian(g: &[f64; 3], h: &Mat<3>, j: f64, sigma: f64) -> Mat<4> {
    let jac = [
        [0.0, 1.0, 0.0, -sigma],
        [-1.0, 0.0, sigma, j],
        [0.0, 0.0, -2.0 * j, 0.0],
    ];
    let mut out = [[0.0; 4]; 4];
    for p in 0..4 {
        for r in 0..4 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += jac[a][p] * h[a][b] * jac[b][r];
                }
            }
            out[p][r] = s;
        }
    }
    for p in 0..4 {
        for r in 0..p {
            out[p][r] = out[r][p];
        }
    }
    out[3][3] -= g[0];
    out[2][3] += g[1];
    out[3][2] += g[1];
    out[2][2] -= 2.0 * g[2];
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionJet4 {
    pub params: WaveParamsEK,
    pub value: f64,
    /// Ordering (μ, λ, j, σ).
    pub grad: [f64; 4],
    pub hess: Mat<4>,
    pub source: EkSource,
    pub underlying: ActionJet3,
    /// Entrywise relative gap between chain-rule and direct Hessians, when both exist.
    pub direct_fd_diff: Option<f64>,
}

pub fn action_jet_ek(
    model: &NonlinearModel,
    p: &WaveParamsEK,
    numerics: &Numerics,
    hint: Option<f64>,
) -> Result<ActionJet4, ActionError> {
    let q = ek_to_qkdv(p);
    let jet3 = action_jet_qkdv(model, &q, numerics, hint)?;
    let grad = chain_rule_gradient(&jet3.grad, p.j, p.sigma);
    let chain = chain_rule_hessian(&jet3.grad, &jet3.hess, p.j, p.sigma);
    let (hess, diff) = match numerics.ek_source {
        EkSource::ChainRule => (chain, None),
        EkSource::DirectFd => {
            let direct = direct_fd_hessian_ek(model, p, numerics, Some(jet3.point.tp.v0))?;
            let scale = linalg::frobenius(&chain);
            let gap = (0..4)
                .flat_map(|i| (0..4).map(move |k| (i, k)))
                .map(|(i, k)| (direct[i][k] - chain[i][k]).abs() / chain[i][k].abs().max(1e-8 * scale))
                .fold(0.0, f64::max);
            (direct, Some(gap))
        }
    };
    Ok(ActionJet4 {
        params: *p,
        value: jet3.value,
        grad,
        hess,
        source: numerics.ek_source,
        underlying: jet3,
        direct_fd_diff: diff,
    })
}

/// Central differences of ∇Θ in the four practical variables.
pub fn direct_fd_hessian_ek(
    model: &NonlinearModel,
    p: &WaveParamsEK,
    numerics: &Numerics,
    hint: Option<f64>,
) -> Result<Mat<4>, ActionError> {
    let x = [p.mu, p.lambda, p.j, p.sigma];
    let mut raw = [[0.0; 4]; 4];
    for k in 0..4 {
        let h = numerics.step(x[k]);
        let mut grads = [[0.0; 4]; 2];
        for (slot, s) in [1.0, -1.0].into_iter().enumerate() {
            let mut y = x;
            y[k] += s * h;
            let pk = WaveParamsEK { mu: y[0], lambda: y[1], j: y[2], sigma: y[3] };
            let pt = theta_point(model, &ek_to_qkdv(&pk), numerics, hint).map_err(|e| ActionError::Stencil {
                variable: EK_VARS[k],
                sign: if s > 0.0 { '+' } else { '-' },
                source: e,
            })?;
            grads[slot] = chain_rule_gradient(&pt.grad(), pk.j, pk.sigma);
        }
        for i in 0..4 {
            raw[i][k] = (grads[0][i] - grads[1][i]) / (2.0 * h);
        }
    }
    Ok(linalg::symmetrize(&raw).0)
}

/// η = (2θ_cθ_μ − θ_λ²)/(4j²θ_μ).
pub fn eta(jet3: &ActionJet3, j: f64) -> Result<f64, ActionError> {
    eta_from_grad(&jet3.grad, j)
}

pub fn eta_from_grad(g: &[f64; 3], j: f64) -> Result<f64, ActionError> {
    if j == 0.0 {
        return Err(ActionError::ZeroFlux);
    }
    let num = 2.0 * g[2] * g[0] - g[1] * g[1];
    if !(num > 0.0) || !(g[0] > 0.0) {
        return Err(ActionError::CauchySchwarz(num));
    }
    Ok(num / (4.0 * j * j * g[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_builtin, ModelOptions};
    use crate::profile::find_well;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn model(name: &str) -> NonlinearModel {
        make_builtin(name, ModelOptions::default()).unwrap()
    }

    /// Closed-form action of the harmonic well W = −½cv² + λv.
    fn harmonic_theta(x: [f64; 3]) -> f64 {
        let [mu, lambda, c] = x;
        2.0 * PI * (mu - lambda * lambda / (2.0 * c)) / (-c).sqrt()
    }

    fn richardson(f: impl Fn([f64; 3]) -> f64, x: [f64; 3], i: usize, k: usize) -> f64 {
        let d = |h: f64| {
            let at = |si: f64, sk: f64| {
                let mut y = x;
                y[i] += si * h;
                y[k] += sk * h;
                f(y)
            };
            if i == k {
                (at(1.0, 0.0) - 2.0 * f(x) + at(-1.0, 0.0)) / (h * h)
            } else {
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
            }
        };
        (4.0 * d(5e-4) - d(1e-3)) / 3.0
    }

    #[test]
    fn synthetic_jet_matches_closed_form() {
        let m = model("synthetic-quadratic");
        let x = [1.3, 0.4, -2.0];
        let q = WaveParamsQ { mu: x[0], lambda: x[1], c: x[2] };
        let jet = action_jet_qkdv(&m, &q, &Numerics::default(), None).unwrap();
        assert!((jet.value - harmonic_theta(x)).abs() < 1e-10);
        assert!((jet.grad[0] - PI * 2f64.sqrt()).abs() < 1e-10);
        for i in 0..3 {
            for k in 0..3 {
                let exact = richardson(harmonic_theta, x, i, k);
                assert!((jet.hess[i][k] - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{i}{k}");
            }
        }
        assert!(jet.hess[0][0].abs() < 1e-6, "{}", jet.hess[0][0]);
        assert!(jet.noise_warning);
    }

    #[test]
    fn second_difference_option_agrees() {
        let m = model("synthetic-quadratic");
        let q = WaveParamsQ { mu: 1.3, lambda: 0.4, c: -2.0 };
        let n = Numerics { hessian: HessianMethod::SecondDifference, delta_nu: 1e-3, ..Numerics::default() };
        let a = action_jet_qkdv(&m, &q, &n, None).unwrap();
        let b = action_jet_qkdv(&m, &q, &Numerics::default(), None).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert!((a.hess[i][k] - b.hess[i][k]).abs() < 1e-5 * (1.0 + b.hess[i][k].abs()));
            }
        }
    }

    #[test]
    fn kdv_jet_gradients_and_minor_signs() {
        let m = model("kdv3");
        let well = find_well(&m, -60.0, 60.0, None).unwrap();
        let q = WaveParamsQ { mu: 0.5 * (well.w0 + well.top()), lambda: -60.0, c: 60.0 };
        let jet = action_jet_qkdv(&m, &q, &Numerics::default(), None).unwrap();
        assert!(jet.fd_grad_residual <= 1e-5);
        assert!(jet.asym_residual <= 1e-3);
        let mm = linalg::leading_minors(&jet.hess, &[0, 1, 2]);
        assert!(mm[0] > 0.0 && mm[1] < 0.0 && mm[2] < 0.0, "{mm:?}");
    }

    #[test]
    fn stencil_failure_names_variable() {
        let m = model("kdv3");
        let well = find_well(&m, -60.0, 60.0, None).unwrap();
        let q = WaveParamsQ { mu: well.w0 + 1e-3, lambda: -60.0, c: 60.0 };
        let n = Numerics { delta_nu: 0.1, step_mode: StepMode::Absolute, ..Numerics::default() };
        let err = action_jet_qkdv(&m, &q, &n, None).unwrap_err();
        assert!(matches!(err, ActionError::Stencil { variable: "mu", sign: '-', .. }), "{err}");
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_from_grad(&[1.0, 0.0, 1.0], 1.0).unwrap(), 0.5);
        assert!(matches!(eta_from_grad(&[2.0, 2.0, 1.0], 1.0), Err(ActionError::CauchySchwarz(_))));
        assert!(matches!(eta_from_grad(&[1.0, 0.0, 1.0], 0.0), Err(ActionError::ZeroFlux)));
    }

    #[test]
    fn ek_jet_orderings_and_direct_fd() {
        let m = model("nls-capillarity");
        let p = WaveParamsEK { mu: 2.5, lambda: -2.6, j: 1.0, sigma: 0.0 };
        let n = Numerics { ek_source: EkSource::DirectFd, ..Numerics::default() };
        let jet = action_jet_ek(&m, &p, &n, None).unwrap();
        let chain = chain_rule_hessian(&jet.underlying.grad, &jet.underlying.hess, p.j, p.sigma);
        assert_eq!(chain[0][0], jet.underlying.hess[1][1]);
        assert_eq!(chain[1][1], jet.underlying.hess[0][0]);
        assert!(jet.direct_fd_diff.unwrap() <= 1e-3, "{:?}", jet.direct_fd_diff);
        let q = ek_to_qkdv(&p);
        let direct = theta_point(&m, &q, &n, None).unwrap();
        assert!(((jet.value - direct.value()) / jet.value).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn chain_rule_matches_explicit_entries(
            g in proptest::array::uniform3(-3.0f64..3.0),
            hv in proptest::array::uniform6(-3.0f64..3.0),
            j in -2.0f64..2.0,
            s in -2.0f64..2.0,
        ) {
            let h = [[hv[0], hv[1], hv[2]], [hv[1], hv[3], hv[4]], [hv[2], hv[4], hv[5]]];
            let (tm, tl, tc) = (g[0], g[1], g[2]);
            let (mm, ml, mc, ll, lc, cc) = (h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]);
            let e = [
                [ll, -ml, -s * ll + 2.0 * j * lc, -j * ll + s * ml],
                [0.0, mm, -2.0 * j * mc + s * ml, -s * mm + j * ml],
                [0.0, 0.0, 4.0 * j * j * cc + s * s * ll - 4.0 * j * s * lc - 2.0 * tc,
                 j * s * ll - 2.0 * j * j * lc + 2.0 * j * s * mc - s * s * ml + tl],
                [0.0, 0.0, 0.0, j * j * ll + s * s * mm - 2.0 * j * s * ml - tm],
            ];
            let got = chain_rule_hessian(&g, &h, j, s);
            for a in 0..4 {
                for b in a..4 {
                    prop_assert!((got[a][b] - e[a][b]).abs() < 1e-12 * (1.0 + e[a][b].abs()));
                    prop_assert_eq!(got[a][b], got[b][a]);
                }
            }
        }
    }
}
