//! Signatures, leading minors, constraint matrices, verdicts and the
//! algebraic identities tying the qKdV and Euler–Korteweg Hessians together.

use serde::Serialize;
use thiserror::Error;

use crate::action::{eta_from_grad, ActionJet3, ActionJet4};
use crate::linalg::{self, Mat};
use crate::profile::LimitZone;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("matrix asymmetric beyond threshold ({0:e})")]
    Asymmetric(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureMethod {
    Sylvester,
    Eigen,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureResult {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    pub method: SignatureMethod,
    /// Eigenvalues of the diagonally equilibrated matrix (same inertia).
    pub eigenvalues: Vec<f64>,
    pub tol: f64,
    /// `Some(false)` if the minors were decisive but disagreed with the eigenvalues.
    pub sylvester_agrees: Option<bool>,
}

/// Tolerance scale for the k-th leading minor: product of the full row norms
/// of the rows involved (a Hadamard bound).
fn minor_scales<const N: usize>(h: &Mat<N>, order: &[usize; N]) -> [f64; N] {
    let rn = linalg::row_norms(h);
    let mut out = [0.0; N];
    let mut acc = 1.0;
    for k in 0..N {
        acc *= rn[order[k]];
        out[k] = acc;
    }
    out
}

/// Negative/zero/positive counts. Eigenvalues are taken after the congruence
/// H ↦ SHS with S = diag(1/√max_k|H_ik|), which keeps the inertia but removes
/// the scale disparity between parameters.
pub fn signature<const N: usize>(h: &Mat<N>, tol: f64) -> Result<SignatureResult, StabilityError> {
    let (sym, asym) = linalg::symmetrize(h);
    if asym > 1e-8 {
        return Err(StabilityError::Asymmetric(asym));
    }
    let mut s = [1.0; N];
    for i in 0..N {
        let m = sym[i].iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if m > 0.0 {
            s[i] = 1.0 / m.sqrt();
        }
    }
    let mut eq = sym;
    for i in 0..N {
        for k in 0..N {
            eq[i][k] *= s[i] * s[k];
        }
    }
    let ev = linalg::jacobi_eigenvalues(&eq);
    let scale = ev.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let cut = tol * scale;
    let n_neg = ev.iter().filter(|&&x| x < -cut).count();
    let n_pos = ev.iter().filter(|&&x| x > cut).count();
    let n_zero = N - n_neg - n_pos;
    let order: [usize; N] = std::array::from_fn(|i| i);
    let minors = linalg::leading_minors(&sym, &order);
    let scales = minor_scales(&sym, &order);
    let decisive = scale > 0.0 && minors.iter().zip(&scales).all(|(m, sc)| m.abs() > tol * sc);
    let (method, agrees) = if decisive {
        let n_syl = sign_changes(&minors);
        if n_syl == n_neg && n_zero == 0 {
            (SignatureMethod::Sylvester, Some(true))
        } else {
            (SignatureMethod::Eigen, Some(false))
        }
    } else {
        (SignatureMethod::Eigen, None)
    };
    Ok(SignatureResult {
        n_neg,
        n_zero,
        n_pos,
        method,
        eigenvalues: ev.to_vec(),
        tol,
        sylvester_agrees: agrees,
    })
}

/// Sign changes in (1, m₁, …, m_N).
pub fn sign_changes(minors: &[f64]) -> usize {
    let mut prev = 1.0;
    let mut n = 0;
    for &m in minors {
        if (m < 0.0) != (prev < 0.0) {
            n += 1;
        }
        prev = m;
    }
    n
}

pub fn condition_number<const N: usize>(h: &Mat<N>) -> f64 {
    let ev = linalg::jacobi_eigenvalues(h);
    let max = ev.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    if min < 1e-30 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// C_ik = −(H_pp H_ik − H_ip H_pk)/H_pp over the non-pivot indices.
pub fn pivot_constraint<const N: usize, const M: usize>(h: &Mat<N>, pivot: usize, others: [usize; M]) -> Mat<M> {
    let hp = h[pivot][pivot];
    let mut c = [[0.0; M]; M];
    for (a, &i) in others.iter().enumerate() {
        for (b, &k) in others.iter().enumerate() {
            c[a][b] = -(hp * h[i][k] - h[i][pivot] * h[pivot][k]) / hp;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintMatrices {
    /// Pivot θ_μμ, rows (λ, c).
    pub c_q: Option<Mat<2>>,
    /// Pivot Θ_μμ, rows (λ, j, σ).
    pub c_e: Option<Mat<3>>,
    /// Pivot Θ_λλ, rows (μ, σ, j).
    pub c_l: Option<Mat<3>>,
    pub pivot_q: f64,
    pub pivot_e: Option<f64>,
    pub pivot_l: Option<f64>,
}

pub fn constraint_matrices(h3: &Mat<3>, h4: Option<&Mat<4>>, tol: f64) -> ConstraintMatrices {
    let ok3 = |p: usize| h3[p][p].abs() > tol * linalg::row_norms(h3)[p];
    let c_q = ok3(0).then(|| pivot_constraint(h3, 0, [1, 2]));
    let (c_e, c_l, pe, pl) = match h4 {
        Some(h) => {
            let rn = linalg::row_norms(h);
            let ok = |p: usize| h[p][p].abs() > tol * rn[p];
            (
                ok(0).then(|| pivot_constraint(h, 0, [1, 2, 3])),
                ok(1).then(|| pivot_constraint(h, 1, [0, 3, 2])),
                Some(h[0][0]),
                Some(h[1][1]),
            )
        }
        None => (None, None, None, None),
    };
    ConstraintMatrices { c_q, c_e, c_l, pivot_q: h3[0][0], pivot_e: pe, pivot_l: pl }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spectral {
    Unstable,
    NotExcluded,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orbital {
    Stable,
    NotConcluded,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    #[serde(rename = "(s)")]
    S,
    #[serde(rename = "(s1)")]
    S1,
    #[serde(rename = "(s2)")]
    S2,
    #[serde(rename = "johnson")]
    Johnson,
    #[serde(rename = "(S_L)")]
    SL,
    #[serde(rename = "(S_E)")]
    SE,
}

impl Spectral {
    pub fn as_str(&self) -> &'static str {
        match self {
            Spectral::Unstable => "unstable",
            Spectral::NotExcluded => "not-excluded",
            Spectral::Degenerate => "degenerate",
        }
    }
}

impl Orbital {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orbital::Stable => "stable",
            Orbital::NotConcluded => "not-concluded",
            Orbital::Degenerate => "degenerate",
        }
    }
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::S => "(s)",
            Condition::S1 => "(s1)",
            Condition::S2 => "(s2)",
            Condition::Johnson => "johnson",
            Condition::SL => "(S_L)",
            Condition::SE => "(S_E)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct IdentityResiduals {
    pub det_action_c: Option<f64>,
    pub const_eke: Option<f64>,
    pub const_ekl: Option<f64>,
    pub det_action_action: Option<f64>,
    pub cauchy_schwarz_margin: f64,
    pub eta: Option<f64>,
    pub n_hess_ek: Option<usize>,
    pub n_shifted: Option<usize>,
    pub integer_identity: Option<bool>,
}

impl IdentityResiduals {
    pub fn worst(&self) -> f64 {
        [self.det_action_c, self.const_eke, self.const_ekl, self.det_action_action]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub minors: Vec<f64>,
    pub minor_order: Vec<&'static str>,
    pub n_hess: usize,
    pub signature: SignatureResult,
    pub det: f64,
    pub condition_number: f64,
    pub verdict_spectral: Spectral,
    pub verdict_orbital_qkdv: Option<Orbital>,
    pub verdict_orbital_ekl: Option<Orbital>,
    pub verdict_orbital_eke: Option<Orbital>,
    pub conditions: Vec<Condition>,
    pub stability_index: i64,
    pub inconsistent: bool,
    pub sign_pattern: Option<usize>,
    pub constraint: ConstraintMatrices,
    pub constraint_n_neg: Vec<Option<usize>>,
    pub limit_zone: LimitZone,
    pub residuals: IdentityResiduals,
}

/// Admissible (sign θ_μμ, sign m₂, sign det, n) combinations for a 3×3 Hessian.
pub const SIGN_PATTERNS: [([i8; 3], usize); 8] = [
    ([1, 1, 1], 0),
    ([1, 1, -1], 1),
    ([1, -1, -1], 1),
    ([1, -1, 1], 2),
    ([-1, 1, 1], 2),
    ([-1, 1, -1], 3),
    ([-1, -1, -1], 1),
    ([-1, -1, 1], 2),
];

pub fn sign_pattern(minors: &[f64; 3], n: usize) -> Option<usize> {
    let s = minors.map(|m| if m > 0.0 { 1 } else { -1 });
    SIGN_PATTERNS.iter().position(|(sig, k)| *sig == s && *k == n)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    let s = scale.max(a.abs()).max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Residuals of the determinant identities and the signature identity.
pub fn identity_report(jet3: &ActionJet3, jet4: Option<&ActionJet4>, cm: &ConstraintMatrices, j: Option<f64>, tol: f64) -> IdentityResiduals {
    let (g, h) = (&jet3.grad, &jet3.hess);
    let det3 = linalg::det(h);
    let mut r = IdentityResiduals {
        cauchy_schwarz_margin: (2.0 * g[2] * g[0] - g[1] * g[1]) / (2.0 * g[2] * g[0]).abs(),
        ..Default::default()
    };
    if let Some(c) = &cm.c_q {
        r.det_action_c = Some(rel(h[0][0] * linalg::det(c), det3, 0.0));
    }
    if let (Some(jet4), Some(j)) = (jet4, j) {
        let det4 = linalg::det(&jet4.hess);
        if let (Some(c), Some(p)) = (&cm.c_e, cm.pivot_e) {
            r.const_eke = Some(rel(p * linalg::det(c), -det4, 0.0));
        }
        if let (Some(c), Some(p)) = (&cm.c_l, cm.pivot_l) {
            r.const_ekl = Some(rel(p * linalg::det(c), -det4, 0.0));
        }
        let t1 = (2.0 * g[2] * g[0] - g[1] * g[1]) * (h[0][0] * h[1][1] - h[0][1] * h[1][0]);
        let t2 = 4.0 * j * j * g[0] * det3;
        r.det_action_action = Some(rel(det4, t1 - t2, t1.abs() + t2.abs()));
        if let Ok(eta) = eta_from_grad(g, j) {
            let mut shifted = *h;
            shifted[2][2] -= eta;
            let n4 = signature(&jet4.hess, tol).map(|s| s.n_neg).ok();
            let ns = signature(&shifted, tol).map(|s| s.n_neg).ok();
            r.eta = Some(eta);
            r.n_hess_ek = n4;
            r.n_shifted = ns;
            r.integer_identity = n4.zip(ns).map(|(a, b)| a == 1 + b);
        }
    }
    r
}

pub fn verdict_qkdv(jet3: &ActionJet3, tol: f64) -> StabilityReport {
    let h = &jet3.hess;
    let order = [0, 1, 2];
    let minors = linalg::leading_minors(h, &order);
    let sc = minor_scales(h, &order);
    let sig = signature(h, tol).expect("jet Hessians are symmetrized");
    let n = sig.n_neg;
    let det = minors[2];
    let small = |k: usize| minors[k].abs() <= tol * sc[k];
    let verdict_spectral = if small(2) {
        Spectral::Degenerate
    } else if det > 0.0 {
        Spectral::Unstable
    } else {
        Spectral::NotExcluded
    };
    let orbital = if small(0) || small(2) {
        Orbital::Degenerate
    } else if n == 1 {
        Orbital::Stable
    } else {
        Orbital::NotConcluded
    };
    let mut conditions = Vec::new();
    if orbital == Orbital::Stable {
        conditions.push(Condition::S);
    }
    if !small(0) && !small(1) && !small(2) && det < 0.0 {
        let (m1, m2) = (minors[0], minors[1]);
        if m1 > 0.0 {
            conditions.push(Condition::S1);
        }
        if m1 < 0.0 && m2 < 0.0 {
            conditions.push(Condition::S2);
        }
        if m1 > 0.0 && m2 < 0.0 {
            conditions.push(Condition::Johnson);
        }
    }
    let decisive = (0..3).all(|k| !small(k));
    let inconsistent = decisive && minors.iter().all(|&m| m > 0.0);
    let constraint = constraint_matrices(h, None, tol);
    let cn = vec![constraint.c_q.as_ref().and_then(|c| signature(c, tol).ok()).map(|s| s.n_neg)];
    let residuals = identity_report(jet3, None, &constraint, None, tol);
    StabilityReport {
        minors: minors.to_vec(),
        minor_order: vec!["mu", "lambda", "c"],
        n_hess: n,
        det,
        condition_number: condition_number(h),
        verdict_spectral,
        verdict_orbital_qkdv: Some(orbital),
        verdict_orbital_ekl: None,
        verdict_orbital_eke: None,
        conditions,
        stability_index: n as i64 - 1,
        inconsistent,
        sign_pattern: if decisive { sign_pattern(&minors, n) } else { None },
        constraint,
        constraint_n_neg: cn,
        limit_zone: jet3.limit_zone,
        residuals,
        signature: sig,
    }
}

/// Leading minors of Hess Θ are taken in the order (λ, μ, j, σ).
pub const EK_MINOR_ORDER: [usize; 4] = [1, 0, 2, 3];

pub fn verdict_ek(jet4: &ActionJet4, tol: f64) -> StabilityReport {
    let h = &jet4.hess;
    let minors = linalg::leading_minors(h, &EK_MINOR_ORDER);
    let det = minors[3];
    let rn = linalg::row_norms(h);
    let det_small = det.abs() <= tol * rn.iter().product::<f64>();
    let sig = signature(h, tol).expect("jet Hessians are symmetrized");
    let n = sig.n_neg;
    let verdict_spectral = if det_small {
        Spectral::Degenerate
    } else if det < 0.0 {
        Spectral::Unstable
    } else {
        Spectral::NotExcluded
    };
    let orbital = |pivot: usize| {
        if det_small || h[pivot][pivot].abs() <= tol * rn[pivot] {
            Orbital::Degenerate
        } else if n == 2 {
            Orbital::Stable
        } else {
            Orbital::NotConcluded
        }
    };
    let (ekl, eke) = (orbital(1), orbital(0));
    let mut conditions = Vec::new();
    if ekl == Orbital::Stable {
        conditions.push(Condition::SL);
    }
    if eke == Orbital::Stable {
        conditions.push(Condition::SE);
    }
    let constraint = constraint_matrices(&jet4.underlying.hess, Some(h), tol);
    let cn = vec![
        constraint.c_q.as_ref().and_then(|c| signature(c, tol).ok()).map(|s| s.n_neg),
        constraint.c_e.as_ref().and_then(|c| signature(c, tol).ok()).map(|s| s.n_neg),
        constraint.c_l.as_ref().and_then(|c| signature(c, tol).ok()).map(|s| s.n_neg),
    ];
    let residuals = identity_report(&jet4.underlying, Some(jet4), &constraint, Some(jet4.params.j), tol);
    StabilityReport {
        minors: minors.to_vec(),
        minor_order: vec!["lambda", "mu", "j", "sigma"],
        n_hess: n,
        det,
        condition_number: condition_number(h),
        verdict_spectral,
        verdict_orbital_qkdv: None,
        verdict_orbital_ekl: Some(ekl),
        verdict_orbital_eke: Some(eke),
        conditions,
        stability_index: n as i64 - 2,
        inconsistent: false,
        sign_pattern: None,
        constraint,
        constraint_n_neg: cn,
        limit_zone: jet4.underlying.limit_zone,
        residuals,
        signature: sig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{ActionJet3, ActionJet4};
    use crate::profile::WaveParamsQ;
    use proptest::prelude::*;

    const TOL: f64 = 1e-6;

    fn jet(grad: [f64; 3], hess: Mat<3>) -> ActionJet3 {
        ActionJet3::from_parts(WaveParamsQ { mu: 0.0, lambda: 0.0, c: -1.0 }, 1.0, grad, hess)
    }

    fn sym3(v: [f64; 6]) -> Mat<3> {
        [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]]
    }

    fn sym4(v: &[f64]) -> Mat<4> {
        let mut m = [[0.0; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m[i][j] = v[k];
                m[j][i] = v[k];
                k += 1;
            }
        }
        m
    }

    #[test]
    fn diagonal_and_zero_signatures() {
        let s = signature(&[[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]], TOL).unwrap();
        assert_eq!((s.n_neg, s.n_zero, s.n_pos), (1, 0, 2));
        assert_eq!(s.method, SignatureMethod::Sylvester);
        let z = signature(&[[0.0; 4]; 4], TOL).unwrap();
        assert_eq!((z.n_neg, z.n_zero, z.n_pos), (0, 4, 0));
        assert!(signature(&[[1.0, 2.0], [0.0, 1.0]], TOL).is_err());
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(condition_number(&linalg::identity::<4>()), 1.0);
        let d = [[100.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.01]];
        assert!((condition_number(&d) - 1e4).abs() < 1e-8);
        assert!(condition_number(&[[1.0, 0.0], [0.0, 0.0]]).is_infinite());
    }

    #[test]
    fn identity_hessian_constraint() {
        let cm = constraint_matrices(&linalg::identity::<3>(), None, TOL);
        assert_eq!(cm.c_q.unwrap(), [[-1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn verdict_patterns() {
        // minors (+, −, −)
        let h = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], h), TOL);
        assert_eq!(r.verdict_orbital_qkdv, Some(Orbital::Stable));
        assert_eq!(r.verdict_spectral, Spectral::NotExcluded);
        assert_eq!(r.conditions, vec![Condition::S, Condition::S1, Condition::Johnson]);
        assert_eq!(r.stability_index, 0);
        assert_eq!(r.sign_pattern, Some(2));
        // det > 0 with n = 2
        let h = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
        let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], h), TOL);
        assert_eq!((r.verdict_spectral, r.n_hess), (Spectral::Unstable, 2));
        assert_eq!(r.verdict_orbital_qkdv, Some(Orbital::NotConcluded));
        // isochronous pivot
        let h = [[0.0, 0.0, 1.0], [0.0, 2.0, 0.3], [1.0, 0.3, 0.5]];
        let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], h), TOL);
        assert_eq!(r.verdict_orbital_qkdv, Some(Orbital::Degenerate));
        assert!(r.constraint.c_q.is_none());
        // positive definite is flagged
        let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], linalg::identity()), TOL);
        assert!(r.inconsistent);
        assert_eq!(r.sign_pattern, Some(0));
        // (s2): θ_μμ < 0, m₂ < 0, det < 0
        let h = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], h), TOL);
        assert!(r.conditions.contains(&Condition::S2));
    }

    #[test]
    fn ek_verdict_and_sign_flip() {
        let h3 = [[0.35, -0.2, 0.1], [-0.2, 0.3, 0.05], [0.1, 0.05, -0.4]];
        let j3 = jet([0.56, -0.3, 1.2], h3);
        let j4 = ActionJet4::from_jet3(j3, 1.0, 0.2, 2.5);
        let r = verdict_ek(&j4, TOL);
        let mut flipped = j4.clone();
        for k in 0..4 {
            flipped.hess[1][k] = -flipped.hess[1][k];
            flipped.hess[k][1] = -flipped.hess[k][1];
        }
        let f = verdict_ek(&flipped, TOL);
        assert_eq!(r.n_hess, f.n_hess);
        assert_eq!(r.verdict_spectral, f.verdict_spectral);
        assert_eq!(r.verdict_orbital_ekl, f.verdict_orbital_ekl);
        assert_eq!(r.verdict_orbital_eke, f.verdict_orbital_eke);
        assert_eq!(r.residuals.integer_identity, Some(true));
    }

    proptest! {
        #[test]
        fn congruence_by_signs_keeps_signature(v in proptest::array::uniform10(-5.0f64..5.0), signs in proptest::array::uniform4(proptest::bool::ANY)) {
            let h = sym4(&v);
            let mut s = h;
            for i in 0..4 {
                for k in 0..4 {
                    let si = if signs[i] { -1.0 } else { 1.0 };
                    let sk = if signs[k] { -1.0 } else { 1.0 };
                    s[i][k] *= si * sk;
                }
            }
            let a = signature(&h, TOL).unwrap();
            let b = signature(&s, TOL).unwrap();
            prop_assert_eq!((a.n_neg, a.n_zero, a.n_pos), (b.n_neg, b.n_zero, b.n_pos));
        }

        #[test]
        fn sylvester_agrees_with_eigen(v in proptest::array::uniform10(-5.0f64..5.0)) {
            let h = sym4(&v);
            let s = signature(&h, TOL).unwrap();
            prop_assert_ne!(s.sylvester_agrees, Some(false));
        }

        #[test]
        fn constraint_determinant_identities(v in proptest::array::uniform10(-5.0f64..5.0), w in proptest::array::uniform6(-5.0f64..5.0)) {
            let h = sym4(&v);
            let h3 = sym3(w);
            prop_assume!(h[0][0].abs() > 1e-3 && h[1][1].abs() > 1e-3 && h3[0][0].abs() > 1e-3);
            let cm = constraint_matrices(&h3, Some(&h), TOL);
            let d4 = linalg::det(&h);
            let scale = linalg::row_norms(&h).iter().product::<f64>();
            prop_assert!((h[0][0] * linalg::det(&cm.c_e.unwrap()) + d4).abs() <= 1e-10 * scale);
            prop_assert!((h[1][1] * linalg::det(&cm.c_l.unwrap()) + d4).abs() <= 1e-10 * scale);
            let scale3 = linalg::row_norms(&h3).iter().product::<f64>();
            prop_assert!((h3[0][0] * linalg::det(&cm.c_q.unwrap()) - linalg::det(&h3)).abs() <= 1e-10 * scale3);
        }

        #[test]
        fn sign_patterns_cover_realized_cases(w in proptest::array::uniform6(-5.0f64..5.0)) {
            let h = sym3(w);
            let m = linalg::leading_minors(&h, &[0, 1, 2]);
            let sc = minor_scales(&h, &[0, 1, 2]);
            prop_assume!(m.iter().zip(&sc).all(|(x, s)| x.abs() > 1e-3 * s));
            let n = signature(&h, TOL).unwrap().n_neg;
            prop_assert!(sign_pattern(&m, n).is_some());
            if n == 1 {
                prop_assert!(m[2] < 0.0);
            }
            let r = verdict_qkdv(&jet([1.0, 0.0, 1.0], h), TOL);
            if sign_pattern(&m, n) == Some(0) {
                prop_assert_ne!(r.verdict_orbital_qkdv, Some(Orbital::Stable));
            }
        }

        #[test]
        fn determinant_identity_on_random_jets(
            w in proptest::array::uniform6(-3.0f64..3.0),
            tm in 0.1f64..3.0, tl in -2.0f64..2.0, tc in 0.1f64..3.0,
            j in 0.1f64..2.0, sigma in -2.0f64..2.0,
        ) {
            prop_assume!(2.0 * tc * tm - tl * tl > 1e-3);
            let j3 = jet([tm, tl, tc], sym3(w));
            let j4 = ActionJet4::from_jet3(j3.clone(), j, sigma, 0.3);
            let cm = constraint_matrices(&j3.hess, Some(&j4.hess), TOL);
            let r = identity_report(&j3, Some(&j4), &cm, Some(j), TOL);
            prop_assert!(r.det_action_action.unwrap() <= 1e-10);
            prop_assert!(r.cauchy_schwarz_margin > 0.0);
            prop_assert!(r.eta.unwrap() > 0.0);
        }
    }
}
