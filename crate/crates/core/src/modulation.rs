//! Whitham modulation matrices built from action Hessians, and a small
//! eigenvalue solver (analytic roots of the characteristic polynomial).

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::action::{ActionJet3, ActionJet4};
use crate::linalg::{self, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulationError {
    #[error("action Hessian is singular")]
    SingularHessian,
    #[error("unsupported dimension {0}")]
    Dimension(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationResult {
    pub matrix: Vec<Vec<f64>>,
    /// (re, im) pairs sorted by real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub hyperbolic: bool,
    pub max_imag: f64,
    pub residual: f64,
}

/// Relative tolerance on imaginary parts for the hyperbolicity flag.
pub const HYPERBOLIC_TOL: f64 = 1e-6;

const P3: Mat<3> = [[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]];
const P4: Mat<4> = [[0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]];

/// d = cI + (Hess θ)⁻¹P.
pub fn modulation_matrix_qkdv(jet3: &ActionJet3, c: f64) -> Result<ModulationResult, ModulationError> {
    let inv = linalg::inverse(&jet3.hess).ok_or(ModulationError::SingularHessian)?;
    let mut d = linalg::matmul(&inv, &P3);
    for (i, row) in d.iter_mut().enumerate() {
        row[i] += c;
    }
    Ok(analyse(&d))
}

/// Hess Θ reordered to (λ, −μ, σ, −j) from the (μ, λ, j, σ) storage order.
pub fn abstract_hessian(h: &Mat<4>) -> Mat<4> {
    const IDX: [usize; 4] = [1, 0, 3, 2];
    const SGN: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = SGN[a] * SGN[b] * h[IDX[a]][IDX[b]];
        }
    }
    out
}

/// D = −jI + (Hess Θ)⁻¹P₄, in the abstract variable order.
pub fn modulation_matrix_ekl(jet4: &ActionJet4, j: f64) -> Result<ModulationResult, ModulationError> {
    modulation_from_abstract(&abstract_hessian(&jet4.hess), j)
}

pub fn modulation_from_abstract(h_abs: &Mat<4>, j: f64) -> Result<ModulationResult, ModulationError> {
    let inv = linalg::inverse(h_abs).ok_or(ModulationError::SingularHessian)?;
    let mut d = linalg::matmul(&inv, &P4);
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= j;
    }
    Ok(analyse(&d))
}

fn analyse<const N: usize>(m: &Mat<N>) -> ModulationResult {
    let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let eig = spectrum_small(&rows).expect("dimension checked by type");
    let scale = linalg::frobenius(m).max(1e-300);
    let max_imag = eig.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    let residual = eig.iter().map(|&z| eigen_residual(&rows, z)).fold(0.0, f64::max);
    ModulationResult {
        matrix: rows,
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        hyperbolic: max_imag <= HYPERBOLIC_TOL * scale.max(1.0),
        max_imag,
        residual,
    }
}

/// Monic characteristic polynomial coefficients, highest degree first
/// (Faddeev–LeVerrier).
pub fn char_poly(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut coeffs = vec![1.0];
    let mut mk = vec![vec![0.0; n]; n];
    let mut ck = 1.0;
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{k−1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| m[i][l] * mk[l][j]).sum::<f64>() + if i == j { ck } else { 0.0 };
            }
        }
        mk = next;
        let tr: f64 = (0..n).map(|i| (0..n).map(|l| m[i][l] * mk[l][i]).sum::<f64>()).sum();
        ck = -tr / k as f64;
        coeffs.push(ck);
    }
    coeffs
}

fn horner(p: &[f64], z: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for &a in p {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

fn quadratic(b: C64, c: C64) -> [C64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    // avoid cancellation
    let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
    if q.norm() == 0.0 {
        [C64::new(0.0, 0.0); 2]
    } else {
        [q, c / q]
    }
}

fn cubic(a: f64, b: f64, c: f64) -> [C64; 3] {
    // x³ + a x² + b x + c
    let d0 = a * a - 3.0 * b;
    let d1 = 2.0 * a * a * a - 9.0 * a * b + 27.0 * c;
    let s = C64::new(d1 * d1 - 4.0 * d0 * d0 * d0, 0.0).sqrt();
    let (cp, cm) = ((d1 + s) * 0.5, (d1 - s) * 0.5);
    let big = if cp.norm() >= cm.norm() { cp } else { cm };
    let w = C64::new(-0.5, 3f64.sqrt() / 2.0);
    if big.norm() == 0.0 {
        return [C64::new(-a / 3.0, 0.0); 3];
    }
    let cr = big.powf(1.0 / 3.0);
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut xi = C64::new(1.0, 0.0);
    for o in out.iter_mut() {
        let ck = xi * cr;
        *o = -(a + ck + d0 / ck) / 3.0;
        xi *= w;
    }
    out
}

fn quartic(a: f64, b: f64, c: f64, d: f64) -> [C64; 4] {
    // depress: x = y − a/4
    let sh = a / 4.0;
    let p = b - 6.0 * sh * sh;
    let q = c - 2.0 * b * sh + 8.0 * sh * sh * sh;
    let r = d - c * sh + b * sh * sh - 3.0 * sh.powi(4);
    let ys: [C64; 4] = if q.abs() <= 1e-14 * (1.0 + p.abs().powf(1.5) + r.abs().powf(0.75)) {
        let [u1, u2] = quadratic(C64::new(p, 0.0), C64::new(r, 0.0));
        [u1.sqrt(), -u1.sqrt(), u2.sqrt(), -u2.sqrt()]
    } else {
        // resolvent 8m³ + 8p m² + (2p² − 8r) m − q² = 0
        let ms = cubic(p, (2.0 * p * p - 8.0 * r) / 8.0, -q * q / 8.0);
        let m = *ms.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
        let s = (2.0 * m).sqrt();
        let mut out = [C64::new(0.0, 0.0); 4];
        let mut k = 0;
        for s1 in [1.0, -1.0] {
            let t = (-(2.0 * p + 2.0 * m + s1 * 2.0 * q / s)).sqrt();
            for s2 in [1.0, -1.0] {
                out[k] = 0.5 * (s1 * s + s2 * t);
                k += 1;
            }
        }
        out
    };
    ys.map(|y| y - sh)
}

/// Eigenvalues of a real 2×2, 3×3 or 4×4 matrix, sorted by real part.
pub fn spectrum_small(m: &[Vec<f64>]) -> Result<Vec<C64>, ModulationError> {
    let n = m.len();
    if !(2..=4).contains(&n) || m.iter().any(|r| r.len() != n) {
        return Err(ModulationError::Dimension(n));
    }
    let p = char_poly(m);
    let mut roots: Vec<C64> = match n {
        2 => quadratic(C64::new(p[1], 0.0), C64::new(p[2], 0.0)).to_vec(),
        3 => cubic(p[1], p[2], p[3]).to_vec(),
        _ => quartic(p[1], p[2], p[3], p[4]).to_vec(),
    };
    for z in roots.iter_mut() {
        for _ in 0..2 {
            let (v, dv) = horner(&p, *z);
            if dv.norm() == 0.0 {
                break;
            }
            let cand = *z - v / dv;
            if horner(&p, cand).0.norm() < v.norm() {
                *z = cand;
            }
        }
    }
    Ok(pair_conjugates(roots))
}

fn pair_conjugates(mut roots: Vec<C64>) -> Vec<C64> {
    let scale = roots.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
    let tol = 1e-7 * scale;
    for z in roots.iter_mut() {
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] || roots[i].im <= 0.0 {
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&k| !used[k] && k != i && roots[k].im < 0.0)
            .min_by(|&a, &b| (roots[a] - roots[i].conj()).norm().total_cmp(&(roots[b] - roots[i].conj()).norm()));
        if let Some(k) = partner {
            let avg = C64::new(0.5 * (roots[i].re + roots[k].re), 0.5 * (roots[i].im - roots[k].im));
            roots[i] = avg;
            roots[k] = avg.conj();
            used[i] = true;
            used[k] = true;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// ‖(M − zI)x‖ for a unit null-vector estimate x of M − zI.
pub fn eigen_residual(m: &[Vec<f64>], z: C64) -> f64 {
    let n = m.len();
    let a: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| C64::new(m[i][j], 0.0) - if i == j { z } else { C64::new(0.0, 0.0) }).collect())
        .collect();
    let x = null_vector(a.clone());
    (0..n)
        .map(|i| (0..n).map(|j| a[i][j] * x[j]).sum::<C64>().norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn null_vector(mut a: Vec<Vec<C64>>) -> Vec<C64> {
    let n = a.len();
    let mut cols: Vec<usize> = (0..n).collect();
    // full pivoting over the first n − 1 steps; last column is free
    for k in 0..n - 1 {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.norm() > best {
                    best = v.norm();
                    pi = i;
                    pj = j;
                }
            }
        }
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        if best == 0.0 {
            break;
        }
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    let mut y = vec![C64::new(0.0, 0.0); n];
    y[n - 1] = C64::new(1.0, 0.0);
    for k in (0..n - 1).rev() {
        if a[k][k].norm() == 0.0 {
            y[k] = C64::new(0.0, 0.0);
            continue;
        }
        let s: C64 = (k + 1..n).map(|j| a[k][j] * y[j]).sum();
        y[k] = -s / a[k][k];
    }
    let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![C64::new(0.0, 0.0); n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k] / norm;
    }
    x
}
