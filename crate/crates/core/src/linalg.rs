//! Small dense matrices stored as fixed-size arrays.

pub type Mat<const N: usize> = [[f64; N]; N];

pub fn identity<const N: usize>() -> Mat<N> {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose<const N: usize>(a: &Mat<N>) -> Mat<N> {
    let mut t = *a;
    for i in 0..N {
        for j in 0..N {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn frobenius<const N: usize>(a: &Mat<N>) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn row_norms<const N: usize>(a: &Mat<N>) -> [f64; N] {
    let mut r = [0.0; N];
    for (i, row) in a.iter().enumerate() {
        r[i] = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    r
}

/// Returns (H + Hᵀ)/2 and ‖H − Hᵀ‖/‖H‖.
pub fn symmetrize<const N: usize>(a: &Mat<N>) -> (Mat<N>, f64) {
    let mut s = *a;
    let mut asym = 0.0;
    for i in 0..N {
        for j in 0..N {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
            asym += (a[i][j] - a[j][i]).powi(2);
        }
    }
    let n = frobenius(a);
    (s, if n > 0.0 { asym.sqrt() / n } else { 0.0 })
}

/// Determinant of a dynamically sized square matrix by partial-pivot elimination.
pub fn det_dyn(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for i in col + 1..n {
            let f = a[i][col] / p;
            if f != 0.0 {
                for j in col..n {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    det
}

pub fn det<const N: usize>(a: &Mat<N>) -> f64 {
    det_dyn(a.iter().map(|r| r.to_vec()).collect())
}

/// Determinant of the submatrix on the given rows and columns.
pub fn minor<const N: usize>(a: &Mat<N>, rows: &[usize], cols: &[usize]) -> f64 {
    det_dyn(
        rows.iter()
            .map(|&i| cols.iter().map(|&j| a[i][j]).collect())
            .collect(),
    )
}

/// Leading principal minors taken along `order`.
pub fn leading_minors<const N: usize>(a: &Mat<N>, order: &[usize; N]) -> [f64; N] {
    let mut m = [0.0; N];
    for k in 0..N {
        m[k] = minor(a, &order[..=k], &order[..=k]);
    }
    m
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
pub fn inverse<const N: usize>(a: &Mat<N>) -> Option<Mat<N>> {
    let mut m = *a;
    let mut inv = identity::<N>();
    let scale = frobenius(a);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() <= 1e-300 * scale {
            return None;
        }
        m.swap(piv, col);
        inv.swap(piv, col);
        let p = m[col][col];
        for j in 0..N {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..N {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..N {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted ascending.
pub fn jacobi_eigenvalues<const N: usize>(a: &Mat<N>) -> [f64; N] {
    let mut m = *a;
    let norm = frobenius(a);
    if norm == 0.0 {
        return [0.0; N];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev = [0.0; N];
    for i in 0..N {
        ev[i] = m[i][i];
    }
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn mat_vec<const N: usize>(a: &Mat<N>, x: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..N {
        y[i] = (0..N).map(|j| a[i][j] * x[j]).sum();
    }
    y
}
