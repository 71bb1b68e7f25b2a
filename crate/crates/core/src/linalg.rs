//! Dense linear-algebra helpers built on nalgebra's SVD and LU.

use nalgebra::{DMatrix, DVector};

/// Default relative threshold for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Singular values sorted in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `rtol·σ_max` (absolute floor `1e-14`).
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    let thr = (rtol * smax).max(1e-14);
    s.iter().filter(|&&v| v > thr).count()
}

/// Rank together with the gap ratio `σ_r / σ_{r+1}` (infinite when the
/// matrix has full rank or is zero).
pub fn rank_with_gap(m: &DMatrix<f64>, rtol: f64) -> (usize, f64) {
    let s = singular_values(m);
    let r = rank(m, rtol);
    let gap = if r == 0 || r >= s.len() || s[r] == 0.0 {
        f64::INFINITY
    } else {
        s[r - 1] / s[r]
    };
    (r, gap)
}

/// 2-norm condition number `σ_max / σ_min` over `min(rows, cols)` values.
pub fn condition(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis (columns) of the right nullspace.
pub fn nullspace(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least n rows so the SVD yields a full set of right vectors.
    let rows = m.nrows().max(n);
    let mut a = DMatrix::zeros(rows, n);
    a.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let s = svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let thr = (rtol * smax).max(1e-14);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| s[i] <= thr)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis (columns) of the column space.
pub fn range(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let thr = (rtol * smax).max(1e-14);
    let mut idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] > thr).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let vecs: Vec<DVector<f64>> = idx.iter().map(|&i| u.column(i).into_owned()).collect();
    if vecs.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&vecs)
    }
}

/// Moore–Penrose pseudoinverse with threshold `rtol·σ_max`.
pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let thr = (rtol * smax).max(1e-300);
    let mut out = DMatrix::zeros(cols, rows);
    for i in 0..s.len() {
        if s[i] > thr {
            out += vt.row(i).transpose() * u.column(i).transpose() / s[i];
        }
    }
    out
}

/// Least-squares solution of `a x ≈ b` and the residual norm `‖a x − b‖`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rtol: f64) -> (DVector<f64>, f64) {
    let x = pinv(a, rtol) * b;
    let r = (a * &x - b).norm();
    (x, r)
}

/// Determinant: closed form through 3×3, LU with partial pivoting above.
pub fn det(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}

/// Largest principal angle (radians) between two column spaces.
///
/// Both inputs are orthonormalized first; spaces of different dimension
/// give `π/2`.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = range(a, RANK_RTOL);
    let qb = range(b, RANK_RTOL);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    // sin θ_max = ‖(I − QaQaᵀ) Qb‖₂, accurate for small angles.
    let resid = &qb - &qa * (qa.transpose() * &qb);
    let s = singular_values(&resid);
    s.first().copied().unwrap_or(0.0).clamp(0.0, 1.0).asin()
}
