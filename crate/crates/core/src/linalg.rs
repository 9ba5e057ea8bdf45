//! Pointwise numeric linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Solves `a x = b` by LU; `None` when `a` is singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let lu = to_matrix(a).lu();
    lu.solve(&DVector::from_column_slice(b)).map(|x| x.iter().copied().collect())
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    to_matrix(a).determinant()
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn rank(a: &[Vec<f64>], rel_tol: f64) -> usize {
    if a.is_empty() || a[0].is_empty() {
        return 0;
    }
    let sv = to_matrix(a).singular_values();
    let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

/// Ratio of extreme singular values (∞ for singular input).
pub fn condition_number(a: &[Vec<f64>]) -> f64 {
    let sv = to_matrix(a).singular_values();
    let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    let smin = sv.iter().fold(f64::INFINITY, |m, s| m.min(*s));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Least-squares solution of an overdetermined system via SVD, with the
/// residual norm `‖a x − b‖`.
pub fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = to_matrix(a);
    let rhs = DVector::from_column_slice(b);
    let svd = m.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-14).ok()?;
    let res = (&m * &x - rhs).norm();
    Some((x.iter().copied().collect(), res))
}

/// Orthonormal basis of the row space of `a`, keeping singular directions
/// above `rel_tol · σ_max`.
pub fn row_space_basis(a: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    if a.is_empty() || a[0].is_empty() {
        return Vec::new();
    }
    let svd = to_matrix(a).svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return Vec::new();
    }
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * smax)
        .map(|k| vt.row(k).iter().copied().collect())
        .collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    from_matrix(&(to_matrix(a) * to_matrix(b)))
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}
