//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Thin SVD with singular values sorted in descending order.
#[derive(Clone, Debug)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(a: &DMatrix<f64>) -> SortedSvd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(m, 0),
            singular_values: Vec::new(),
            v: DMatrix::zeros(n, 0),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    SortedSvd {
        u: DMatrix::from_fn(m, k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: DMatrix::from_fn(n, k, |r, c| vt[(order[c], r)]),
    }
}

/// All `n` right singular vectors of an `m x n` matrix, including those of
/// the implicit zero singular values when `m < n`. Singular values are
/// descending and padded with zeros to length `n`.
pub fn right_singular(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m >= n {
        let svd = svd_sorted(a);
        return (svd.singular_values, svd.v);
    }
    let mut padded = DMatrix::zeros(n, n);
    padded.rows_mut(0, m).copy_from(a);
    let svd = svd_sorted(&padded);
    let mut s = svd.singular_values;
    for v in s.iter_mut().skip(m) {
        *v = 0.0;
    }
    (s, svd.v)
}

fn cutoff(s: &[f64], rel_tol: f64) -> f64 {
    s.first().copied().unwrap_or(0.0) * rel_tol
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numeric_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = svd_sorted(a).singular_values;
    let tol = cutoff(&s, rel_tol);
    s.iter().filter(|&&v| v > tol && v > 0.0).count()
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    numeric_rank(a, RANK_TOL)
}

/// Orthonormal basis of the column space.
pub fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = svd_sorted(a);
    let tol = cutoff(&svd.singular_values, RANK_TOL);
    let r = svd
        .singular_values
        .iter()
        .filter(|&&v| v > tol && v > 0.0)
        .count();
    svd.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the null space.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (s, v) = right_singular(a);
    let tol = cutoff(&s, RANK_TOL);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] <= tol || s[k] == 0.0).collect();
    DMatrix::from_fn(v.nrows(), keep.len(), |r, c| v[(r, keep[c])])
}

/// Largest principal angle (rad) between the column spaces of `a` and `b`,
/// computed from its sine for accuracy near zero.
pub fn largest_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let off = &qb - &qa * (qa.transpose() * &qb);
    let s = svd_sorted(&off).singular_values;
    s.first().copied().unwrap_or(0.0).min(1.0).asin()
}

/// Angle (rad) between two lines, ignoring sign.
pub fn direction_angle(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let (u, v) = (u / u.norm(), v / v.norm());
    let c = u.dot(&v).abs();
    let s = (&u - &v * u.dot(&v)).norm();
    s.atan2(c)
}

/// Flips `v` so its first entry above `rel_tol * max|v|` is positive.
pub fn canonical_sign(v: &mut DVector<f64>, rel_tol: f64) {
    let peak = v.amax();
    if peak == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > rel_tol * peak) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Diagonal of the residual projector `W = I - H (H^T H)^{-1} H^T`.
///
/// Returns `None` when `H^T H` is not positive definite.
pub fn residual_leverage(h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let gram = h.transpose() * h;
    let chol = gram.cholesky()?;
    let solved = chol.solve(&h.transpose());
    Some(DVector::from_fn(h.nrows(), |i, _| {
        1.0 - h.row(i).iter().zip(solved.column(i).iter()).map(|(a, b)| a * b).sum::<f64>()
    }))
}

/// Full residual projector `W = I - Q Q^T` with `Q` an orthonormal basis of
/// the column space of `h`.
pub fn residual_projector(h: &DMatrix<f64>) -> DMatrix<f64> {
    let q = orthonormal_basis(h);
    DMatrix::identity(h.nrows(), h.nrows()) - &q * q.transpose()
}

pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}
