//! Numerical rank, null spaces and subspace arithmetic.
//!
//! Rank decisions use a relative singular-value cutoff: singular values above
//! `tol * sigma_max` count towards the rank. An exactly zero matrix has rank 0
//! under any tolerance.

use nalgebra::{DMatrix, DVector};

/// Default relative cutoff for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Numerical rank with relative singular-value threshold.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    rank_scaled(m, tol, 0.0)
}

/// Numerical rank where the cutoff is relative to `max(sigma_max, scale)`.
///
/// For matrix products (`drho W drho^T` and friends) pass the product of the
/// factor norms as `scale`: a product that should vanish exactly then reports
/// rank 0 instead of counting its own rounding dust as directions.
pub fn rank_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return 0;
    }
    let cutoff = tol * smax.max(scale);
    sv.iter().filter(|&&s| s > cutoff).count()
}

// Gram eigenvalues are squared singular values, so the relative cutoff is
// squared too, floored above the eigensolver noise (~eps * |m^T m|).
fn gram_cutoff(tol: f64, emax: f64) -> f64 {
    emax * (tol * tol).max(1e-13)
}

/// Orthonormal basis of the null space of `m`, via the symmetric
/// eigendecomposition of `m^T m`.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..n)
            .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
            .collect();
    }
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    let emax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = if emax > 0.0 { gram_cutoff(tol, emax) } else { 0.0 };
    let mut basis = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= cutoff {
            basis.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    basis
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let gram = m * m.transpose();
    let eig = gram.symmetric_eigen();
    let emax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if emax <= 0.0 {
        return Vec::new();
    }
    let cutoff = gram_cutoff(tol, emax);
    let mut basis = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            basis.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    basis
}

/// Dimension of the intersection of two column spaces:
/// `dim U + dim V - rank [U V]`.
pub fn intersection_dim(u: &DMatrix<f64>, v: &DMatrix<f64>, tol: f64) -> usize {
    let ru = rank(u, tol);
    let rv = rank(v, tol);
    if ru == 0 || rv == 0 {
        return 0;
    }
    let mut stacked = DMatrix::zeros(u.nrows(), u.ncols() + v.ncols());
    stacked.view_mut((0, 0), (u.nrows(), u.ncols())).copy_from(u);
    stacked
        .view_mut((0, u.ncols()), (v.nrows(), v.ncols()))
        .copy_from(v);
    let rs = rank(&stacked, tol);
    (ru + rv).saturating_sub(rs)
}

/// Basis of the intersection of two column spaces.
pub fn intersection_basis(u: &DMatrix<f64>, v: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    if u.ncols() == 0 || v.ncols() == 0 {
        return Vec::new();
    }
    // Null vectors (a; b) of [U | -V] give intersection vectors U a.
    let mut stacked = DMatrix::zeros(u.nrows(), u.ncols() + v.ncols());
    stacked.view_mut((0, 0), (u.nrows(), u.ncols())).copy_from(u);
    stacked
        .view_mut((0, u.ncols()), (v.nrows(), v.ncols()))
        .copy_from(&(-v));
    let nulls = null_space(&stacked, tol);
    let mut vecs = Vec::new();
    for z in nulls {
        let a = DVector::from_iterator(u.ncols(), z.iter().take(u.ncols()).cloned());
        let w = u * a;
        if w.norm() > tol {
            vecs.push(w.normalize());
        }
    }
    orthonormalize(vecs, tol)
}

/// Orthonormal complement of `sub` inside the space spanned by `ambient`.
pub fn complement_within(
    ambient: &[DVector<f64>],
    sub: &[DVector<f64>],
    tol: f64,
) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = sub.to_vec();
    let keep_from = basis.len();
    for v in ambient {
        let mut w = v.clone();
        for b in &basis {
            let proj = b.dot(&w);
            w -= b * proj;
        }
        if w.norm() > tol.max(1e-12) {
            basis.push(w.normalize());
        }
    }
    basis.split_off(keep_from)
}

fn orthonormalize(vecs: Vec<DVector<f64>>, tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vecs {
        let mut w = v;
        for b in &basis {
            let proj = b.dot(&w);
            w -= b * proj;
        }
        if w.norm() > tol.max(1e-12) {
            basis.push(w.normalize());
        }
    }
    basis
}

/// Columns-from-vectors helper.
pub fn matrix_from_columns(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}
