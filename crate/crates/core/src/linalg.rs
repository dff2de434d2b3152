//! Dense complex linear-algebra helpers shared by the verification modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> (usize, Vec<f64>) {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return (0, sv);
    }
    let rank = sv.iter().filter(|&&s| s > rel_tol * top).count();
    (rank, sv)
}

/// Orthonormal basis (as columns) of the right null space of `m`.
pub fn nullspace(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut square = CMatrix::zeros(rows, cols);
    square.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| top == 0.0 || svd.singular_values[k] <= rel_tol * top)
        .collect();
    let mut basis = CMatrix::zeros(cols, kept.len());
    for (out, &k) in kept.iter().enumerate() {
        for r in 0..cols {
            basis[(r, out)] = v_t[(k, r)].conj();
        }
    }
    basis
}

/// Orthonormal basis of the column span of `m`.
pub fn column_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| top > 0.0 && svd.singular_values[k] > rel_tol * top)
        .collect();
    CMatrix::from_fn(m.nrows(), kept.len(), |r, c| u[(r, kept[c])])
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal column bases, or 1 when their dimensions differ.
pub fn max_principal_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let residual = b - a * (a.adjoint() * b);
    let s = singular_values(&residual).first().copied().unwrap_or(0.0);
    s.min(1.0).asin()
}

/// Solves `m x = rhs` by LU; `None` when `m` is singular.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().solve(rhs)
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Relative Frobenius distance `|a - b|_F / max(|a|_F, |b|_F)`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}
