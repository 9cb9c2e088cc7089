//! Small dense symmetric/Hermitian helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, TomoError};

/// Eigenpairs of a real symmetric matrix, eigenvalues sorted descending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenpairs of a Hermitian matrix (values ascending; columns are eigenvectors).
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(a.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_abs_asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigen(a).0[0]
}

/// Symmetric PSD square root. Eigenvalues in `[-neg_tol, 0)` are clamped to
/// zero; anything more negative is an error.
pub fn psd_sqrt(a: &DMatrix<f64>, neg_tol: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(a);
    let scale = values.amax().max(1.0);
    let mut roots = DVector::zeros(values.len());
    for (i, &l) in values.iter().enumerate() {
        if l < -neg_tol * scale {
            return Err(TomoError::validation(
                "psd",
                format!("eigenvalue {l:e} below tolerance {:e}", -neg_tol),
            ));
        }
        roots[i] = l.max(0.0).sqrt();
    }
    Ok(symmetrize(&(&vectors * DMatrix::from_diagonal(&roots) * vectors.transpose())))
}

/// Moore–Penrose inverse of a symmetric matrix; eigenvalues with magnitude
/// below `rel_cut × max|λ|` are treated as zero.
pub fn pinv_sym(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(a);
    let cut = rel_cut * values.amax();
    let inv = values.map(|l| if l.abs() > cut && l != 0.0 { 1.0 / l } else { 0.0 });
    symmetrize(&(&vectors * DMatrix::from_diagonal(&inv) * vectors.transpose()))
}

/// Orthogonal projector onto the range of a symmetric matrix.
pub fn range_projector(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(a);
    let cut = rel_cut * values.amax();
    let mask = values.map(|l| if l.abs() > cut && l != 0.0 { 1.0 } else { 0.0 });
    symmetrize(&(&vectors * DMatrix::from_diagonal(&mask) * vectors.transpose()))
}

/// Numerical rank: singular values above `rel_tol × σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > rel_tol * max).count()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
