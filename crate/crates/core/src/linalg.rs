//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// `(M + M^T) / 2`.
pub fn sym_part(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Operator infinity norm: the maximum absolute row sum.
pub fn inf_norm(m: &Matrix) -> f64 {
    m.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn vec_max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn subvector(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Indices of `0..p` that are not in `set` (which must be sorted).
pub fn complement(p: usize, set: &[usize]) -> Vec<usize> {
    (0..p).filter(|i| set.binary_search(i).is_err()).collect()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = match SymmetricEigen::try_new(sym_part(m), f64::EPSILON, MAX_ITER) {
        Some(eig) => eig.eigenvalues.iter().copied().collect(),
        None => return vec![f64::NAN; m.nrows()],
    };
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_min(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

pub fn lambda_max(m: &Matrix) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NAN)
}

/// Iteration cap for every eigen/Schur decomposition; the unbounded
/// nalgebra variants can cycle forever on some inputs.
pub const MAX_ITER: usize = 10_000;

/// Largest singular value, as `sqrt(lambda_max(M^T M))`. NaN on non-convergence.
pub fn sigma_max(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    lambda_max(&(m.transpose() * m)).max(0.0).sqrt()
}

/// Complex spectrum via a capped real Schur decomposition. The convergence
/// tolerance is relaxed on failure; `None` when every attempt fails.
pub fn complex_spectrum(m: &Matrix) -> Option<Vec<Complex<f64>>> {
    [f64::EPSILON, 1e-13, 1e-10]
        .iter()
        .find_map(|&eps| m.clone().try_schur(eps, MAX_ITER).map(|s| s.complex_eigenvalues().iter().copied().collect()))
}

/// Largest real part over the (complex) spectrum. NaN on non-convergence,
/// so `< 0` tests treat it as not stable.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    match complex_spectrum(m) {
        Some(ev) => ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        None => f64::NAN,
    }
}

/// Symmetric PSD square root with eigenvalue clipping at `clip`.
pub fn psd_sqrt(m: &Matrix, clip: f64) -> Matrix {
    psd_power(m, clip, 0.5)
}

/// Inverse of the symmetric PSD square root, clipping eigenvalues at `clip`.
pub fn psd_inv_sqrt(m: &Matrix, clip: f64) -> Matrix {
    psd_power(m, clip, -0.5)
}

fn psd_power(m: &Matrix, clip: f64, power: f64) -> Matrix {
    let eig = SymmetricEigen::new(sym_part(m));
    let d = eig.eigenvalues.map(|x| x.max(clip).powf(power));
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn inverse(m: &Matrix, what: &'static str) -> Result<Matrix> {
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

/// Cholesky factor of a symmetric PSD matrix; falls back to the PSD square
/// root when the factorization fails (singular or numerically indefinite).
pub fn covariance_factor(q: &Matrix) -> Matrix {
    match q.clone().cholesky() {
        Some(c) => c.l(),
        None => psd_sqrt(q, 0.0),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}
