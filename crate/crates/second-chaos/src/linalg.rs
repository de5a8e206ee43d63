//! Small symmetric-matrix helpers shared across the crate.

use nalgebra::DMatrix;

use crate::error::{EngineError, Result};

/// `(A + A^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Minimum eigenvalue of a (symmetrized) matrix; the single PSD criterion
/// used by every operator-inequality margin.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.min()
}

/// Largest absolute asymmetry `max_ij |A_ij - A_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric PSD square root via the spectral decomposition.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero; anything below `-tol` is
/// rejected as not PSD.
pub fn psd_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -tol {
        return Err(EngineError::NotPositiveSemiDefinite { min_eig: min });
    }
    let d = m.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for (i, col) in (0..d).zip(0..) {
        let lambda = eig.eigenvalues[i].max(0.0).sqrt();
        scaled.column_mut(col).scale_mut(lambda);
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}
