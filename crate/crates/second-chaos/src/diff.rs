//! Central finite differences with optional analytic short-circuit.

use nalgebra::{DMatrix, DVector};

use crate::error::{EngineError, Result};
use crate::field::ScalarField;

/// Step used by the central-difference stencils: `1e-4 * max(1, |x|_inf)`.
pub fn default_step(x: &DVector<f64>) -> f64 {
    1e-4 * x.amax().max(1.0)
}

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EngineError::NonFinite {
            context: format!("finite-difference stencil ({what})"),
        })
    }
}

/// Central-difference gradient, `O(step^2)` accurate.
pub fn fd_gradient(f: &dyn ScalarField, x: &DVector<f64>, step: f64) -> Result<DVector<f64>> {
    let d = x.len();
    let mut g = DVector::zeros(d);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for i in 0..d {
        xp[i] = x[i] + step;
        xm[i] = x[i] - step;
        let fp = check_finite(f.value(&xp), "gradient")?;
        let fm = check_finite(f.value(&xm), "gradient")?;
        g[i] = (fp - fm) / (2.0 * step);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    Ok(g)
}

/// Central-difference Hessian, symmetrized as `(A + A^T) / 2`.
pub fn fd_hessian(f: &dyn ScalarField, x: &DVector<f64>, step: f64) -> Result<DMatrix<f64>> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let f0 = check_finite(f.value(x), "hessian center")?;
    let mut probe = x.clone();
    for i in 0..d {
        probe[i] = x[i] + step;
        let fp = check_finite(f.value(&probe), "hessian")?;
        probe[i] = x[i] - step;
        let fm = check_finite(f.value(&probe), "hessian")?;
        probe[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * step;
                probe[j] = x[j] + sj * step;
                let v = check_finite(f.value(&probe), "hessian")?;
                probe[i] = x[i];
                probe[j] = x[j];
                Ok(v)
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    // already symmetric by construction of the stencil, but keep the contract
    let ht = h.transpose();
    Ok((h + ht) * 0.5)
}

/// Gradient of `f`: analytic when supplied, central differences otherwise.
pub fn gradient_of(f: &dyn ScalarField, x: &DVector<f64>) -> Result<DVector<f64>> {
    match f.gradient(x) {
        Some(g) => Ok(g),
        None => fd_gradient(f, x, default_step(x)),
    }
}

/// Hessian of `f`: analytic when supplied, central differences otherwise.
pub fn hessian_of(f: &dyn ScalarField, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    match f.hessian(x) {
        Some(h) => Ok(h),
        None => fd_hessian(f, x, default_step(x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::wick_exp;

    #[test]
    fn linear_gradient_is_exact() {
        // f = <a, x>: central differences are exact for linear functions
        let a = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let ac = a.clone();
        let f = move |x: &DVector<f64>| ac.dot(x);
        let x = DVector::from_vec(vec![0.3, 1.1, -0.7]);
        let g = fd_gradient(&f, &x, default_step(&x)).unwrap();
        for i in 0..3 {
            assert!((g[i] - a[i]).abs() < 1e-10, "g[{i}] = {}", g[i]);
        }
    }

    #[test]
    fn quadratic_hessian_matches_kernel() {
        // f = 0.5 <Bx, x> with symmetric B
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let bc = b.clone();
        let f = move |x: &DVector<f64>| 0.5 * (&bc * x).dot(x);
        let x = DVector::from_vec(vec![0.4, -0.9]);
        let h = fd_hessian(&f, &x, default_step(&x)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - b[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn wick_gradient_at_origin() {
        // d/dx exp(x - 1/2) at 0 is e^{-1/2}
        let h = DVector::from_vec(vec![1.0]);
        let hc = h.clone();
        let f = move |x: &DVector<f64>| wick_exp(&hc, x);
        let x = DVector::zeros(1);
        let g = fd_gradient(&f, &x, default_step(&x)).unwrap();
        assert!((g[0] - (-0.5f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn non_finite_stencil_is_an_error() {
        // the stencil reaches across the log singularity
        let g = |x: &DVector<f64>| (x[0]).ln();
        let bad = fd_gradient(&g, &DVector::from_vec(vec![1e-6]), 1e-4);
        assert!(bad.is_err());
    }
}
