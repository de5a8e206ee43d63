//! Probabilists' Hermite polynomials, their tensor products, and the Wick
//! exponential.
//!
//! The normalization is the one adapted to the standard Gaussian measure:
//! `h_0 = 1`, `h_1 = t`, `h_{k+1}(t) = t h_k(t) - k h_{k-1}(t)`, so that
//! `E[h_m h_n] = n! [m = n]` under `gamma_1`. Tensor products
//! `H_alpha(x) = prod_i h_{alpha_i}(x_i)` span the Wiener chaos of degree
//! `|alpha|` at finite dimension.

use nalgebra::DVector;

use crate::error::{EngineError, Result};
use crate::space::MultiIndex;

/// One-dimensional probabilists' Hermite polynomial `h_n(t)`.
pub fn hermite_1d(n: usize, t: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => {
            let mut prev = 1.0;
            let mut cur = t;
            for k in 1..n {
                let next = t * cur - (k as f64) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Tensor Hermite polynomial `H_alpha(x) = prod_i h_{alpha_i}(x_i)`.
pub fn hermite(alpha: &MultiIndex, x: &DVector<f64>) -> Result<f64> {
    if alpha.dim() != x.len() {
        return Err(EngineError::DimensionMismatch {
            expected: alpha.dim(),
            got: x.len(),
        });
    }
    Ok(alpha
        .entries()
        .iter()
        .zip(x.iter())
        .map(|(&n, &t)| hermite_1d(n, t))
        .product())
}

/// Wick exponential `rho(delta h)(x) = exp(<h, x> - |h|^2 / 2)`.
///
/// Normalized so that its Gaussian mean is 1; its chaos coefficients are
/// `h^alpha / alpha!`.
pub fn wick_exp(h: &DVector<f64>, x: &DVector<f64>) -> f64 {
    debug_assert_eq!(h.len(), x.len());
    (h.dot(x) - 0.5 * h.norm_squared()).exp()
}

/// Dimension-checked variant of [`wick_exp`].
pub fn try_wick_exp(h: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    if h.len() != x.len() {
        return Err(EngineError::DimensionMismatch {
            expected: h.len(),
            got: x.len(),
        });
    }
    Ok(wick_exp(h, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_index_is_one() {
        let alpha = MultiIndex::zeros(3);
        let x = DVector::from_vec(vec![0.3, -2.0, 5.5]);
        assert_eq!(hermite(&alpha, &x).unwrap(), 1.0);
    }

    #[test]
    fn low_degree_closed_forms() {
        // h_2(t) = t^2 - 1, h_3(t) = t^3 - 3t
        let alpha2 = MultiIndex::new(vec![2]);
        let x = DVector::from_vec(vec![2.0]);
        assert_eq!(hermite(&alpha2, &x).unwrap(), 3.0);

        let alpha3 = MultiIndex::new(vec![3]);
        let x = DVector::from_vec(vec![1.5]);
        assert!((hermite(&alpha3, &x).unwrap() - (-1.125)).abs() < 1e-15);
    }

    #[test]
    fn tensor_product_factorizes() {
        let alpha = MultiIndex::new(vec![2, 1]);
        let x = DVector::from_vec(vec![2.0, 0.5]);
        // h_2(2) * h_1(0.5) = 3 * 0.5
        assert!((hermite(&alpha, &x).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let alpha = MultiIndex::new(vec![1, 1]);
        let x = DVector::from_vec(vec![0.0]);
        assert!(hermite(&alpha, &x).is_err());
    }

    #[test]
    fn wick_closed_form() {
        let h = DVector::from_vec(vec![0.0]);
        let x = DVector::from_vec(vec![17.0]);
        assert_eq!(wick_exp(&h, &x), 1.0);

        let h = DVector::from_vec(vec![1.0]);
        let x = DVector::from_vec(vec![2.0]);
        assert!((wick_exp(&h, &x) - 1.5f64.exp()).abs() < 1e-12);

        let h = DVector::from_vec(vec![1.0]);
        let x = DVector::from_vec(vec![2.0, 1.0]);
        assert!(try_wick_exp(&h, &x).is_err());
    }

    #[test]
    fn recurrence_matches_explicit_polynomials() {
        // independent oracle: explicit coefficients for h_4 and h_5
        // h_4 = t^4 - 6t^2 + 3, h_5 = t^5 - 10t^3 + 15t
        for &t in &[-2.5f64, -0.3, 0.0, 0.7, 3.1] {
            let h4 = t.powi(4) - 6.0 * t * t + 3.0;
            let h5 = t.powi(5) - 10.0 * t.powi(3) + 15.0 * t;
            assert!((hermite_1d(4, t) - h4).abs() < 1e-10 * (1.0 + h4.abs()));
            assert!((hermite_1d(5, t) - h5).abs() < 1e-10 * (1.0 + h5.abs()));
        }
    }
}
