//! Closed-form transport onto a Gaussian target.
//!
//! For source `gamma_d` and target `N(mean, Sigma)` the optimal map is
//! `T(x) = mean + Sigma^{1/2} x`, the potential is the explicit quadratic
//! `phi(x) = <mean, x> + (1/2) <(Sigma^{1/2} - I) x, x>`, and
//! `d^2 = |mean|^2 + trace(Sigma + I - 2 Sigma^{1/2})`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::field::{AnalyticScalar, AnalyticVector};
use crate::linalg::psd_sqrt;
use crate::transport::{
    MethodData, SolverDiagnostics, TransportMethod, TransportSolution,
};

pub fn solve_gaussian_linear(sigma: &DMatrix<f64>, mean: &DVector<f64>) -> Result<TransportSolution> {
    let d = mean.len();
    let root = psd_sqrt(sigma, 1e-10)?;
    let hessian = &root - DMatrix::identity(d, d);
    let wasserstein_sq = mean.norm_squared()
        + (sigma + DMatrix::identity(d, d) - &root * 2.0).trace();

    let map_root = root.clone();
    let map_mean = mean.clone();
    let jac_root = root.clone();
    let map = AnalyticVector {
        value_fn: move |x: &DVector<f64>| &map_mean + &map_root * x,
        jacobian_fn: move |_: &DVector<f64>| jac_root.clone(),
    };

    let pot_h = hessian.clone();
    let pot_mean = mean.clone();
    let grad_h = hessian.clone();
    let grad_mean = mean.clone();
    let hess_h = hessian.clone();
    let potential = AnalyticScalar {
        value_fn: move |x: &DVector<f64>| pot_mean.dot(x) + 0.5 * (&pot_h * x).dot(x),
        gradient_fn: move |x: &DVector<f64>| &grad_mean + &grad_h * x,
        hessian_fn: move |_: &DVector<f64>| hess_h.clone(),
    };

    Ok(TransportSolution {
        method: TransportMethod::GaussianLinear,
        map: Arc::new(map),
        potential: Arc::new(potential),
        mean_hessian: hessian,
        wasserstein_sq: wasserstein_sq.max(0.0),
        dual_potentials: None,
        epsilon_final: None,
        diagnostics: SolverDiagnostics {
            iterations: 0,
            marginal_error: 0.0,
            converged: true,
        },
        method_data: MethodData::Linear {
            matrix: root,
            mean: mean.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureGrid;
    use crate::transport::inverse_map;

    #[test]
    fn identity_target_is_identity_map() {
        let sol =
            solve_gaussian_linear(&DMatrix::identity(2, 2), &DVector::zeros(2)).unwrap();
        assert!(sol.wasserstein_sq.abs() < 1e-14);
        let x = DVector::from_vec(vec![0.7, -1.1]);
        assert!((sol.map.value(&x) - &x).norm() < 1e-14);
        assert!(sol.mean_hessian.amax() < 1e-14);
    }

    #[test]
    fn one_dim_scaling() {
        let sol = solve_gaussian_linear(
            &DMatrix::from_diagonal_element(1, 1, 4.0),
            &DVector::zeros(1),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.5]);
        assert!((sol.map.value(&x)[0] - 3.0).abs() < 1e-12);
        assert!((sol.mean_hessian[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.wasserstein_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dim_diagonal() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let sol = solve_gaussian_linear(&sigma, &DVector::zeros(2)).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let t = sol.map.value(&x);
        assert!((t[0] - 2.0).abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
        assert!((sol.wasserstein_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(solve_gaussian_linear(&sigma, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn inverse_undoes_the_map() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mean = DVector::from_vec(vec![1.0, -0.5]);
        let sol = solve_gaussian_linear(&sigma, &mean).unwrap();
        let grid = QuadratureGrid::build(2, 5).unwrap();
        let inv = inverse_map(&sol, &grid).unwrap();
        for node in grid.nodes() {
            let y = sol.map.value(node);
            assert!((inv.value(&y) - node).norm() < 1e-10);
        }
    }

    #[test]
    fn potential_gradient_generates_the_map() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25]));
        let mean = DVector::from_vec(vec![0.5, 1.0]);
        let sol = solve_gaussian_linear(&sigma, &mean).unwrap();
        let x = DVector::from_vec(vec![-0.8, 1.2]);
        let grad = sol.potential.gradient(&x).unwrap();
        let t = sol.map.value(&x);
        assert!((&x + grad - t).norm() < 1e-12);
    }
}
