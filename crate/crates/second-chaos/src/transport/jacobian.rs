//! Carleman-Fredholm determinant and the Gaussian change-of-variables
//! Jacobian of a transport solution.

use nalgebra::{DMatrix, DVector};

use crate::diff::{gradient_of, hessian_of};
use crate::error::Result;
use crate::transport::TransportSolution;

/// `det_2(I + A) = det(I + A) e^{-trace A}`, via LU factorization of `I + A`.
///
/// Negative values are reported as signed.
pub fn det2(a: &DMatrix<f64>) -> f64 {
    let d = a.nrows();
    let shifted = DMatrix::identity(d, d) + a;
    let lu = nalgebra::linalg::LU::new(shifted);
    lu.determinant() * (-a.trace()).exp()
}

/// The Jacobian factor
/// `Lambda(x) = det_2(I + hess phi) exp(-L phi - |grad phi|^2 / 2)`
/// with `L phi = <x, grad phi> - trace(hess phi)`.
///
/// Satisfies the Gaussian Monge-Ampere identity `L(T(x)) Lambda(x) = 1`
/// for exact solutions. Derivatives of `phi` are analytic for closed-form
/// methods and central differences otherwise.
pub fn jacobian_lambda(sol: &TransportSolution, x: &DVector<f64>) -> Result<f64> {
    let grad = gradient_of(sol.potential.as_ref(), x)?;
    let hess = hessian_of(sol.potential.as_ref(), x)?;
    let generator = x.dot(&grad) - hess.trace();
    Ok(det2(&hess) * (-generator - 0.5 * grad.norm_squared()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityModel;
    use crate::quadrature::QuadratureGrid;
    use crate::space::GaussianSpace;
    use crate::transport::solve_quantile_1d;

    #[test]
    fn det2_closed_forms() {
        assert!((det2(&DMatrix::zeros(3, 3)) - 1.0).abs() < 1e-14);

        let a = DMatrix::from_diagonal_element(1, 1, 1.0);
        assert!((det2(&a) - 2.0 * (-1.0f64).exp()).abs() < 1e-12);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!((det2(&a) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn det2_equals_det_times_exp_trace() {
        // the algebraic identity det2(I+A) e^{trace A} = det(I+A)
        let a = DMatrix::from_row_slice(2, 2, &[0.3, -0.1, 0.2, 0.5]);
        let d = DMatrix::identity(2, 2) + &a;
        let det = nalgebra::linalg::LU::new(d).determinant();
        assert!((det2(&a) * a.trace().exp() - det).abs() < 1e-12);
    }

    #[test]
    fn lambda_for_scaling_density() {
        // sigma = 2, d = 1: phi = x^2/2, Lambda(1) = 2 e^{-1.5}
        let space = GaussianSpace::new(1).unwrap();
        let l = DensityModel::scaled_gaussian_diag(
            space,
            DVector::zeros(1),
            DVector::from_vec(vec![4.0]),
        )
        .unwrap();
        let grid = QuadratureGrid::build(1, 48).unwrap();
        let sol = solve_quantile_1d(&l, &grid).unwrap();
        let x = DVector::from_vec(vec![1.0]);
        let lambda = jacobian_lambda(&sol, &x).unwrap();
        assert!(
            (lambda - 2.0 * (-1.5f64).exp()).abs() < 1e-8,
            "lambda = {lambda}"
        );
        // Monge-Ampere at the same point: L(T(x)) Lambda(x) = 1
        let t = sol.map.value(&x);
        let prod = l.value(&t) * lambda;
        assert!((prod - 1.0).abs() < 1e-8, "product = {prod}");
    }

    #[test]
    fn lambda_is_one_for_identity() {
        let space = GaussianSpace::new(1).unwrap();
        let l = DensityModel::uniform(space);
        let grid = QuadratureGrid::build(1, 32).unwrap();
        let sol = solve_quantile_1d(&l, &grid).unwrap();
        for &x0 in &[-1.0f64, 0.0, 2.0] {
            let lambda = jacobian_lambda(&sol, &DVector::from_vec(vec![x0])).unwrap();
            assert!((lambda - 1.0).abs() < 1e-9);
        }
    }
}
