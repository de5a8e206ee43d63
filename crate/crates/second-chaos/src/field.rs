//! Evaluation contracts for scalar and vector fields on `R^d`.
//!
//! Analytic derivatives are optional; callers fall back to the central
//! differences in [`crate::diff`] when they are absent.

use nalgebra::{DMatrix, DVector};

/// A real-valued function on `R^d`, with optional analytic derivatives.
pub trait ScalarField {
    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// An `R^d`-valued function on `R^d`, with optional analytic Jacobian.
pub trait VectorField {
    fn value(&self, x: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// Plain closures act as scalar fields without analytic derivatives.
impl<F> ScalarField for F
where
    F: Fn(&DVector<f64>) -> f64,
{
    fn value(&self, x: &DVector<f64>) -> f64 {
        self(x)
    }
}

/// A scalar field assembled from closures for value, gradient and Hessian.
pub struct AnalyticScalar<V, G, H>
where
    V: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
    H: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    pub value_fn: V,
    pub gradient_fn: G,
    pub hessian_fn: H,
}

impl<V, G, H> ScalarField for AnalyticScalar<V, G, H>
where
    V: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
    H: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value_fn)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some((self.gradient_fn)(x))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some((self.hessian_fn)(x))
    }
}

/// A vector field assembled from closures for value and Jacobian.
pub struct AnalyticVector<V, J>
where
    V: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    pub value_fn: V,
    pub jacobian_fn: J,
}

impl<V, J> VectorField for AnalyticVector<V, J>
where
    V: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.value_fn)(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some((self.jacobian_fn)(x))
    }
}

/// A closure-backed vector field without analytic Jacobian.
pub struct ClosureVector<V>(pub V)
where
    V: Fn(&DVector<f64>) -> DVector<f64>;

impl<V> VectorField for ClosureVector<V>
where
    V: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0(x)
    }
}
