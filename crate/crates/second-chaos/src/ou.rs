//! Ornstein-Uhlenbeck semigroup (Mehler form) and its generator.
//!
//! `P_t f(x) = E_y[f(e^{-t} x + sqrt(1 - e^{-2t}) y)]` with `y ~ gamma_d`,
//! and the generator is the number operator
//! `L f = <x, grad f> - trace(hess f)`, so `L h_alpha = |alpha| h_alpha` and
//! `P_t h_alpha = e^{-|alpha| t} h_alpha`.

use nalgebra::DVector;

use crate::diff::{gradient_of, hessian_of};
use crate::error::{EngineError, Result};
use crate::field::ScalarField;
use crate::quadrature::{expect, QuadratureGrid};

/// Apply `P_t` at a single point by the Mehler average over `grid`.
///
/// `P_0 f = f` exactly (no quadrature involved at `t = 0`).
pub fn ou_apply(
    f: &dyn ScalarField,
    t: f64,
    x: &DVector<f64>,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if t < 0.0 {
        return Err(EngineError::invalid("t", "OU time must be >= 0"));
    }
    if x.len() != grid.dim() {
        return Err(EngineError::DimensionMismatch {
            expected: grid.dim(),
            got: x.len(),
        });
    }
    if t == 0.0 {
        return Ok(f.value(x));
    }
    let decay = (-t).exp();
    let spread = (1.0 - decay * decay).max(0.0).sqrt();
    let center = x * decay;
    let integrand = move |y: &DVector<f64>| f.value(&(&center + y * spread));
    expect(&integrand, grid)
}

/// Generator value `L f(x) = <x, grad f(x)> - trace(hess f(x))`.
pub fn ou_generator(f: &dyn ScalarField, x: &DVector<f64>) -> Result<f64> {
    let grad = gradient_of(f, x)?;
    let hess = hessian_of(f, x)?;
    Ok(x.dot(&grad) - hess.trace())
}
