//! Monge-Kantorovitch transport from `gamma_d` to `nu = L gamma_d` with
//! quadratic Cameron-Martin cost.
//!
//! Three solvers cover the desk-scale regimes:
//! - [`solve_quantile_1d`]: monotone rearrangement `T = F_nu^{-1} o F_gamma`
//!   in one dimension (the optimizer of the quadratic-cost problem there);
//! - [`solve_gaussian_linear`]: the closed-form map `T(x) = mean + Sigma^{1/2} x`
//!   when the target is Gaussian;
//! - [`solve_entropic`]: log-domain Sinkhorn with epsilon scaling and a
//!   barycentric-projection map for everything else.
//!
//! Every solution exposes the map `T`, the potential `phi` (up to an additive
//! constant, with `T = I + grad phi`), the mean Hessian `E[hess phi]`, and the
//! squared Wasserstein distance `E[|T(x) - x|^2]`.

mod entropic;
mod jacobian;
mod linear;
mod quantile;

pub use entropic::{solve_entropic, SampleSource, SinkhornParams};
pub use jacobian::{det2, jacobian_lambda};
pub use linear::solve_gaussian_linear;
pub use quantile::solve_quantile_1d;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::density::DensityModel;
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg::symmetrize;
use crate::quadrature::{pairwise_sum, QuadratureGrid};

/// Which solver produced a [`TransportSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportMethod {
    Quantile1d,
    GaussianLinear,
    Entropic,
}

impl TransportMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransportMethod::Quantile1d => "quantile_1d",
            TransportMethod::GaussianLinear => "gaussian_linear",
            TransportMethod::Entropic => "entropic",
        }
    }

    /// Closed-form solvers admit tight tolerances; the entropic solver gets
    /// the relaxed class.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, TransportMethod::Entropic)
    }
}

/// Solver bookkeeping carried along with a solution.
#[derive(Debug, Clone, Default)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Pushforward or marginal defect, in the solver's own metric.
    pub marginal_error: f64,
    pub converged: bool,
}

/// Method-specific data needed to invert or re-project the map.
#[derive(Clone)]
pub(crate) enum MethodData {
    Quantile(Arc<quantile::QuantileMap>),
    Linear {
        matrix: DMatrix<f64>,
        mean: DVector<f64>,
    },
    Entropic(Arc<entropic::EntropicPlan>),
}

/// A solved transport problem.
#[derive(Clone)]
pub struct TransportSolution {
    pub method: TransportMethod,
    pub map: Arc<dyn VectorField + Send + Sync>,
    /// Potential with `T = I + grad phi`, determined up to a constant.
    pub potential: Arc<dyn ScalarField + Send + Sync>,
    /// `E[hess phi]`, symmetric.
    pub mean_hessian: DMatrix<f64>,
    /// `E[|T(x) - x|^2]`, the paper-normalized squared distance.
    pub wasserstein_sq: f64,
    /// Node-indexed Sinkhorn duals `(f, g)` when the solver is entropic.
    pub dual_potentials: Option<(Vec<f64>, Vec<f64>)>,
    pub epsilon_final: Option<f64>,
    pub diagnostics: SolverDiagnostics,
    pub(crate) method_data: MethodData,
}

/// Requested solver, with `Auto` picking the best available oracle:
/// quantile at `d = 1`, the linear map for Gaussian targets, entropic
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Quantile,
    Gaussian,
    Entropic,
}

/// Solve with the requested method (or the auto rule).
pub fn solve(
    density: &DensityModel,
    grid: &QuadratureGrid,
    choice: MethodChoice,
    params: &SinkhornParams,
) -> Result<TransportSolution> {
    match choice {
        MethodChoice::Quantile => solve_quantile_1d(density, grid),
        MethodChoice::Gaussian => match density.as_gaussian() {
            Some((mean, cov)) => solve_gaussian_linear(&cov, &mean),
            None => Err(EngineError::Unsupported(
                "gaussian method requires a Gaussian target density".to_string(),
            )),
        },
        MethodChoice::Entropic => solve_entropic(density, grid, params),
        MethodChoice::Auto => {
            if density.dim() == 1 {
                solve_quantile_1d(density, grid)
            } else if let Some((mean, cov)) = density.as_gaussian() {
                solve_gaussian_linear(&cov, &mean)
            } else {
                solve_entropic(density, grid, params)
            }
        }
    }
}

/// `E_gamma[T(x) - x]`, the transport-side route to `E[grad phi]`.
pub fn displacement_mean(sol: &TransportSolution, grid: &QuadratureGrid) -> Result<DVector<f64>> {
    let d = grid.dim();
    let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d];
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let disp = sol.map.value(node) - node;
        for i in 0..d {
            if !disp[i].is_finite() {
                return Err(EngineError::NonFinite {
                    context: "transport displacement".to_string(),
                });
            }
            terms[i].push(w * disp[i]);
        }
    }
    Ok(DVector::from_iterator(d, terms.iter().map(|t| pairwise_sum(t))))
}

/// `E_gamma[(T(x) - x) (x) (T(x) - x)]`, the route to `E[grad phi (x) grad phi]`.
pub fn displacement_second_moment(
    sol: &TransportSolution,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    let d = grid.dim();
    let mut acc = DMatrix::zeros(d, d);
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let disp = sol.map.value(node) - node;
        acc += (&disp * disp.transpose()) * w;
    }
    Ok(symmetrize(&acc))
}

/// `E[hess phi]` by the Stein identity `E[(T(x) - x) (x) x]`, symmetrized.
///
/// Avoids differentiating the map, which matters for entropic solutions.
pub fn mean_potential_hessian(
    sol: &TransportSolution,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&stein_hessian_raw(sol, grid)?))
}

/// The un-symmetrized Stein estimate; its asymmetry is a map-quality
/// diagnostic for entropic solutions.
pub fn stein_hessian_raw(
    sol: &TransportSolution,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    let d = grid.dim();
    let mut acc = DMatrix::zeros(d, d);
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let disp = sol.map.value(node) - node;
        acc += (&disp * node.transpose()) * w;
    }
    Ok(acc)
}

/// `E[|T(x) - x|^2]` by quadrature.
pub fn wasserstein_sq(sol: &TransportSolution, grid: &QuadratureGrid) -> Result<f64> {
    let mut terms = Vec::with_capacity(grid.len());
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let disp = sol.map.value(node) - node;
        let v = disp.norm_squared();
        if !v.is_finite() {
            return Err(EngineError::NonFinite {
                context: "wasserstein integrand".to_string(),
            });
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

/// The inverse map `S` with `S(T(x)) = x`.
///
/// Quantile solutions invert by bisection on the monotone map, linear
/// solutions by the matrix inverse, entropic solutions by the reverse
/// barycentric projection of the plan.
pub fn inverse_map(
    sol: &TransportSolution,
    _grid: &QuadratureGrid,
) -> Result<Arc<dyn VectorField + Send + Sync>> {
    match &sol.method_data {
        MethodData::Quantile(map) => Ok(quantile::inverse_field(map.clone())),
        MethodData::Linear { matrix, mean } => {
            let lu = nalgebra::linalg::LU::new(matrix.clone());
            let inv = lu.try_inverse().ok_or_else(|| EngineError::NonInvertibleMap {
                reason: "linear part is singular".to_string(),
            })?;
            let mean = mean.clone();
            let field = crate::field::ClosureVector(move |y: &DVector<f64>| &inv * (y - &mean));
            Ok(Arc::new(field))
        }
        MethodData::Entropic(plan) => Ok(entropic::reverse_barycentric_field(plan.clone())),
    }
}
