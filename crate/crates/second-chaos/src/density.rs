//! Positive densities `L` with respect to the standard Gaussian measure.
//!
//! A [`DensityModel`] is normalized so `E[L] = 1` at construction; every
//! downstream margin divides by the mass anyway, so normalization makes the
//! reported quantities invariant under `L -> c L`. Closed-form families
//! carry the mean and second moment of `nu = L gamma_d` analytically, which
//! gives the moment computations in [`crate::chaos`] an independent route.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{EngineError, Result};
use crate::field::ScalarField;
use crate::hermite::wick_exp;
use crate::quadrature::{expect, QuadratureGrid};
use crate::space::GaussianSpace;

/// Which integrability condition the family certifies for `L`.
///
/// Square integrability implies `E[L log L] < infinity` here; a scaled
/// Gaussian needs every covariance eigenvalue `< 2` to be square integrable,
/// while the entropy condition holds for all Gaussian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrability {
    SquareIntegrable,
    LLogL,
    Uncertified,
}

impl Integrability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Integrability::SquareIntegrable => "L2",
            Integrability::LLogL => "LlogL",
            Integrability::Uncertified => "uncertified",
        }
    }
}

/// One Gaussian component `N(mean, cov)` viewed through its density with
/// respect to `gamma_d`.
#[derive(Clone)]
pub struct GaussianComponent {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det_cov: f64,
}

impl GaussianComponent {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(EngineError::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        let sym = (cov.clone() + cov.transpose()) * 0.5;
        let chol = Cholesky::new(sym.clone()).ok_or_else(|| {
            EngineError::invalid("cov", "covariance must be symmetric positive definite")
        })?;
        let log_det_cov = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(GaussianComponent {
            mean,
            cov: sym,
            chol,
            log_det_cov,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `log (d N(mean, cov) / d gamma_d)(x)`.
    fn log_density_wrt_gamma(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let solved = self.chol.solve(&diff);
        0.5 * x.norm_squared() - 0.5 * diff.dot(&solved) - 0.5 * self.log_det_cov
    }

    fn max_cov_eigenvalue(&self) -> f64 {
        self.cov.clone().symmetric_eigen().eigenvalues.max()
    }
}

/// The supported density families.
#[derive(Clone)]
pub enum DensityFamily {
    /// `L = 1`, i.e. `nu = gamma_d`.
    Uniform,
    /// Wick exponential `exp(<h, x> - |h|^2/2)`, i.e. `nu = N(h, I)`.
    WickShift { shift: DVector<f64> },
    /// `nu = N(mean, cov)`.
    ScaledGaussian { component: GaussianComponent },
    /// `nu = sum_k w_k N(mean_k, cov_k)` with normalized weights.
    GaussianMixture {
        weights: Vec<f64>,
        components: Vec<GaussianComponent>,
    },
    /// Arbitrary non-negative expression, normalized by quadrature.
    PointExpression {
        field: Arc<dyn ScalarField + Send + Sync>,
        norm: f64,
    },
}

/// A positive density with `E[L] = 1`.
#[derive(Clone)]
pub struct DensityModel {
    space: GaussianSpace,
    family: DensityFamily,
    integrability: Integrability,
    descriptor: String,
}

impl DensityModel {
    pub fn uniform(space: GaussianSpace) -> Self {
        DensityModel {
            space,
            family: DensityFamily::Uniform,
            integrability: Integrability::SquareIntegrable,
            descriptor: "uniform".to_string(),
        }
    }

    pub fn wick_shift(space: GaussianSpace, shift: DVector<f64>) -> Result<Self> {
        space.check_point(shift.as_slice())?;
        let descriptor = format!("wick_shift(h={:?})", shift.as_slice());
        Ok(DensityModel {
            space,
            family: DensityFamily::WickShift { shift },
            integrability: Integrability::SquareIntegrable,
            descriptor,
        })
    }

    pub fn scaled_gaussian(
        space: GaussianSpace,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<Self> {
        space.check_point(mean.as_slice())?;
        let component = GaussianComponent::new(mean, cov)?;
        let integrability = if component.max_cov_eigenvalue() < 2.0 {
            Integrability::SquareIntegrable
        } else {
            Integrability::LLogL
        };
        let descriptor = format!(
            "scaled_gaussian(mean={:?}, cov={:?})",
            component.mean.as_slice(),
            component.cov.as_slice()
        );
        Ok(DensityModel {
            space,
            family: DensityFamily::ScaledGaussian { component },
            integrability,
            descriptor,
        })
    }

    /// Convenience constructor for a diagonal covariance.
    pub fn scaled_gaussian_diag(
        space: GaussianSpace,
        mean: DVector<f64>,
        variances: DVector<f64>,
    ) -> Result<Self> {
        if variances.iter().any(|&v| v <= 0.0) {
            return Err(EngineError::invalid("variances", "must be positive"));
        }
        let cov = DMatrix::from_diagonal(&variances);
        Self::scaled_gaussian(space, mean, cov)
    }

    pub fn gaussian_mixture(
        space: GaussianSpace,
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covs: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != covs.len() {
            return Err(EngineError::invalid(
                "mixture",
                "weights, means and covariances must be non-empty and equal length",
            ));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(EngineError::invalid("weights", "must be positive"));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut components = Vec::with_capacity(means.len());
        for (mean, cov) in means.into_iter().zip(covs) {
            space.check_point(mean.as_slice())?;
            components.push(GaussianComponent::new(mean, cov)?);
        }
        let integrability = if components
            .iter()
            .all(|c| c.max_cov_eigenvalue() < 2.0)
        {
            Integrability::SquareIntegrable
        } else {
            Integrability::LLogL
        };
        let descriptor = format!("gaussian_mixture(k={})", components.len());
        Ok(DensityModel {
            space,
            family: DensityFamily::GaussianMixture {
                weights,
                components,
            },
            integrability,
            descriptor,
        })
    }

    /// Normalize an arbitrary non-negative expression against the grid.
    ///
    /// The expression is probed at every node: a negative value is a hard
    /// error, and the quadrature mass must be positive.
    pub fn from_field(
        space: GaussianSpace,
        field: Arc<dyn ScalarField + Send + Sync>,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        if grid.dim() != space.dim() {
            return Err(EngineError::DimensionMismatch {
                expected: space.dim(),
                got: grid.dim(),
            });
        }
        for node in grid.nodes() {
            let v = field.value(node);
            if !v.is_finite() {
                return Err(EngineError::NonFinite {
                    context: "density expression at a grid node".to_string(),
                });
            }
            if v < 0.0 {
                return Err(EngineError::NegativeDensity {
                    point: node.as_slice().to_vec(),
                    value: v,
                });
            }
        }
        let raw = field.clone();
        let norm = expect(&move |x: &DVector<f64>| raw.value(x), grid)?;
        if norm <= 0.0 {
            return Err(EngineError::NonPositiveMass { mass: norm });
        }
        Ok(DensityModel {
            space,
            family: DensityFamily::PointExpression { field, norm },
            integrability: Integrability::Uncertified,
            descriptor: "point_expression".to_string(),
        })
    }

    pub fn space(&self) -> GaussianSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn family(&self) -> &DensityFamily {
        &self.family
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// The normalized density value `L(x)`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.family {
            DensityFamily::Uniform => 1.0,
            DensityFamily::WickShift { shift } => wick_exp(shift, x),
            DensityFamily::ScaledGaussian { component } => {
                component.log_density_wrt_gamma(x).exp()
            }
            DensityFamily::GaussianMixture {
                weights,
                components,
            } => {
                // log-sum-exp over components
                let logs: Vec<f64> = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w.ln() + c.log_density_wrt_gamma(x))
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return 0.0;
                }
                let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
                (top + sum.ln()).exp()
            }
            DensityFamily::PointExpression { field, norm } => field.value(x) / norm,
        }
    }

    /// Mean and second moment of `nu = L gamma_d`, when the family knows them
    /// in closed form.
    pub fn target_moments(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim();
        match &self.family {
            DensityFamily::Uniform => Some((DVector::zeros(d), DMatrix::identity(d, d))),
            DensityFamily::WickShift { shift } => {
                let second = DMatrix::identity(d, d) + shift * shift.transpose();
                Some((shift.clone(), second))
            }
            DensityFamily::ScaledGaussian { component } => {
                let second = &component.cov + component.mean() * component.mean().transpose();
                Some((component.mean.clone(), second))
            }
            DensityFamily::GaussianMixture {
                weights,
                components,
            } => {
                let mut mean = DVector::zeros(d);
                let mut second = DMatrix::zeros(d, d);
                for (w, c) in weights.iter().zip(components) {
                    mean += c.mean() * *w;
                    second += (&c.cov + c.mean() * c.mean().transpose()) * *w;
                }
                Some((mean, second))
            }
            DensityFamily::PointExpression { .. } => None,
        }
    }

    /// `(mean, cov)` when `nu` is a single Gaussian; drives the `auto`
    /// transport method selection.
    pub fn as_gaussian(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim();
        match &self.family {
            DensityFamily::Uniform => Some((DVector::zeros(d), DMatrix::identity(d, d))),
            DensityFamily::WickShift { shift } => {
                Some((shift.clone(), DMatrix::identity(d, d)))
            }
            DensityFamily::ScaledGaussian { component } => {
                Some((component.mean.clone(), component.cov.clone()))
            }
            _ => None,
        }
    }

    /// Mixture view `(weights, means, covs)` of the Gaussian families.
    pub fn as_mixture(&self) -> Option<(Vec<f64>, Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        let d = self.dim();
        match &self.family {
            DensityFamily::Uniform => Some((
                vec![1.0],
                vec![DVector::zeros(d)],
                vec![DMatrix::identity(d, d)],
            )),
            DensityFamily::WickShift { shift } => Some((
                vec![1.0],
                vec![shift.clone()],
                vec![DMatrix::identity(d, d)],
            )),
            DensityFamily::ScaledGaussian { component } => Some((
                vec![1.0],
                vec![component.mean.clone()],
                vec![component.cov.clone()],
            )),
            DensityFamily::GaussianMixture {
                weights,
                components,
            } => Some((
                weights.clone(),
                components.iter().map(|c| c.mean.clone()).collect(),
                components.iter().map(|c| c.cov.clone()).collect(),
            )),
            DensityFamily::PointExpression { .. } => None,
        }
    }

    /// Quadrature check of the normalization `E[L] = 1`.
    pub fn check_mass(&self, grid: &QuadratureGrid) -> Result<f64> {
        let me = self.clone();
        expect(&move |x: &DVector<f64>| me.value(x), grid)
    }
}

/// A seeded random Gaussian mixture: up to `max_components` components with
/// means in `[-2, 2]^d` and per-axis variances in `[0.25, 1.5]`.
pub fn random_mixture<R: Rng>(space: GaussianSpace, rng: &mut R, max_components: usize) -> DensityModel {
    let d = space.dim();
    let k = rng.gen_range(1..=max_components.max(1));
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for _ in 0..k {
        weights.push(rng.gen_range(0.2..1.0));
        means.push(DVector::from_iterator(
            d,
            (0..d).map(|_| rng.gen_range(-2.0..2.0)),
        ));
        let vars = DVector::from_iterator(d, (0..d).map(|_| rng.gen_range(0.25..1.5)));
        covs.push(DMatrix::from_diagonal(&vars));
    }
    DensityModel::gaussian_mixture(space, weights, means, covs)
        .expect("random mixture parameters are always valid")
}
