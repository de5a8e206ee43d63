//! One-dimensional transport by monotone rearrangement.
//!
//! In one dimension the quadratic-cost optimizer between `gamma_1` and
//! `nu = L gamma_1` is `T = F_nu^{-1} o Phi`. For the Gaussian families the
//! target cdf is a mixture of normal cdfs and `T(x)` is found by bisection
//! inside the rigorous bracket `[min_k(m_k + s_k x), max_k(m_k + s_k x)]`;
//! tail comparisons run on survival functions so nothing cancels. Arbitrary
//! positive expressions fall back to a tabulated cdf.
//!
//! The map derivative has the closed form `T'(x) = phi(x) / f_nu(T(x))`
//! (density quotient at matched quantiles), which gives the potential
//! analytic first and second derivatives: `phi' = T - id`, `phi'' = T' - 1`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::density::DensityModel;
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, VectorField};
use crate::normal::{std_normal_cdf, std_normal_log_pdf, std_normal_sf};
use crate::quadrature::{pairwise_sum, QuadratureGrid};
use crate::transport::{
    MethodData, SolverDiagnostics, TransportMethod, TransportSolution,
};

/// Target distribution on the line, in a form the rearrangement can invert.
enum Target {
    /// Gaussian mixture: component weights, means, standard deviations.
    Mixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
    /// Tabulated cdf of `L(x) phi(x)` on a uniform grid.
    Table {
        xs: Vec<f64>,
        cdf: Vec<f64>,
        pdf: Vec<f64>,
    },
}

impl Target {
    fn cdf(&self, q: f64) -> f64 {
        match self {
            Target::Mixture { weights, means, sds } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * std_normal_cdf((q - m) / s))
                .sum(),
            Target::Table { xs, cdf, .. } => table_lookup(xs, cdf, q),
        }
    }

    fn survival(&self, q: f64) -> f64 {
        match self {
            Target::Mixture { weights, means, sds } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * std_normal_sf((q - m) / s))
                .sum(),
            Target::Table { xs, cdf, .. } => 1.0 - table_lookup(xs, cdf, q),
        }
    }

    fn log_pdf(&self, q: f64) -> f64 {
        match self {
            Target::Mixture { weights, means, sds } => {
                let logs: Vec<f64> = weights
                    .iter()
                    .zip(means)
                    .zip(sds)
                    .map(|((w, m), s)| w.ln() - s.ln() + std_normal_log_pdf((q - m) / s))
                    .collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
            Target::Table { xs, pdf, .. } => table_lookup(xs, pdf, q).max(f64::MIN_POSITIVE).ln(),
        }
    }

    /// Rigorous bracket for the quantile matched to the standard-normal
    /// point `x`: component quantiles envelope the mixture quantile.
    fn bracket(&self, x: f64) -> (f64, f64) {
        match self {
            Target::Mixture { means, sds, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (m, s) in means.iter().zip(sds) {
                    let q = m + s * x;
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
                (lo, hi)
            }
            Target::Table { xs, .. } => (xs[0], *xs.last().unwrap()),
        }
    }
}

fn table_lookup(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    if q <= xs[0] {
        return ys[0];
    }
    if q >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let idx = match xs.binary_search_by(|v| v.partial_cmp(&q).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let t = (q - x0) / (x1 - x0);
    ys[idx - 1] * (1.0 - t) + ys[idx] * t
}

/// Extent and resolution of the tabulated cdf for point expressions.
const TABLE_RANGE: f64 = 12.0;
const TABLE_STEPS: usize = 9600;

fn build_table(density: &DensityModel) -> Target {
    let n = TABLE_STEPS;
    let h = 2.0 * TABLE_RANGE / n as f64;
    let mut xs = Vec::with_capacity(n + 1);
    let mut pdf = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = -TABLE_RANGE + i as f64 * h;
        let p = density.value(&DVector::from_vec(vec![x])) * std_normal_log_pdf(x).exp();
        xs.push(x);
        pdf.push(p.max(0.0));
    }
    // cumulative trapezoid, then normalize so the table is a proper cdf
    let mut cdf = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..=n {
        acc += 0.5 * (pdf[i - 1] + pdf[i]) * h;
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap();
    for (c, p) in cdf.iter_mut().zip(pdf.iter_mut()) {
        *c /= total;
        *p /= total;
    }
    Target::Table { xs, cdf, pdf }
}

/// The monotone rearrangement `T` and its analytic machinery.
pub struct QuantileMap {
    target: Target,
    potential_table: OnceLock<PotentialTable>,
}

struct PotentialTable {
    xs: Vec<f64>,
    values: Vec<f64>,
    /// displacement and derivative at the table edges, for extrapolation
    edge: [(f64, f64, f64); 2],
}

const BISECTION_STEPS: usize = 200;

impl QuantileMap {
    fn from_density(density: &DensityModel) -> Result<Self> {
        if density.dim() != 1 {
            return Err(EngineError::Unsupported(
                "quantile coupling requires dimension 1".to_string(),
            ));
        }
        let target = match density.as_mixture() {
            Some((weights, means, covs)) => {
                let sds: Vec<f64> = covs.iter().map(|c| c[(0, 0)].sqrt()).collect();
                let means: Vec<f64> = means.iter().map(|m| m[0]).collect();
                Target::Mixture { weights, means, sds }
            }
            None => build_table(density),
        };
        Ok(QuantileMap {
            target,
            potential_table: OnceLock::new(),
        })
    }

    /// `T(x) = F_nu^{-1}(Phi(x))`.
    pub fn forward(&self, x: f64) -> f64 {
        let (mut lo, mut hi) = self.target.bracket(x);
        if hi - lo < 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            // single-component fast path: the envelope is the answer
            return 0.5 * (lo + hi);
        }
        lo -= 1e-9 * (1.0 + lo.abs());
        hi += 1e-9 * (1.0 + hi.abs());
        // compare on the tail that keeps relative precision
        let upper_tail = x > 0.0;
        let target_tail = if upper_tail {
            std_normal_sf(x)
        } else {
            std_normal_cdf(x)
        };
        if target_tail == 0.0 {
            // beyond double-precision tails; the envelope edge is the
            // asymptotically exact answer
            return if upper_tail { hi } else { lo };
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let below = if upper_tail {
                self.target.survival(mid) > target_tail
            } else {
                self.target.cdf(mid) < target_tail
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `T'(x) = phi(x) / f_nu(T(x))`, evaluated in log space so the far
    /// tails stay finite.
    pub fn derivative(&self, x: f64) -> f64 {
        let image = self.forward(x);
        let log_ratio = std_normal_log_pdf(x) - self.target.log_pdf(image);
        log_ratio.exp()
    }

    /// `S(y)` with `S(T(x)) = x`, by bisection on the monotone `T`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut guard = 0;
        while self.forward(lo) > y {
            lo = lo * 2.0 - 1.0;
            guard += 1;
            if guard > 80 {
                return Err(EngineError::NonInvertibleMap {
                    reason: format!("bracketing failed for y = {y}"),
                });
            }
        }
        guard = 0;
        while self.forward(hi) < y {
            hi = hi * 2.0 + 1.0;
            guard += 1;
            if guard > 80 {
                return Err(EngineError::NonInvertibleMap {
                    reason: format!("bracketing failed for y = {y}"),
                });
            }
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.forward(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `phi(x) = int_0^x (T(s) - s) ds` from a cached cumulative-Simpson
    /// table; only the level is approximate, the derivatives used by the
    /// checks are analytic.
    pub fn potential(&self, x: f64) -> f64 {
        let table = self.potential_table.get_or_init(|| self.build_potential());
        let (edge_x, (disp, value, slope)) = if x < table.xs[0] {
            (-POTENTIAL_RANGE, table.edge[0])
        } else if x > *table.xs.last().unwrap() {
            (POTENTIAL_RANGE, table.edge[1])
        } else {
            return table_lookup(&table.xs, &table.values, x);
        };
        // quadratic extension: integrate the linearized displacement
        let dx = x - edge_x;
        value + disp * dx + 0.5 * slope * dx * dx
    }

    fn build_potential(&self) -> PotentialTable {
        let n = POTENTIAL_STEPS;
        let h = 2.0 * POTENTIAL_RANGE / n as f64;
        let mut xs = Vec::with_capacity(n + 1);
        let mut disp = Vec::with_capacity(2 * n + 1);
        for i in 0..=(2 * n) {
            let x = -POTENTIAL_RANGE + i as f64 * (h / 2.0);
            disp.push(self.forward(x) - x);
            if i % 2 == 0 {
                xs.push(x);
            }
        }
        // cumulative Simpson from the left edge
        let mut values = vec![0.0; n + 1];
        for i in 1..=n {
            let a = disp[2 * (i - 1)];
            let m = disp[2 * i - 1];
            let b = disp[2 * i];
            values[i] = values[i - 1] + (h / 6.0) * (a + 4.0 * m + b);
        }
        // shift so phi(0) = 0
        let at_zero = table_lookup(&xs, &values, 0.0);
        for v in values.iter_mut() {
            *v -= at_zero;
        }
        let lo_slope = self.derivative(-POTENTIAL_RANGE) - 1.0;
        let hi_slope = self.derivative(POTENTIAL_RANGE) - 1.0;
        let edge = [
            (disp[0], values[0], lo_slope),
            (disp[2 * n], values[n], hi_slope),
        ];
        PotentialTable { xs, values, edge }
    }
}

const POTENTIAL_RANGE: f64 = 12.0;
const POTENTIAL_STEPS: usize = 3072;

struct QuantileMapField(Arc<QuantileMap>);

impl VectorField for QuantileMapField {
    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![self.0.forward(x[0])])
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.0.derivative(x[0])))
    }
}

struct QuantilePotentialField(Arc<QuantileMap>);

impl ScalarField for QuantilePotentialField {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0.potential(x[0])
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![self.0.forward(x[0]) - x[0]]))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.0.derivative(x[0]) - 1.0))
    }
}

struct QuantileInverseField(Arc<QuantileMap>);

impl VectorField for QuantileInverseField {
    fn value(&self, y: &DVector<f64>) -> DVector<f64> {
        let v = self.0.inverse(y[0]).unwrap_or(f64::NAN);
        DVector::from_vec(vec![v])
    }
}

pub(crate) fn inverse_field(map: Arc<QuantileMap>) -> Arc<dyn VectorField + Send + Sync> {
    Arc::new(QuantileInverseField(map))
}

/// Solve the 1D problem by monotone rearrangement.
///
/// The returned diagnostics carry the pushforward defect: the first and
/// second moments of `T` under `gamma_1` compared to the target moments.
pub fn solve_quantile_1d(
    density: &DensityModel,
    grid: &QuadratureGrid,
) -> Result<TransportSolution> {
    if density.dim() != 1 || grid.dim() != 1 {
        return Err(EngineError::Unsupported(
            "quantile coupling requires dimension 1".to_string(),
        ));
    }
    let map = Arc::new(QuantileMap::from_density(density)?);

    // quadrature sweeps: displacement moments and pushforward moments
    let n = grid.len();
    let mut w2_terms = Vec::with_capacity(n);
    let mut hess_terms = Vec::with_capacity(n);
    let mut push1 = Vec::with_capacity(n);
    let mut push2 = Vec::with_capacity(n);
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let x = node[0];
        let t = map.forward(x);
        if !t.is_finite() {
            return Err(EngineError::NonFinite {
                context: "quantile map at a grid node".to_string(),
            });
        }
        let disp = t - x;
        w2_terms.push(w * disp * disp);
        hess_terms.push(w * disp * x);
        push1.push(w * t);
        push2.push(w * t * t);
    }
    let wasserstein_sq = pairwise_sum(&w2_terms);
    let mean_hessian = DMatrix::from_element(1, 1, pairwise_sum(&hess_terms));

    // pushforward check against the target moments
    let (t1, t2) = match density.target_moments() {
        Some((mean, second)) => (mean[0], second[(0, 0)]),
        None => {
            let lc = density.clone();
            let m1 = crate::quadrature::expect(
                &move |x: &DVector<f64>| lc.value(x) * x[0],
                grid,
            )?;
            let lc = density.clone();
            let m2 = crate::quadrature::expect(
                &move |x: &DVector<f64>| lc.value(x) * x[0] * x[0],
                grid,
            )?;
            (m1, m2)
        }
    };
    let pushforward_error = (pairwise_sum(&push1) - t1)
        .abs()
        .max((pairwise_sum(&push2) - t2).abs());

    Ok(TransportSolution {
        method: TransportMethod::Quantile1d,
        map: Arc::new(QuantileMapField(map.clone())),
        potential: Arc::new(QuantilePotentialField(map.clone())),
        mean_hessian,
        wasserstein_sq,
        dual_potentials: None,
        epsilon_final: None,
        diagnostics: SolverDiagnostics {
            iterations: 0,
            marginal_error: pushforward_error,
            converged: pushforward_error <= 1e-6,
        },
        method_data: MethodData::Quantile(map),
    })
}
