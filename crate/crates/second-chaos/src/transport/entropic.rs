//! Entropically regularized transport: log-domain Sinkhorn with epsilon
//! scaling on discrete marginals, and barycentric projection of the plan as
//! the map estimate.
//!
//! The internal cost is `c(x, y) = |x - y|^2 / 2`; the reported squared
//! distance multiplies the optimal cost by 2 to match the `|x - y|^2`
//! normalization used everywhere else. Marginals come either from the
//! quadrature grid (source: gamma weights, target: `L`-reweighted gamma
//! weights) or from seeded Monte Carlo samples.
//!
//! Barycentric projections of quantized plans carry a slope bias quadratic
//! in the node spacing (each conditional mean is pulled toward heavier
//! nodes), so the target side runs on a refined grid by default and the
//! solver's accuracy class stays the relaxed one everywhere downstream.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::DensityModel;
use crate::error::{EngineError, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg::psd_sqrt;
use crate::quadrature::QuadratureGrid;
use crate::transport::{
    MethodData, SolverDiagnostics, TransportMethod, TransportSolution,
};

/// Where the discrete marginals come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSource {
    /// Source: grid nodes with gamma weights; target: a refined grid
    /// reweighted by the density and renormalized.
    QuadratureNodes,
    /// Seeded draws from `gamma_d` and from the target (Gaussian families
    /// only); uniform weights.
    MonteCarlo {
        source_samples: usize,
        target_samples: usize,
        seed: u64,
    },
}

/// Sinkhorn schedule and stopping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornParams {
    pub epsilon_start: f64,
    pub epsilon_final: f64,
    pub epsilon_ratio: f64,
    /// Iteration cap per epsilon level.
    pub max_iterations: usize,
    /// L1 marginal tolerance.
    pub marginal_tol: f64,
    pub sample_source: SampleSource,
    /// Per-axis degree multiplier for the target support.
    pub target_refinement: usize,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        SinkhornParams {
            epsilon_start: 1.0,
            epsilon_final: 0.005,
            epsilon_ratio: 0.7,
            max_iterations: 2000,
            marginal_tol: 1e-7,
            sample_source: SampleSource::QuadratureNodes,
            target_refinement: 2,
        }
    }
}

impl SinkhornParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_final > 0.0 && self.epsilon_start >= self.epsilon_final) {
            return Err(EngineError::invalid(
                "epsilon",
                "schedule must be positive and decreasing",
            ));
        }
        if !(self.epsilon_ratio > 0.0 && self.epsilon_ratio < 1.0) {
            return Err(EngineError::invalid("epsilon_ratio", "must lie in (0, 1)"));
        }
        if self.marginal_tol <= 0.0 {
            return Err(EngineError::invalid("marginal_tol", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(EngineError::invalid("max_iterations", "must be >= 1"));
        }
        if self.target_refinement == 0 {
            return Err(EngineError::invalid("target_refinement", "must be >= 1"));
        }
        Ok(())
    }

    fn schedule(&self) -> Vec<f64> {
        let mut levels = Vec::new();
        let mut eps = self.epsilon_start;
        while eps > self.epsilon_final * (1.0 + 1e-12) {
            levels.push(eps);
            eps *= self.epsilon_ratio;
        }
        levels.push(self.epsilon_final);
        levels
    }
}

/// The converged discrete plan, kept for barycentric projections.
pub struct EntropicPlan {
    pub(crate) dim: usize,
    pub(crate) source_points: Vec<DVector<f64>>,
    pub(crate) target_points: Vec<DVector<f64>>,
    pub(crate) source_weights: Vec<f64>,
    pub(crate) target_weights: Vec<f64>,
    pub(crate) f: Vec<f64>,
    pub(crate) g: Vec<f64>,
    pub(crate) epsilon: f64,
    cost: Vec<f64>, // row-major |source| x |target|, c = |x-y|^2/2
}

impl EntropicPlan {
    fn n(&self) -> usize {
        self.source_points.len()
    }

    fn m(&self) -> usize {
        self.target_points.len()
    }

    /// `pi_ij = a_i b_j exp((f_i + g_j - C_ij) / eps)`.
    fn plan_entry(&self, i: usize, j: usize, la: f64, lb: f64) -> f64 {
        (la + lb + (self.f[i] + self.g[j] - self.cost[i * self.m() + j]) / self.epsilon).exp()
    }
}

/// Two-pass log-sum-exp of `lw[k] + (dual[k] - cost_row[k]) / eps`.
fn lse_update(cost_row: &[f64], dual: &[f64], lw: &[f64], eps: f64) -> f64 {
    let mut top = f64::NEG_INFINITY;
    for k in 0..cost_row.len() {
        let v = lw[k] + (dual[k] - cost_row[k]) / eps;
        if v > top {
            top = v;
        }
    }
    if top == f64::NEG_INFINITY || !top.is_finite() {
        return top;
    }
    let mut sum = 0.0;
    for k in 0..cost_row.len() {
        let v = lw[k] + (dual[k] - cost_row[k]) / eps;
        sum += (v - top).exp();
    }
    top + sum.ln()
}

struct Marginals {
    source_points: Vec<DVector<f64>>,
    target_points: Vec<DVector<f64>>,
    source_weights: Vec<f64>,
    target_weights: Vec<f64>,
}

fn marginals_from_grid(
    density: &DensityModel,
    grid: &QuadratureGrid,
    target_refinement: usize,
) -> Result<Marginals> {
    let source_points: Vec<DVector<f64>> = grid.nodes().to_vec();
    let source_weights: Vec<f64> = grid.weights().to_vec();
    let target_grid = if target_refinement > 1 {
        Some(QuadratureGrid::build(
            grid.dim(),
            grid.degree() * target_refinement,
        )?)
    } else {
        None
    };
    let tgrid = target_grid.as_ref().unwrap_or(grid);
    let mut target_weights: Vec<f64> = Vec::with_capacity(tgrid.len());
    for (node, &w) in tgrid.nodes().iter().zip(tgrid.weights()) {
        let v = density.value(node);
        if !v.is_finite() || v < 0.0 {
            return Err(EngineError::NegativeDensity {
                point: node.as_slice().to_vec(),
                value: v,
            });
        }
        target_weights.push(w * v);
    }
    let total: f64 = target_weights.iter().sum();
    if total <= 0.0 {
        return Err(EngineError::NonPositiveMass { mass: total });
    }
    for w in target_weights.iter_mut() {
        *w /= total;
    }
    Ok(Marginals {
        target_points: tgrid.nodes().to_vec(),
        source_points,
        source_weights,
        target_weights,
    })
}

fn marginals_from_samples(
    density: &DensityModel,
    source_samples: usize,
    target_samples: usize,
    seed: u64,
) -> Result<Marginals> {
    let d = density.dim();
    let (weights, means, covs) = density.as_mixture().ok_or_else(|| {
        EngineError::Unsupported(
            "Monte Carlo marginals need a Gaussian-family density".to_string(),
        )
    })?;
    let roots: Vec<DMatrix<f64>> = covs
        .iter()
        .map(|c| psd_sqrt(c, 1e-10))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = rand::distributions::Uniform::new(0.0f64, 1.0);
    let gauss = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller on uniform draws keeps us independent of rand_distr
        let u1: f64 = uniform.sample(rng).max(f64::MIN_POSITIVE);
        let u2: f64 = uniform.sample(rng);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut source_points = Vec::with_capacity(source_samples);
    for _ in 0..source_samples {
        source_points.push(DVector::from_iterator(d, (0..d).map(|_| gauss(&mut rng))));
    }
    let mut target_points = Vec::with_capacity(target_samples);
    for _ in 0..target_samples {
        let pick: f64 = rng.gen_range(0.0..1.0);
        let mut acc = 0.0;
        let mut which = 0;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            which = k;
            if pick <= acc {
                break;
            }
        }
        let z = DVector::from_iterator(d, (0..d).map(|_| gauss(&mut rng)));
        target_points.push(&means[which] + &roots[which] * z);
    }
    Ok(Marginals {
        source_weights: vec![1.0 / source_samples as f64; source_samples],
        target_weights: vec![1.0 / target_samples as f64; target_samples],
        source_points,
        target_points,
    })
}

/// Solve by Sinkhorn iterations; returns the barycentric-projection map.
///
/// Non-convergence within the iteration caps is not fatal: the best iterate
/// comes back with `diagnostics.converged = false`.
pub fn solve_entropic(
    density: &DensityModel,
    grid: &QuadratureGrid,
    params: &SinkhornParams,
) -> Result<TransportSolution> {
    params.validate()?;
    let d = density.dim();
    if d > 3 {
        return Err(EngineError::Unsupported(
            "entropic solver is capped at dimension 3".to_string(),
        ));
    }
    if grid.dim() != d {
        return Err(EngineError::DimensionMismatch {
            expected: d,
            got: grid.dim(),
        });
    }
    let marginals = match &params.sample_source {
        SampleSource::QuadratureNodes => {
            marginals_from_grid(density, grid, params.target_refinement)?
        }
        SampleSource::MonteCarlo {
            source_samples,
            target_samples,
            seed,
        } => marginals_from_samples(density, *source_samples, *target_samples, *seed)?,
    };
    let n = marginals.source_points.len();
    let m = marginals.target_points.len();
    let la: Vec<f64> = marginals.source_weights.iter().map(|w| w.ln()).collect();
    let lb: Vec<f64> = marginals.target_weights.iter().map(|w| w.ln()).collect();

    let mut cost = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            let diff = &marginals.source_points[i] - &marginals.target_points[j];
            cost[i * m + j] = 0.5 * diff.norm_squared();
        }
    }
    // transposed cost for cache-friendly column updates
    let mut cost_t = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            cost_t[j * n + i] = cost[i * m + j];
        }
    }

    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut total_iterations = 0usize;
    let mut converged_last_level = false;
    let schedule = params.schedule();
    let last_level = schedule.len() - 1;

    // intermediate levels only warm-start the next one; full effort is
    // reserved for the final epsilon
    const WARMUP_ITERATIONS: usize = 120;
    const WARMUP_TOL_FACTOR: f64 = 10.0;

    for (level, &eps) in schedule.iter().enumerate() {
        converged_last_level = false;
        let (iter_cap, tol) = if level == last_level {
            (params.max_iterations, params.marginal_tol)
        } else {
            (
                params.max_iterations.min(WARMUP_ITERATIONS),
                params.marginal_tol * WARMUP_TOL_FACTOR,
            )
        };
        for iter in 0..iter_cap {
            total_iterations += 1;
            // f update; the pre-update row defect doubles as the
            // convergence measure for the previous (f, g) pair
            let new_f: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| -eps * lse_update(&cost[i * m..(i + 1) * m], &g, &lb, eps))
                .collect();
            let row_err: f64 = (0..n)
                .map(|i| {
                    marginals.source_weights[i] * ((f[i] - new_f[i]) / eps).exp_m1().abs()
                })
                .sum();
            f = new_f;
            let new_g: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|j| -eps * lse_update(&cost_t[j * n..(j + 1) * n], &f, &la, eps))
                .collect();
            g = new_g;
            if row_err < tol && iter > 0 {
                converged_last_level = true;
                break;
            }
        }
    }

    let epsilon = params.epsilon_final;
    let plan = EntropicPlan {
        dim: d,
        source_points: marginals.source_points,
        target_points: marginals.target_points,
        source_weights: marginals.source_weights,
        target_weights: marginals.target_weights,
        f,
        g,
        epsilon,
        cost,
    };

    // plan sums: marginal defects, transport cost, row barycenters
    let mut row_defect = 0.0f64;
    let mut col_sums = vec![0.0f64; m];
    let mut plan_cost = 0.0f64;
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row_sum = 0.0;
        let mut image = DVector::zeros(d);
        for j in 0..m {
            let p = plan.plan_entry(i, j, la[i], lb[j]);
            row_sum += p;
            col_sums[j] += p;
            plan_cost += p * plan.cost[i * m + j];
            image += &plan.target_points[j] * p;
        }
        row_defect += (row_sum - plan.source_weights[i]).abs();
        if row_sum > 0.0 {
            image /= row_sum;
        } else {
            image = plan.source_points[i].clone();
        }
        images.push(image);
    }
    let col_defect: f64 = col_sums
        .iter()
        .zip(&plan.target_weights)
        .map(|(c, b)| (c - b).abs())
        .sum();
    let marginal_error = row_defect.max(col_defect);

    let wasserstein_sq = 2.0 * plan_cost;

    // Stein estimate of E[hess phi] on the discrete source marginal
    let mut hessian = DMatrix::zeros(d, d);
    for i in 0..n {
        let disp = &images[i] - &plan.source_points[i];
        hessian += (&disp * plan.source_points[i].transpose()) * plan.source_weights[i];
    }
    let mean_hessian = crate::linalg::symmetrize(&hessian);

    let potential_values: Vec<f64> = plan.f.iter().map(|v| -v).collect();
    let map_field = NodeMap::new(d, plan.source_points.clone(), images.clone());
    let potential_field = EntropicPotential {
        values: NodeScalar::new(d, plan.source_points.clone(), potential_values),
        displacement: NodeMap::new(
            d,
            plan.source_points.clone(),
            images
                .iter()
                .zip(&plan.source_points)
                .map(|(t, x)| t - x)
                .collect(),
        ),
    };
    let dual = Some((plan.f.clone(), plan.g.clone()));
    let diagnostics = SolverDiagnostics {
        iterations: total_iterations,
        marginal_error,
        converged: converged_last_level,
    };

    Ok(TransportSolution {
        method: TransportMethod::Entropic,
        map: Arc::new(map_field),
        potential: Arc::new(potential_field),
        mean_hessian,
        wasserstein_sq,
        dual_potentials: dual,
        epsilon_final: Some(epsilon),
        diagnostics,
        method_data: MethodData::Entropic(Arc::new(plan)),
    })
}

/// Reverse barycentric projection `S(y_j) = sum_i x_i pi_ij / sum_i pi_ij`,
/// interpolated between target nodes.
pub(crate) fn reverse_barycentric_field(
    plan: Arc<EntropicPlan>,
) -> Arc<dyn VectorField + Send + Sync> {
    let n = plan.n();
    let m = plan.m();
    let d = plan.dim;
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut col_sum = 0.0;
        let mut image = DVector::zeros(d);
        for i in 0..n {
            let p = plan.plan_entry(
                i,
                j,
                plan.source_weights[i].ln(),
                plan.target_weights[j].ln(),
            );
            col_sum += p;
            image += &plan.source_points[i] * p;
        }
        if col_sum > 0.0 {
            image /= col_sum;
        } else {
            image = plan.target_points[j].clone();
        }
        images.push(image);
    }
    Arc::new(NodeMap::new(d, plan.target_points.clone(), images))
}

/// Vector field defined by values at scattered nodes: piecewise-linear in
/// one dimension, nearest-node otherwise.
struct NodeMap {
    dim: usize,
    points: Vec<DVector<f64>>,
    images: Vec<DVector<f64>>,
}

impl NodeMap {
    fn new(dim: usize, mut points: Vec<DVector<f64>>, mut images: Vec<DVector<f64>>) -> Self {
        if dim == 1 {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap());
            points = order.iter().map(|&i| points[i].clone()).collect();
            images = order.iter().map(|&i| images[i].clone()).collect();
        }
        NodeMap { dim, points, images }
    }

    /// Piecewise slope of the first component at `x` (1D only).
    fn slope_1d(&self, x: f64) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let seg = if x <= self.points[0][0] {
            0
        } else if x >= self.points[n - 1][0] {
            n - 2
        } else {
            match self
                .points
                .binary_search_by(|p| p[0].partial_cmp(&x).unwrap())
            {
                Ok(i) => i.min(n - 2),
                Err(i) => i - 1,
            }
        };
        let dx = self.points[seg + 1][0] - self.points[seg][0];
        (self.images[seg + 1][0] - self.images[seg][0]) / dx
    }
}

fn interp_1d(points: &[DVector<f64>], images: &[DVector<f64>], x: f64) -> DVector<f64> {
    let n = points.len();
    if n == 1 {
        return images[0].clone();
    }
    // clamp-extend with the end segments
    let seg = if x <= points[0][0] {
        0
    } else if x >= points[n - 1][0] {
        n - 2
    } else {
        match points.binary_search_by(|p| p[0].partial_cmp(&x).unwrap()) {
            Ok(i) => return images[i].clone(),
            Err(i) => i - 1,
        }
    };
    let (x0, x1) = (points[seg][0], points[seg + 1][0]);
    let t = (x - x0) / (x1 - x0);
    &images[seg] * (1.0 - t) + &images[seg + 1] * t
}

impl VectorField for NodeMap {
    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.dim == 1 {
            return interp_1d(&self.points, &self.images, x[0]);
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let dist = (p - x).norm_squared();
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        self.images[best].clone()
    }
}

/// Scalar field defined by values at scattered nodes, same lookup rules.
struct NodeScalar {
    dim: usize,
    points: Vec<DVector<f64>>,
    values: Vec<f64>,
}

impl NodeScalar {
    fn new(dim: usize, mut points: Vec<DVector<f64>>, mut values: Vec<f64>) -> Self {
        if dim == 1 {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap());
            points = order.iter().map(|&i| points[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
        }
        NodeScalar { dim, points, values }
    }
}

impl ScalarField for NodeScalar {
    fn value(&self, x: &DVector<f64>) -> f64 {
        if self.dim == 1 {
            let n = self.points.len();
            if n == 1 {
                return self.values[0];
            }
            let seg = if x[0] <= self.points[0][0] {
                0
            } else if x[0] >= self.points[n - 1][0] {
                n - 2
            } else {
                match self
                    .points
                    .binary_search_by(|p| p[0].partial_cmp(&x[0]).unwrap())
                {
                    Ok(i) => return self.values[i],
                    Err(i) => i - 1,
                }
            };
            let (x0, x1) = (self.points[seg][0], self.points[seg + 1][0]);
            let t = (x[0] - x0) / (x1 - x0);
            return self.values[seg] * (1.0 - t) + self.values[seg + 1] * t;
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let dist = (p - x).norm_squared();
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        self.values[best]
    }
}

/// Entropic potential: node-sampled values of `-f`, with the gradient taken
/// from the interpolated displacement field and, in one dimension, the
/// Hessian from the local map slope.
struct EntropicPotential {
    values: NodeScalar,
    displacement: NodeMap,
}

impl ScalarField for EntropicPotential {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.values.value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.displacement.value(x))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        if self.displacement.dim == 1 {
            Some(DMatrix::from_element(
                1,
                1,
                self.displacement.slope_1d(x[0]),
            ))
        } else {
            // no trustworthy second derivative from nearest-node data
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GaussianSpace;
    use crate::transport::solve_quantile_1d;

    fn space(d: usize) -> GaussianSpace {
        GaussianSpace::new(d).unwrap()
    }

    fn default_params() -> SinkhornParams {
        SinkhornParams::default()
    }

    #[test]
    fn uniform_target_is_near_identity() {
        let grid = QuadratureGrid::build(1, 64).unwrap();
        let l = DensityModel::uniform(space(1));
        let sol = solve_entropic(&l, &grid, &default_params()).unwrap();
        assert!(sol.diagnostics.converged);
        // sup deviation below the heuristic 3 sqrt(eps) bound on the bulk
        let bound = 3.0 * sol.epsilon_final.unwrap().sqrt();
        for node in grid.nodes().iter().filter(|n| n[0].abs() <= 3.0) {
            let t = sol.map.value(node)[0];
            assert!((t - node[0]).abs() <= bound, "T({}) = {t}", node[0]);
        }
        assert!(sol.wasserstein_sq <= 0.02, "d2 = {}", sol.wasserstein_sq);
    }

    #[test]
    fn matches_quantile_for_scaling() {
        let grid = QuadratureGrid::build(1, 96).unwrap();
        let l = DensityModel::scaled_gaussian_diag(
            space(1),
            DVector::zeros(1),
            DVector::from_vec(vec![4.0]),
        )
        .unwrap();
        let entropic = solve_entropic(&l, &grid, &default_params()).unwrap();
        let quantile = solve_quantile_1d(&l, &grid).unwrap();
        let mut worst = 0.0f64;
        for node in grid.nodes().iter().filter(|n| n[0].abs() <= 3.0) {
            let te = entropic.map.value(node)[0];
            let tq = quantile.map.value(node)[0];
            worst = worst.max((te - tq).abs());
        }
        assert!(worst <= 5e-2, "sup distance {worst}");
        // entropic cost dominates the optimum, up to discretization slack
        assert!(entropic.wasserstein_sq >= quantile.wasserstein_sq - 5e-2);
    }

    #[test]
    fn two_dim_shift_is_recovered_in_the_bulk() {
        let grid = QuadratureGrid::build(2, 24).unwrap();
        let l = DensityModel::wick_shift(space(2), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let sol = solve_entropic(&l, &grid, &default_params()).unwrap();
        let mut worst = 0.0f64;
        for node in grid.nodes().iter().filter(|n| n.amax() <= 1.5) {
            let t = sol.map.value(node);
            let want = DVector::from_vec(vec![node[0] + 1.0, node[1]]);
            worst = worst.max((t - want).amax());
        }
        assert!(worst <= 5e-2, "sup deviation {worst}");
        assert!((sol.wasserstein_sq - 1.0).abs() < 0.15);
    }

    #[test]
    fn monte_carlo_marginals_run() {
        let grid = QuadratureGrid::build(1, 16).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![0.5])).unwrap();
        let params = SinkhornParams {
            sample_source: SampleSource::MonteCarlo {
                source_samples: 200,
                target_samples: 200,
                seed: 42,
            },
            ..Default::default()
        };
        let sol = solve_entropic(&l, &grid, &params).unwrap();
        // loose: MC with 200 points is noisy but the shift is visible
        assert!((sol.wasserstein_sq - 0.25).abs() < 0.15);
        // same seed, same result
        let sol2 = solve_entropic(&l, &grid, &params).unwrap();
        assert_eq!(sol.wasserstein_sq, sol2.wasserstein_sq);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = default_params();
        p.epsilon_final = -1.0;
        assert!(p.validate().is_err());
        let mut p = default_params();
        p.epsilon_ratio = 1.5;
        assert!(p.validate().is_err());
        let mut p = default_params();
        p.target_refinement = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn reverse_map_roundtrips_loosely() {
        let grid = QuadratureGrid::build(1, 48).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let sol = solve_entropic(&l, &grid, &default_params()).unwrap();
        let inv = crate::transport::inverse_map(&sol, &grid).unwrap();
        let mut worst = 0.0f64;
        for node in grid.nodes().iter().filter(|n| n[0].abs() <= 2.0) {
            let y = sol.map.value(node);
            let back = inv.value(&y);
            worst = worst.max((back[0] - node[0]).abs());
        }
        assert!(worst <= 5e-2, "roundtrip defect {worst}");
    }
}
