//! Wiener-chaos data of a density: Stroock moments, truncated chaos
//! expansions, and the quadratic form carried by the second chaos.
//!
//! Moments are computed by the Stein integration-by-parts route
//!
//! ```text
//! E[grad L] = E[L x],    E[hess L] = E[L (x x^T - I)]
//! ```
//!
//! which never differentiates `L`. Families with closed-form `nu`-moments
//! also provide the analytic route `m1 = mean(nu)`, `m2 = E_nu[x x^T] - I`;
//! when both routes exist they must agree entrywise to 1e-6 or the
//! construction fails.

use nalgebra::{DMatrix, DVector};

use crate::density::DensityModel;
use crate::error::{EngineError, Result};
use crate::hermite::hermite;
use crate::linalg::{min_eigenvalue, symmetrize};
use crate::quadrature::{pairwise_sum, QuadratureGrid};
use crate::space::MultiIndex;

/// How a [`ChaosMoments`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentProvenance {
    ClosedForm,
    Quadrature,
    Both,
}

/// The triple `(E[L], E[grad L], E[hess L])`.
#[derive(Debug, Clone)]
pub struct ChaosMoments {
    pub mass: f64,
    pub m1: DVector<f64>,
    pub m2: DMatrix<f64>,
    pub provenance: MomentProvenance,
    /// Largest entrywise gap between the closed-form and quadrature routes
    /// (zero unless provenance is `Both`).
    pub route_gap: f64,
}

/// Maximum allowed disagreement between the two moment routes.
pub const ROUTE_TOL: f64 = 1e-6;

/// Stroock moments of `L` via Stein integration by parts on the grid.
///
/// Negative density values at grid nodes are hard errors.
pub fn stroock_moments(density: &DensityModel, grid: &QuadratureGrid) -> Result<ChaosMoments> {
    let d = density.dim();
    if grid.dim() != d {
        return Err(EngineError::DimensionMismatch {
            expected: d,
            got: grid.dim(),
        });
    }
    let n = grid.len();
    let mut mass_terms = Vec::with_capacity(n);
    let mut m1_terms: Vec<Vec<f64>> = vec![Vec::with_capacity(n); d];
    let mut m2_terms: Vec<Vec<f64>> = vec![Vec::with_capacity(n); d * d];
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let value = density.value(node);
        if !value.is_finite() {
            return Err(EngineError::NonFinite {
                context: "density at a quadrature node".to_string(),
            });
        }
        if value < 0.0 {
            return Err(EngineError::NegativeDensity {
                point: node.as_slice().to_vec(),
                value,
            });
        }
        let lw = w * value;
        mass_terms.push(lw);
        for i in 0..d {
            m1_terms[i].push(lw * node[i]);
            for j in 0..d {
                let outer = node[i] * node[j] - if i == j { 1.0 } else { 0.0 };
                m2_terms[i * d + j].push(lw * outer);
            }
        }
    }
    let mass_q = pairwise_sum(&mass_terms);
    let m1_q = DVector::from_iterator(d, m1_terms.iter().map(|t| pairwise_sum(t)));
    let m2_q = symmetrize(&DMatrix::from_iterator(
        d,
        d,
        // from_iterator fills column-major; the kernel is symmetrized anyway
        (0..d * d).map(|k| pairwise_sum(&m2_terms[k])),
    ));

    match density.target_moments() {
        Some((mean, second)) => {
            let m1 = mean;
            let m2 = symmetrize(&(second - DMatrix::identity(d, d)));
            let mut gap = (mass_q - 1.0).abs();
            gap = gap.max((&m1_q - &m1).amax());
            gap = gap.max((&m2_q - &m2).amax());
            if gap > ROUTE_TOL {
                return Err(EngineError::invalid(
                    "moments",
                    format!(
                        "closed-form and quadrature moment routes disagree by {gap:.3e} \
                         (> {ROUTE_TOL:.0e}); use a finer grid"
                    ),
                ));
            }
            Ok(ChaosMoments {
                mass: 1.0,
                m1,
                m2,
                provenance: MomentProvenance::Both,
                route_gap: gap,
            })
        }
        None => Ok(ChaosMoments {
            mass: mass_q,
            m1: m1_q,
            m2: m2_q,
            provenance: MomentProvenance::Quadrature,
            route_gap: 0.0,
        }),
    }
}

/// Truncated chaos expansion `L ~ sum_{|alpha| <= N} c_alpha H_alpha`.
#[derive(Debug, Clone)]
pub struct ChaosExpansion {
    dim: usize,
    max_degree: usize,
    /// `(alpha, c_alpha)` in lexicographic order of `alpha`.
    terms: Vec<(MultiIndex, f64)>,
}

impl ChaosExpansion {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn terms(&self) -> &[(MultiIndex, f64)] {
        &self.terms
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.terms
            .binary_search_by(|(a, _)| a.cmp(alpha))
            .ok()
            .map(|i| self.terms[i].1)
    }

    /// `sum_{|alpha| <= N} c_alpha^2 alpha!`, the truncated chaos energy.
    pub fn parseval_partial_sum(&self) -> f64 {
        self.terms
            .iter()
            .map(|(alpha, c)| c * c * alpha.factorial())
            .sum()
    }
}

/// Chaos coefficients `c_alpha = E[L H_alpha] / alpha!` up to total degree
/// `max_degree`.
///
/// The grid must carry at least `max_degree + 2` points per axis so that the
/// products `L H_alpha` are resolved.
pub fn chaos_coefficients(
    density: &DensityModel,
    grid: &QuadratureGrid,
    max_degree: usize,
) -> Result<ChaosExpansion> {
    let d = density.dim();
    if grid.dim() != d {
        return Err(EngineError::DimensionMismatch {
            expected: d,
            got: grid.dim(),
        });
    }
    if grid.degree() < max_degree + 2 {
        return Err(EngineError::invalid(
            "grid",
            format!(
                "chaos coefficients to degree {max_degree} need at least {} points per axis",
                max_degree + 2
            ),
        ));
    }
    let indices = MultiIndex::up_to_degree(d, max_degree);
    let mut terms = Vec::with_capacity(indices.len());
    for alpha in indices {
        let mut sum_terms = Vec::with_capacity(grid.len());
        for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
            let v = density.value(node) * hermite(&alpha, node)?;
            if !v.is_finite() {
                return Err(EngineError::NonFinite {
                    context: "chaos coefficient integrand".to_string(),
                });
            }
            sum_terms.push(w * v);
        }
        let c = pairwise_sum(&sum_terms) / alpha.factorial();
        terms.push((alpha, c));
    }
    Ok(ChaosExpansion {
        dim: d,
        max_degree,
        terms,
    })
}

/// Evaluate the truncated expansion at a point.
pub fn reconstruct(expansion: &ChaosExpansion, x: &DVector<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (alpha, c) in &expansion.terms {
        total += c * hermite(alpha, x)?;
    }
    Ok(total)
}

/// A second-chaos element `x -> (1/2)(<K x, x> - trace K) + offset` with
/// symmetric kernel `K`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    kernel: DMatrix<f64>,
    offset: f64,
}

impl QuadraticForm {
    pub fn new(kernel: DMatrix<f64>, offset: f64) -> Self {
        QuadraticForm {
            kernel: symmetrize(&kernel),
            offset,
        }
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * ((&self.kernel * x).dot(x) - self.kernel.trace()) + self.offset
    }
}

/// The second-chaos projection of `L` as a quadratic form: kernel
/// `E[hess L] / E[L]`, zero offset.
pub fn second_chaos_form(moments: &ChaosMoments) -> Result<QuadraticForm> {
    if moments.mass <= 0.0 {
        return Err(EngineError::NonPositiveMass { mass: moments.mass });
    }
    Ok(QuadraticForm::new(&moments.m2 / moments.mass, 0.0))
}

/// r-convexity margin of a quadratic form: `lambda_min(K) + r`.
///
/// The form is r-convex exactly when the margin is non-negative.
pub fn r_convexity(form: &QuadraticForm, r: f64) -> f64 {
    min_eigenvalue(&form.kernel) + r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::random_mixture;
    use crate::ou::ou_apply;
    use crate::space::GaussianSpace;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn space(d: usize) -> GaussianSpace {
        GaussianSpace::new(d).unwrap()
    }

    fn scaled_1d(var: f64) -> DensityModel {
        DensityModel::scaled_gaussian_diag(
            space(1),
            DVector::zeros(1),
            DVector::from_vec(vec![var]),
        )
        .unwrap()
    }

    #[test]
    fn uniform_moments_vanish() {
        let grid = QuadratureGrid::build(2, 8).unwrap();
        let m = stroock_moments(&DensityModel::uniform(space(2)), &grid).unwrap();
        assert_eq!(m.provenance, MomentProvenance::Both);
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert!(m.m1.amax() < 1e-12);
        assert!(m.m2.amax() < 1e-12);
    }

    #[test]
    fn scaled_gaussian_moments() {
        // sigma^2 = 4 in d = 1: (1, 0, 3)
        let grid = QuadratureGrid::build(1, 96).unwrap();
        let m = stroock_moments(&scaled_1d(4.0), &grid).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-10);
        assert!(m.m1[0].abs() < 1e-10);
        assert!((m.m2[(0, 0)] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn wick_shift_moments() {
        // nu = N(1, 1): (1, 1, 1)
        let grid = QuadratureGrid::build(1, 48).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let m = stroock_moments(&l, &grid).unwrap();
        assert!((m.m1[0] - 1.0).abs() < 1e-10);
        assert!((m.m2[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn route_equivalence_for_random_mixtures() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in 1..=2usize {
            let grid = QuadratureGrid::build(d, if d == 1 { 96 } else { 40 }).unwrap();
            for _ in 0..5 {
                let l = random_mixture(space(d), &mut rng, 4);
                let m = stroock_moments(&l, &grid).unwrap();
                assert_eq!(m.provenance, MomentProvenance::Both);
                assert!(m.route_gap < 1e-6, "gap {}", m.route_gap);
            }
        }
    }

    #[test]
    fn coefficients_of_uniform_are_delta() {
        let grid = QuadratureGrid::build(1, 16).unwrap();
        let e = chaos_coefficients(&DensityModel::uniform(space(1)), &grid, 6).unwrap();
        for (alpha, c) in e.terms() {
            let want = if alpha.degree() == 0 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-10, "alpha {alpha}: {c}");
        }
    }

    #[test]
    fn coefficients_of_scaled_gaussian() {
        // c_2 = E_nu[h_2] / 2! = (sigma^2 - 1) / 2 = 3/2 for sigma = 2
        let grid = QuadratureGrid::build(1, 64).unwrap();
        let e = chaos_coefficients(&scaled_1d(4.0), &grid, 4).unwrap();
        let c2 = e.coefficient(&MultiIndex::new(vec![2])).unwrap();
        assert!((c2 - 1.5).abs() < 1e-8, "c2 = {c2}");
        // odd coefficients vanish by symmetry
        let c1 = e.coefficient(&MultiIndex::new(vec![1])).unwrap();
        let c3 = e.coefficient(&MultiIndex::new(vec![3])).unwrap();
        assert!(c1.abs() < 1e-10 && c3.abs() < 1e-10);
    }

    #[test]
    fn wick_coefficients_are_inverse_factorials() {
        let grid = QuadratureGrid::build(1, 32).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let e = chaos_coefficients(&l, &grid, 10).unwrap();
        for (alpha, c) in e.terms() {
            let want = 1.0 / alpha.factorial();
            assert!(
                (c - want).abs() < 1e-8,
                "n = {}: got {c}, want {want}",
                alpha.degree()
            );
        }
    }

    #[test]
    fn reconstruction_converges_for_wick() {
        let grid = QuadratureGrid::build(1, 40).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let e = chaos_coefficients(&l, &grid, 20).unwrap();
        let x = DVector::from_vec(vec![0.5]);
        // L(0.5) = exp(0.5 - 0.5) = 1
        assert!((reconstruct(&e, &x).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn reconstruction_error_decreases_with_degree() {
        // grid-weighted RMS truncation error is non-increasing in N for
        // square-integrable families (sigma^2 < 2 per axis)
        let grid = QuadratureGrid::build(1, 64).unwrap();
        for l in [
            scaled_1d(1.44),
            DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap(),
        ] {
            let rms = |n: usize| -> f64 {
                let e = chaos_coefficients(&l, &grid, n).unwrap();
                let total: f64 = grid
                    .nodes()
                    .iter()
                    .zip(grid.weights())
                    .map(|(x, &w)| {
                        let diff = reconstruct(&e, x).unwrap() - l.value(x);
                        w * diff * diff
                    })
                    .sum();
                total.sqrt()
            };
            let errors: Vec<f64> = [2usize, 4, 8].iter().map(|&n| rms(n)).collect();
            assert!(errors[1] <= errors[0] + 1e-9, "{:?}", errors);
            assert!(errors[2] <= errors[1] + 1e-9, "{:?}", errors);
        }
    }

    #[test]
    fn parseval_monotone_and_bounded() {
        // wick shift h = 1: partial sums increase to E[L^2] = e
        let grid = QuadratureGrid::build(1, 40).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let mut last = 0.0;
        for n in [0usize, 2, 4, 8, 12] {
            let e = chaos_coefficients(&l, &grid, n).unwrap();
            let s = e.parseval_partial_sum();
            assert!(s + 1e-9 >= last);
            last = s;
        }
        let l2 = std::f64::consts::E;
        assert!(last <= l2 + 1e-6, "partial sum {last} exceeds E[L^2] = e");

        // scaled gaussian needs sigma^2 < 2 for the L^2 bound
        let l = scaled_1d(1.44);
        let lc = l.clone();
        let el2 = crate::quadrature::expect(
            &move |x: &DVector<f64>| lc.value(x) * lc.value(x),
            &QuadratureGrid::build(1, 128).unwrap(),
        )
        .unwrap();
        let e = chaos_coefficients(&l, &grid, 12).unwrap();
        assert!(e.parseval_partial_sum() <= el2 + 1e-6);
    }

    #[test]
    fn semigroup_diagonalizes_coefficients() {
        // coefficients of P_t L are e^{-|alpha| t} c_alpha
        let t = 0.35;
        let grid = QuadratureGrid::build(1, 48).unwrap();
        let l = DensityModel::wick_shift(space(1), DVector::from_vec(vec![1.0])).unwrap();
        let base = chaos_coefficients(&l, &grid, 6).unwrap();
        let lc = l.clone();
        let gridc = grid.clone();
        let smoothed_field =
            move |x: &DVector<f64>| ou_apply(&|y: &DVector<f64>| lc.value(y), t, x, &gridc).unwrap();
        let smoothed = DensityModel::from_field(space(1), Arc::new(smoothed_field), &grid).unwrap();
        let e = chaos_coefficients(&smoothed, &grid, 6).unwrap();
        for ((alpha, c_t), (_, c_0)) in e.terms().iter().zip(base.terms()) {
            let want = (-(alpha.degree() as f64) * t).exp() * c_0;
            assert!(
                (c_t - want).abs() < 1e-6,
                "alpha {alpha}: got {c_t}, want {want}"
            );
        }
    }

    #[test]
    fn second_chaos_form_values() {
        let m = ChaosMoments {
            mass: 1.0,
            m1: DVector::zeros(1),
            m2: DMatrix::from_diagonal_element(1, 1, 3.0),
            provenance: MomentProvenance::ClosedForm,
            route_gap: 0.0,
        };
        let q = second_chaos_form(&m).unwrap();
        // x -> 1.5 (x^2 - 1)
        let x = DVector::from_vec(vec![2.0]);
        assert!((q.value(&x) - 4.5).abs() < 1e-12);
        assert!((q.value(&DVector::zeros(1)) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn r_convexity_margins() {
        let zero = QuadraticForm::new(DMatrix::zeros(2, 2), 0.0);
        assert_eq!(r_convexity(&zero, 0.0), 0.0);

        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0]));
        let q = QuadraticForm::new(k, 0.0);
        assert!((r_convexity(&q, 1.0)).abs() < 1e-12);

        let k = DMatrix::from_diagonal_element(1, 1, -2.0);
        let q = QuadraticForm::new(k, 0.0);
        assert!((r_convexity(&q, 1.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_rejected() {
        let m = ChaosMoments {
            mass: 0.0,
            m1: DVector::zeros(1),
            m2: DMatrix::zeros(1, 1),
            provenance: MomentProvenance::Quadrature,
            route_gap: 0.0,
        };
        assert!(second_chaos_form(&m).is_err());
    }
}
