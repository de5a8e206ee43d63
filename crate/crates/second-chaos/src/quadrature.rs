//! Tensorized Gauss-Hermite quadrature normalized to the standard Gaussian
//! measure `gamma_d`.
//!
//! The one-dimensional rule comes from the Golub-Welsch eigenproblem for the
//! probabilists' Hermite recurrence: the Jacobi matrix has zero diagonal and
//! off-diagonal `sqrt(k)`, its eigenvalues are the nodes, and the squared
//! first components of the (orthonormal) eigenvectors are the weights. With
//! this normalization the weights sum to one and
//! `sum_i w_i f(x_i) ~ E_gamma[f]` is exact for polynomials of degree
//! `<= 2n - 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{EngineError, Result};
use crate::field::{ScalarField, VectorField};

/// Default cap on the total node count `degree^dim`.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// Deterministic pairwise summation; run-to-run identical and more accurate
/// than a left fold for long node lists.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Scan of the orthonormal Hermite recurrence at a point: scaled values of
/// `p_n` and `p_{n-1}` (same scale, so their ratio is exact) and the log of
/// the Christoffel-Darboux kernel `K_n(x, x) = sum_{k<n} p_k(x)^2`.
struct HermiteScan {
    p_n: f64,
    p_n_minus: f64,
    log_kernel: f64,
}

fn hermite_scan(n: usize, x: f64) -> HermiteScan {
    // orthonormal recurrence: p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1)
    let mut prev = 1.0f64; // p_0
    if n == 1 {
        return HermiteScan {
            p_n: x,
            p_n_minus: 1.0,
            log_kernel: 0.0,
        };
    }
    let mut cur = x; // p_1
    let mut sum = 1.0 + cur * cur;
    let mut log_scale = 0.0f64; // true value = scaled * exp(log_scale)
    for k in 1..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if k + 1 <= n - 1 {
            sum += cur * cur;
        }
        if cur.abs() > 1e140 {
            let f = 1e-140;
            prev *= f;
            cur *= f;
            sum *= f * f;
            log_scale += 140.0 * std::f64::consts::LN_10;
        }
    }
    HermiteScan {
        p_n: cur,
        p_n_minus: prev,
        log_kernel: sum.ln() + 2.0 * log_scale,
    }
}

/// One-dimensional Gauss-Hermite rule for `gamma_1` (nodes ascending,
/// weights summing to 1).
///
/// Nodes come from the Jacobi eigenproblem, polished by two Newton steps on
/// the orthonormal recurrence (`p_n' = sqrt(n) p_{n-1}`). Weights use the
/// Christoffel-Darboux identity `w_i = 1 / K_n(x_i, x_i)`, which keeps full
/// relative precision in the far tail where the eigenvector-based weights
/// degrade to noise. Weights that underflow to zero are dropped.
fn gauss_hermite_1d(degree: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(degree >= 1);
    if degree == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut jacobi = DMatrix::zeros(degree, degree);
    for k in 1..degree {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eigen = jacobi.symmetric_eigen();
    let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out_nodes = Vec::with_capacity(degree);
    let mut out_weights = Vec::with_capacity(degree);
    for mut x in nodes {
        for _ in 0..2 {
            let scan = hermite_scan(degree, x);
            let slope = (degree as f64).sqrt() * scan.p_n_minus;
            if slope != 0.0 {
                let step = scan.p_n / slope;
                if step.is_finite() {
                    x -= step;
                }
            }
        }
        let scan = hermite_scan(degree, x);
        let w = (-scan.log_kernel).exp();
        if w > 0.0 {
            out_nodes.push(x);
            out_weights.push(w);
        }
    }
    (out_nodes, out_weights)
}

/// Process-wide cache of 1D rules; grids are rebuilt constantly by the
/// adaptive expectation and the rule for a given degree never changes.
fn cached_gauss_hermite_1d(degree: usize) -> (Vec<f64>, Vec<f64>) {
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(degree)
        .or_insert_with(|| gauss_hermite_1d(degree))
        .clone()
}

/// Tensor product Gauss-Hermite grid on `R^d` for `gamma_d`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    degree: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Build a grid with `degree` points per axis under the default node cap.
    pub fn build(dim: usize, degree: usize) -> Result<Self> {
        Self::build_with_cap(dim, degree, DEFAULT_NODE_CAP)
    }

    pub fn build_with_cap(dim: usize, degree: usize, cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(EngineError::invalid("dim", "dimension must be >= 1"));
        }
        if degree == 0 {
            return Err(EngineError::invalid("degree", "degree must be >= 1"));
        }
        let count = (degree as f64).powi(dim as i32);
        if !count.is_finite() || count > cap as f64 {
            return Err(EngineError::NodeCapExceeded {
                requested: count as usize,
                cap,
            });
        }
        let (nodes_1d, weights_1d) = cached_gauss_hermite_1d(degree);
        let kept = nodes_1d.len();
        let total = kept.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut index = vec![0usize; dim];
        loop {
            let weight: f64 = index.iter().map(|&i| weights_1d[i]).product();
            // tensor weights can underflow even when each factor is positive
            if weight > 0.0 {
                let node = DVector::from_iterator(dim, index.iter().map(|&i| nodes_1d[i]));
                nodes.push(node);
                weights.push(weight);
            }
            // lexicographic increment, last axis fastest
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Ok(QuadratureGrid {
                        dim,
                        degree,
                        nodes,
                        weights,
                    });
                }
                axis -= 1;
                index[axis] += 1;
                if index[axis] < kept {
                    break;
                }
                index[axis] = 0;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> &DVector<f64> {
        &self.nodes[i]
    }
}

/// `E_gamma[f]` approximated on the grid.
pub fn expect(f: &dyn ScalarField, grid: &QuadratureGrid) -> Result<f64> {
    let mut terms = Vec::with_capacity(grid.len());
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let v = f.value(node);
        if !v.is_finite() {
            return Err(EngineError::NonFinite {
                context: format!("quadrature integrand at node {:?}", node.as_slice()),
            });
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

/// Componentwise `E_gamma[f]` for a vector field.
pub fn expect_vector(f: &dyn VectorField, grid: &QuadratureGrid) -> Result<DVector<f64>> {
    let d = grid.dim();
    let mut terms: Vec<Vec<f64>> = (0..d).map(|_| Vec::with_capacity(grid.len())).collect();
    for (node, &w) in grid.nodes().iter().zip(grid.weights()) {
        let v = f.value(node);
        if v.len() != d {
            return Err(EngineError::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        for i in 0..d {
            if !v[i].is_finite() {
                return Err(EngineError::NonFinite {
                    context: "vector quadrature integrand".to_string(),
                });
            }
            terms[i].push(w * v[i]);
        }
    }
    Ok(DVector::from_iterator(d, terms.iter().map(|t| pairwise_sum(t))))
}

/// Result of the degree-doubling expectation.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOutcome {
    pub value: f64,
    /// Per-axis degree of the last grid used.
    pub degree: usize,
    /// False when the doubling hit the node cap before the relative
    /// tolerance was met; the estimate is still the best one computed.
    pub converged: bool,
}

/// Doubles the per-axis degree (`n, 2n, 4n, ...`) until two successive
/// estimates agree to `rtol` (relative) or the node cap is reached.
pub fn adaptive_expect(
    f: &dyn ScalarField,
    dim: usize,
    base_degree: usize,
    rtol: f64,
    cap: usize,
) -> Result<AdaptiveOutcome> {
    let mut degree = base_degree.max(1);
    let grid = QuadratureGrid::build_with_cap(dim, degree, cap)?;
    let mut value = expect(f, &grid)?;
    loop {
        let next_degree = degree * 2;
        let grid = match QuadratureGrid::build_with_cap(dim, next_degree, cap) {
            Ok(g) => g,
            Err(EngineError::NodeCapExceeded { .. }) => {
                return Ok(AdaptiveOutcome {
                    value,
                    degree,
                    converged: false,
                });
            }
            Err(e) => return Err(e),
        };
        let next = expect(f, &grid)?;
        let scale = next.abs().max(1.0);
        if (next - value).abs() < rtol * scale {
            return Ok(AdaptiveOutcome {
                value: next,
                degree: next_degree,
                converged: true,
            });
        }
        degree = next_degree;
        value = next;
    }
}
