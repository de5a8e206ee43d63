//! The finite-dimensional Gaussian space and multi-index bookkeeping.
//!
//! Everything downstream lives on `(R^d, R^d, gamma_d)`: the Cameron-Martin
//! space is `R^d` with the Euclidean inner product and the reference measure
//! is the standard Gaussian `gamma_d`.

use crate::error::{EngineError, Result};

/// Standard Gaussian space at a fixed dimension.
///
/// The Cameron-Martin norm coincides with the Euclidean norm here, so points,
/// directions and chaos kernels all live in plain `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianSpace {
    dim: usize,
}

impl GaussianSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(EngineError::invalid("dim", "dimension must be >= 1"));
        }
        Ok(GaussianSpace { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(EngineError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A multi-index `alpha = (alpha_1, ..., alpha_d)` labelling one tensor
/// Hermite basis element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex {
            entries: vec![0; dim],
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Total degree `|alpha|`.
    pub fn degree(&self) -> usize {
        self.entries.iter().sum()
    }

    /// `alpha! = prod_i alpha_i!`.
    pub fn factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&k| (1..=k).map(|j| j as f64).product::<f64>())
            .product()
    }

    /// All multi-indices of dimension `dim` with total degree <= `max_degree`,
    /// in lexicographic order.
    pub fn up_to_degree(dim: usize, max_degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0usize; dim];
        enumerate_rec(dim, max_degree, 0, &mut current, &mut out);
        out.sort();
        out
    }
}

fn enumerate_rec(
    dim: usize,
    budget: usize,
    pos: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if pos == dim {
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for k in 0..=budget {
        current[pos] = k;
        enumerate_rec(dim, budget - k, pos + 1, current, out);
    }
    current[pos] = 0;
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dimension_rejected() {
        assert!(GaussianSpace::new(0).is_err());
        assert_eq!(GaussianSpace::new(3).unwrap().dim(), 3);
    }

    #[test]
    fn degree_and_factorial_consistent() {
        let alpha = MultiIndex::new(vec![2, 0, 3]);
        assert_eq!(alpha.degree(), 5);
        // 2! * 0! * 3! = 12
        assert_eq!(alpha.factorial(), 12.0);
    }

    #[test]
    fn enumeration_counts_match_binomial() {
        // #{alpha : |alpha| <= N} = C(N + d, d)
        let idx = MultiIndex::up_to_degree(2, 8);
        assert_eq!(idx.len(), 45);
        let idx = MultiIndex::up_to_degree(3, 4);
        assert_eq!(idx.len(), 35);
        // lexicographic and unique
        for w in idx.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
