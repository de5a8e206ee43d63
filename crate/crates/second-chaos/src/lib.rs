//! Numerical verification of second-Wiener-chaos operator bounds on a
//! finite-dimensional Gaussian space.
//!
//! For a positive density `L` with respect to the standard Gaussian measure
//! `gamma_d`, the mean Hessian of the Monge-Kantorovitch transport potential
//! `phi` (with `T = I + grad phi` pushing `gamma_d` to `L gamma_d`) is
//! dominated by the second-chaos kernel of `L`:
//!
//! ```text
//! (1 / 2E[L]) { E[hess L] - E[grad L] (x) E[grad L] / E[L] }  >=  E[hess phi]
//! ```
//!
//! This crate instantiates every object in that inequality at finite
//! dimension - Gauss-Hermite quadrature for `E[.]`, chaos moments by the
//! Stein integration-by-parts route, quantile/linear/entropic transport
//! solvers for `phi` - and checks the inequality together with its proof
//! identities, the identity-operator weakening, and the extensions to
//! finitely supported positive measures, reporting minimum-eigenvalue
//! margins for everything.
//!
//! Entry points:
//! - [`quadrature::QuadratureGrid`] and [`quadrature::expect`] realize
//!   `E_gamma[.]`.
//! - [`density::DensityModel`] is the density `L` (several closed-form
//!   families plus arbitrary positive expressions).
//! - [`chaos::stroock_moments`] produces `(E[L], E[grad L], E[hess L])`.
//! - [`transport`] solves the quadratic-cost transport problem.
//! - [`verify`] computes margins and residuals; [`scenario::run_scenario`]
//!   bundles them into a [`report::VerificationReport`].
//! - [`cli`] backs the `second-chaos` binary (`verify`, `suite`, `export`).
//!
//! The `examples/` directory walks through each capability; the acceptance
//! suite in `tests/acceptance.rs` pins the quantitative guarantees.

pub mod chaos;
// pub mod cli;
pub mod density;
pub mod diff;
pub mod error;
pub mod field;
pub mod hermite;
pub mod linalg;
// pub mod measures;
pub mod normal;
pub mod ou;
pub mod quadrature;
// pub mod report;
// pub mod scenario;
pub mod space;
pub mod transport;
// pub mod verify;

pub use error::{EngineError, Result};
pub use space::{GaussianSpace, MultiIndex};
