//! Covariate adjustment in causal graphs: validity, pruning, qualitative
//! efficiency comparisons and the asymptotically optimal adjustment set,
//! together with exact asymptotic variances of adjusted OLS total-effect
//! estimators in causal linear models.
//!
//! The crate is organized around a single partially directed graph type
//! ([`Pdag`]) that covers DAGs, CPDAGs and maximal PDAGs:
//!
//! - [`graph`] — parsing, validation, ancestry, definite-status paths,
//!   d-separation and DAG extensions;
//! - [`adjust`] — causal/forbidden nodes, amenability, the generalized
//!   adjustment criterion, `Adjust`, the optimal set `O`, pruning and the
//!   variance-comparison criterion;
//! - [`sem`] — exact population computations for causal linear models
//!   (covariance, regression, total effects, asymptotic variances);
//! - [`estimate`] — sampling, OLS total-effect estimation and empirical MSE;
//! - [`simbench`] — randomized benchmark comparing adjustment-set choices;
//! - [`oracle`] — slow, obviously-correct brute-force counterparts used to
//!   cross-check the fast implementations.
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); concrete `f64` aliases are exported at the crate root.

pub mod adjust;
pub mod estimate;
pub mod graph;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod scalar;
pub mod sem;
pub mod simbench;

pub use graph::{MaximalityReport, NodeId, NodeSet, PathQueryResult, Pdag};

/// Linear SEM over `f64`, the default scalar for CLI and benchmarks.
pub type LinearSem64 = sem::LinearSem<f64>;
/// Linear SEM over `f32`.
pub type LinearSem32 = sem::LinearSem<f32>;
/// Covariance matrix over `f64`.
pub type CovMatrix64 = sem::CovMatrix<f64>;
/// Covariance matrix over `f32`.
pub type CovMatrix32 = sem::CovMatrix<f32>;
/// Effect matrix over `f64`.
pub type EffectMatrix64 = sem::EffectMatrix<f64>;
/// Effect matrix over `f32`.
pub type EffectMatrix32 = sem::EffectMatrix<f32>;
/// Sample matrix over `f64`.
pub type Dataset64 = estimate::Dataset<f64>;
