//! Estimation of causal effect heterogeneity that observed covariates do not
//! explain.
//!
//! For a binary treatment `X` and continuous outcome `Y`, the conditional
//! average causal effect `CACE(w) = E[Y1 - Y0 | W=w]` can hide offsetting
//! individual effects. This crate estimates the decomposition of `CACE(w)`
//! into the effect over positively affected subjects (`P-CACE`) and the
//! magnitude of the effect over negatively affected subjects (`N-CACE`),
//! with `CACE = P-CACE - N-CACE`. For continuous treatments the analogous
//! decomposition of the conditional population intervention effect under a
//! pair of stochastic interventions (`CPICE = P-CPICE - N-CPICE`) is
//! provided.
//!
//! The crate contains:
//!
//! - [`dataset`]: CSV ingestion, covariate encoding, and stratum filtering.
//! - [`scm`]: executable structural causal models for simulation.
//! - [`oracle`]: brute-force Monte Carlo ground truths from an SCM, used to
//!   validate every estimator in the test suite.
//! - [`cdf`]: the local-linear conditional CDF estimator and a kernel
//!   propensity estimator.
//! - [`bandwidth`]: cross-validated bandwidth selection.
//! - [`policy`]: stochastic intervention policies and coupled policy pairs.
//! - [`measures`]: Monte Carlo point estimators of the six measures.
//! - [`bounds`]: partial-identification bounds when monotonicity of the
//!   potential outcomes is implausible.
//! - [`inference`]: percentile bootstrap for means and 95% intervals.
//! - [`study`]: the repeated-simulation harness behind the benchmark
//!   study tables.

pub mod bandwidth;
pub mod bounds;
pub mod cdf;
pub mod dataset;
pub mod error;
pub mod inference;
pub mod measures;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod scm;
pub mod study;

pub use error::{Error, Result};
