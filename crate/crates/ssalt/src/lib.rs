//! Robust estimation for simple step-stress accelerated life tests (SSALTs)
//! with exponential lifetimes under Type-I censoring.
//!
//! A test runs `N` units at stress `x1` until time `tau1`, then at the higher
//! stress `x2` until the fixed termination time `tau2`; survivors at `tau2` are
//! right-censored. Lifetimes are exponential with a log-linear stress link
//! `lambda_i = exp(a0 + a1 x_i)`, glued across the stress change by the
//! cumulative-exposure shift `h = (lambda2/lambda1) tau1 - tau1`.
//!
//! Estimation minimizes the density power divergence (DPD) between the fitted
//! model and the empirical law of the observed mixed distribution (a density
//! on `[0, tau2)` plus a point mass of survivors at `tau2`). The tuning
//! parameter `beta >= 0` trades efficiency against robustness; `beta = 0` is
//! the maximum likelihood estimator.
//!
//! Module map:
//! - [`model`]: the piecewise lifetime distribution and its inverse.
//! - [`loss`]: the empirical DPD objective and the log-likelihood.
//! - [`estimator`]: Nelder-Mead minimization and the closed-form MLE.
//! - [`asymptotics`]: closed-form sandwich covariance `J^-1 K J^-1`.
//! - [`characteristics`]: reliability, quantiles, MTTF with delta-method CIs.
//! - [`simulation`]: seeded data generation and Monte Carlo studies.
//! - [`dataset`] / [`studyfile`]: file formats consumed by the CLI.
//! - [`report`]: fit/characteristic report bundles and CSV rendering.

pub mod asymptotics;
pub mod characteristics;
pub mod dataset;
pub mod estimator;
pub mod loss;
pub mod model;
pub mod normal;
pub mod quad;
pub mod report;
pub mod simulation;
pub mod studyfile;

#[cfg(test)]
pub(crate) mod testutil;

pub use estimator::{fit_mdpde, fit_mle_closed_form, fit_path, FitConfig, FitResult};
pub use loss::{dpd_objective, neg_log_likelihood, ExperimentData};
pub use model::{RateParams, RegressionParams, SsaltModel, StressProfile};
