//! Resized parametric bootstrap inference for coefficients of
//! high-dimensional generalized linear models.
//!
//! The pipeline: fit the MLE ([`glm`]), estimate the out-of-sample spread of
//! its linear predictor from a single fit ([`sloe`]), recover the signal
//! strength by simulating along the shrinkage path `s·β̂` ([`signal`]),
//! shrink the MLE to that strength and resample from it ([`boot`]), then
//! turn the bootstrap draws into bias-corrected intervals ([`ci`]).
//! [`simgen`] and [`evalcov`] provide the simulation designs and Monte
//! Carlo coverage studies.
//!
//! The crate is `no_std` + `alloc`. Work that can run in parallel goes
//! through the [`exec::Executor`] trait; [`exec::Sequential`] is the
//! built-in implementation.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod boot;
pub mod ci;
pub mod error;
pub mod evalcov;
pub mod exec;
pub mod glm;
pub mod linalg;
pub mod math;
pub mod signal;
pub mod simgen;
pub mod sloe;
pub mod smooth;

pub use boot::{resize, run_bootstrap, BootOptions, BootstrapSummary, ResizedCoefficients};
pub use ci::{boot_g_ci, boot_t_ci, classical_wald_ci, empirical_quantile, IntervalSet, Method};
pub use error::{Error, Result};
pub use evalcov::{baseline_bootstraps, run_bias_sd_study, run_coverage, CoverageConfig, CoverageReport, GammaSource};
pub use exec::{Executor, Sequential};
pub use glm::{fit_mle, Dataset, Family, FitOptions, FitResult, FitStatus};
pub use linalg::Matrix;
pub use signal::{estimate_gamma, sd_linear_predictor, CurveOptions, GammaCurve};
pub use simgen::DesignSpec;
pub use sloe::{sloe_estimate, SloeEstimate};
