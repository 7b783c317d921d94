//! GLM families, datasets and the maximum likelihood fitter.

mod dataset;
mod family;
mod fit;

pub use dataset::Dataset;
pub use family::{Derivatives, Family, POISSON_MEAN_LIMIT};
pub use fit::{fit_glm, fit_mle, FitOptions, FitResult, FitStatus};
