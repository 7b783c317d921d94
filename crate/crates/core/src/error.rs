use alloc::string::String;

use crate::glm::FitStatus;

/// Errors raised by the inference pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("the MLE does not exist: data are (quasi-)separable")]
    Separable,

    #[error("Hessian is not positive definite, even after ridge fallback")]
    SingularHessian,

    #[error("fit did not converge within the iteration budget (gradient norm {grad_norm:e})")]
    MaxIter { grad_norm: f64 },

    #[error("fit is not converged (status {0:?})")]
    NotConverged(FitStatus),

    #[error("leave-one-out approximation degenerate at observation {index}: 1 - w f'' = {denominator:e}")]
    LeverageDegenerate { index: usize, denominator: f64 },

    #[error("every replicate failed at all knots of the signal-strength grid")]
    AllKnotsFailed,

    #[error(
        "eta curve does not bracket the observed value: eta_tilde = {eta_tilde}, \
         largest smoothed eta = {eta_max} at gamma = {gamma_max}"
    )]
    CurveNotBracketing { eta_tilde: f64, eta_max: f64, gamma_max: f64 },

    #[error("MLE is zero but a positive signal strength {gamma_hat} was requested")]
    ZeroMle { gamma_hat: f64 },

    #[error("too many failed bootstrap replicates: {failed} of {total} (limit {limit})")]
    TooManyFailures { failed: usize, total: usize, limit: usize },

    #[error("non-positive bias factor alpha_hat = {0}")]
    NonPositiveAlpha(f64),

    #[error("{b} bootstrap replicates are too few for level {level}: need at least {required}")]
    InsufficientReplicates { b: usize, level: f64, required: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("Poisson mean exp({eta}) overflows the 1e12 guard at observation {index}")]
    PoissonOverflow { index: usize, eta: f64 },

    #[error(
        "design appears to be at or beyond the phase transition: {failed} of {attempted} \
         repetitions failed to produce an MLE"
    )]
    PhaseTransition { failed: usize, attempted: usize },
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::InvalidDesign(_) => "invalid_design",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Separable => "separable",
            Error::SingularHessian => "singular_hessian",
            Error::MaxIter { .. } => "max_iter",
            Error::NotConverged(_) => "not_converged",
            Error::LeverageDegenerate { .. } => "leverage_degenerate",
            Error::AllKnotsFailed => "all_separable_at_knot",
            Error::CurveNotBracketing { .. } => "curve_not_bracketing",
            Error::ZeroMle { .. } => "zero_mle",
            Error::TooManyFailures { .. } => "too_many_failures",
            Error::NonPositiveAlpha(_) => "non_positive_alpha",
            Error::InsufficientReplicates { .. } => "insufficient_replicates",
            Error::EmptyInput => "empty_input",
            Error::PoissonOverflow { .. } => "poisson_overflow",
            Error::PhaseTransition { .. } => "phase_transition",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
