//! Resized parametric bootstrap: shrink the MLE to the estimated signal
//! strength, simulate responses at the shrunken coefficients with the
//! covariates held fixed, refit, and summarize the replicates by a common
//! bias factor `α̂` and per-coordinate spreads `σ̂_j`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{rng_for, Executor, Stream};
use crate::glm::{fit_glm, Dataset, Family, FitOptions, FitResult};
use crate::linalg::Matrix;
use crate::signal::{sd_linear_predictor, shrink};
use crate::simgen::sample_responses;

#[derive(Debug, Clone, PartialEq)]
pub struct ResizedCoefficients {
    pub beta_star: Vec<f64>,
    pub scale_s: f64,
    /// `sd(Xβ⋆)`, equal to the requested `γ̂` unless the scale was clamped at 1.
    pub gamma_target: f64,
    pub intercept: Option<usize>,
}

/// `β⋆ = s·β̂` with `s = γ̂ / sd(Xβ̂)` clamped to `[0, 1]`. The intercept
/// coordinate is copied unscaled.
pub fn resize(fit: &FitResult, gamma_hat: f64, x: &Matrix, intercept: Option<usize>) -> Result<ResizedCoefficients> {
    if !(gamma_hat >= 0.0) || !gamma_hat.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("gamma_hat must be finite and >= 0 (got {gamma_hat})")));
    }
    let sd = sd_linear_predictor(x, &fit.beta_hat, intercept);
    let scale_s = if sd > 0.0 {
        (gamma_hat / sd).clamp(0.0, 1.0)
    } else if gamma_hat > 0.0 {
        return Err(Error::ZeroMle { gamma_hat });
    } else {
        0.0
    };
    Ok(ResizedCoefficients {
        beta_star: shrink(&fit.beta_hat, scale_s, intercept),
        scale_s,
        gamma_target: scale_s * sd,
        intercept,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootOptions {
    pub fit: FitOptions,
    /// Abort when more than this fraction of replicates fail.
    pub max_failure_frac: f64,
}

impl Default for BootOptions {
    fn default() -> Self {
        BootOptions { fit: FitOptions::default(), max_failure_frac: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    /// Successful replicates only, in replicate order.
    pub boot_mles: Matrix,
    pub sigma_hat: Vec<f64>,
    pub alpha_hat: f64,
    pub beta_bar: Vec<f64>,
    pub n_failed: usize,
    pub n_requested: usize,
    pub intercept: Option<usize>,
}

impl BootstrapSummary {
    pub fn b(&self) -> usize {
        self.boot_mles.rows()
    }

    /// Summarizes replicate fits (`None` = failed) against the coefficients
    /// that generated them.
    pub fn from_replicates(
        replicates: &[Option<Vec<f64>>],
        beta_ref: &[f64],
        intercept: Option<usize>,
        max_failure_frac: f64,
    ) -> Result<BootstrapSummary> {
        let total = replicates.len();
        let ok: Vec<&Vec<f64>> = replicates.iter().flatten().collect();
        let failed = total - ok.len();
        let limit = libm::floor(max_failure_frac * total as f64) as usize;
        if failed > limit || ok.len() < 2 {
            return Err(Error::TooManyFailures { failed, total, limit });
        }
        let p = beta_ref.len();
        let m = ok.len();
        let mut data = Vec::with_capacity(m * p);
        for row in &ok {
            if row.len() != p {
                return Err(Error::DimensionMismatch(alloc::format!("replicate of length {} for p = {p}", row.len())));
            }
            data.extend_from_slice(row);
        }
        let boot_mles = Matrix::from_row_major(m, p, data)?;
        let mut beta_bar = alloc::vec![0.0; p];
        for row in &ok {
            for (acc, v) in beta_bar.iter_mut().zip(row.iter()) {
                *acc += v;
            }
        }
        beta_bar.iter_mut().for_each(|v| *v /= m as f64);
        let mut sigma_hat = alloc::vec![0.0; p];
        for row in &ok {
            for ((acc, v), mean) in sigma_hat.iter_mut().zip(row.iter()).zip(&beta_bar) {
                *acc += (v - mean) * (v - mean);
            }
        }
        sigma_hat.iter_mut().for_each(|v| *v = libm::sqrt(*v / (m - 1) as f64));
        let alpha_hat = weighted_slope(&beta_bar, beta_ref, &sigma_hat, intercept);
        Ok(BootstrapSummary {
            boot_mles,
            sigma_hat,
            alpha_hat,
            beta_bar,
            n_failed: failed,
            n_requested: total,
            intercept,
        })
    }
}

/// Through-origin regression of `beta_bar` on `beta_ref` with weights
/// `1/σ̂_j²`, skipping the intercept and zero-spread coordinates. Returns 1
/// when no coordinate of `beta_ref` is non-zero.
pub fn weighted_slope(beta_bar: &[f64], beta_ref: &[f64], sigma: &[f64], intercept: Option<usize>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..beta_ref.len() {
        if Some(j) == intercept || !(sigma[j] > 0.0) {
            continue;
        }
        let w = 1.0 / (sigma[j] * sigma[j]);
        num += w * beta_bar[j] * beta_ref[j];
        den += w * beta_ref[j] * beta_ref[j];
    }
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

/// `b` parametric replicates at `beta_true` with `x` fixed: replicate `k`
/// draws from the ChaCha stream `(seed, stream, k)`. Failed fits are `None`.
#[allow(clippy::too_many_arguments)]
pub fn parametric_replicates<E: Executor>(
    x: &Matrix,
    family: Family,
    beta_true: &[f64],
    b: usize,
    seed: u64,
    stream: Stream,
    fit: &FitOptions,
    exec: &E,
) -> Vec<Option<Vec<f64>>> {
    let eta = x.mul_vec(beta_true);
    let opts = FitOptions { start: Some(beta_true.to_vec()), ..fit.clone() };
    exec.map(b, |k| {
        let mut rng = rng_for(seed, stream, k as u64);
        let y = sample_responses(&eta, family, &mut rng).ok()?;
        let r = fit_glm(x, &y, family, &opts);
        r.is_converged().then_some(r.beta_hat)
    })
}

pub fn run_bootstrap<E: Executor>(
    data: &Dataset,
    resized: &ResizedCoefficients,
    b: usize,
    seed: u64,
    opts: &BootOptions,
    exec: &E,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::InvalidArgument(alloc::format!("need B >= 2 bootstrap replicates (got {b})")));
    }
    if resized.beta_star.len() != data.p() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "beta_star has length {}, data have p = {}",
            resized.beta_star.len(),
            data.p()
        )));
    }
    let reps =
        parametric_replicates(data.x(), data.family(), &resized.beta_star, b, seed, Stream::Bootstrap, &opts.fit, exec);
    BootstrapSummary::from_replicates(&reps, &resized.beta_star, resized.intercept, opts.max_failure_frac)
}
