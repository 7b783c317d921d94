//! Confidence intervals: classical Wald, bias-corrected Gaussian (boot-g)
//! and bootstrap-quantile (boot-t).

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::boot::BootstrapSummary;
use crate::error::{Error, Result};
use crate::glm::FitResult;
use crate::math::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    Classical,
    BootG,
    BootT,
    /// Gaussian interval from a pairs bootstrap (comparison only).
    Pairs,
    /// Gaussian interval from a parametric bootstrap at the MLE (comparison only).
    Parametric,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Classical, Method::BootG, Method::BootT, Method::Pairs, Method::Parametric];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::BootG => "boot-g",
            Method::BootT => "boot-t",
            Method::Pairs => "pairs",
            Method::Parametric => "parametric",
        }
    }

    /// Whether the method uses the resized bootstrap (and hence a `γ`).
    pub fn is_resized(self) -> bool {
        matches!(self, Method::BootG | Method::BootT)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalSet {
    pub method: Method,
    pub level: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn covers(&self, j: usize, value: f64) -> bool {
        self.lo[j] <= value && value <= self.hi[j]
    }

    pub fn width(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }
}

fn check_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(1.0 - level)
    } else {
        Err(Error::InvalidArgument(alloc::format!("level must lie in (0, 1) (got {level})")))
    }
}

fn alpha_for(summary: &BootstrapSummary, j: usize) -> f64 {
    if Some(j) == summary.intercept {
        1.0
    } else {
        summary.alpha_hat
    }
}

/// `β̂_j ± z_{1-q/2} sqrt((H⁻¹)_jj)`.
pub fn classical_wald_ci(fit: &FitResult, level: f64) -> Result<IntervalSet> {
    let q = check_level(level)?;
    let se = fit.standard_errors()?;
    let z = normal_quantile(1.0 - q / 2.0);
    Ok(IntervalSet {
        method: Method::Classical,
        level,
        lo: fit.beta_hat.iter().zip(&se).map(|(b, s)| b - z * s).collect(),
        hi: fit.beta_hat.iter().zip(&se).map(|(b, s)| b + z * s).collect(),
    })
}

/// `[(β̂_j - z_{1-q/2} σ̂_j)/α̂, (β̂_j - z_{q/2} σ̂_j)/α̂]`; the intercept,
/// which is not resized, uses `α = 1`.
pub fn boot_g_ci(fit: &FitResult, summary: &BootstrapSummary, level: f64) -> Result<IntervalSet> {
    gaussian_interval(&fit.beta_hat, summary, level, Method::BootG)
}

/// The boot-g construction under another method label (used for the
/// pairs and parametric-at-MLE comparison bootstraps).
pub fn gaussian_interval(
    beta_hat: &[f64],
    summary: &BootstrapSummary,
    level: f64,
    method: Method,
) -> Result<IntervalSet> {
    let q = check_level(level)?;
    if !(summary.alpha_hat > 0.0) {
        return Err(Error::NonPositiveAlpha(summary.alpha_hat));
    }
    let z_hi = normal_quantile(1.0 - q / 2.0);
    let z_lo = normal_quantile(q / 2.0);
    let mut lo = Vec::with_capacity(beta_hat.len());
    let mut hi = Vec::with_capacity(beta_hat.len());
    for (j, (&b, &s)) in beta_hat.iter().zip(&summary.sigma_hat).enumerate() {
        let a = alpha_for(summary, j);
        lo.push((b - z_hi * s) / a);
        hi.push((b - z_lo * s) / a);
    }
    Ok(IntervalSet { method, level, lo, hi })
}

/// Replicates needed for boot-t at `level`: `⌈40/q⌉`.
pub fn boot_t_min_replicates(level: f64) -> usize {
    let q = 1.0 - level;
    libm::ceil(40.0 / q - 1e-6) as usize
}

/// Quantiles of the pivots `(β̂^b_j - α̂ β⋆_j)/σ̂_j` replace the Gaussian
/// quantiles of [`boot_g_ci`].
#[allow(clippy::needless_range_loop)]
pub fn boot_t_ci(fit: &FitResult, summary: &BootstrapSummary, beta_star: &[f64], level: f64) -> Result<IntervalSet> {
    let q = check_level(level)?;
    if !(summary.alpha_hat > 0.0) {
        return Err(Error::NonPositiveAlpha(summary.alpha_hat));
    }
    let b = summary.b();
    let required = boot_t_min_replicates(level);
    if b < required {
        return Err(Error::InsufficientReplicates { b, level, required });
    }
    let p = fit.beta_hat.len();
    let mut lo = Vec::with_capacity(p);
    let mut hi = Vec::with_capacity(p);
    let mut pivots = Vec::with_capacity(b);
    for j in 0..p {
        let a = alpha_for(summary, j);
        let s = summary.sigma_hat[j];
        let bj = fit.beta_hat[j];
        if !(s > 0.0) {
            lo.push(bj / a);
            hi.push(bj / a);
            continue;
        }
        pivots.clear();
        pivots.extend((0..b).map(|k| (summary.boot_mles[(k, j)] - a * beta_star[j]) / s));
        pivots.sort_by(f64::total_cmp);
        let t_hi = quantile_sorted(&pivots, 1.0 - q / 2.0);
        let t_lo = quantile_sorted(&pivots, q / 2.0);
        lo.push((bj - t_hi * s) / a);
        hi.push((bj - t_lo * s) / a);
    }
    Ok(IntervalSet { method: Method::BootT, level, lo, hi })
}

/// Linear interpolation between order statistics at position `(m-1)q`.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(alloc::format!("quantile level must lie in [0, 1] (got {q})")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let k = libm::floor(h) as usize;
    if k + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[k] + (h - k as f64) * (sorted[k + 1] - sorted[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::FitStatus;
    use crate::linalg::Matrix;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn summary(alpha: f64, sigma: Vec<f64>, boot: Matrix) -> BootstrapSummary {
        let p = sigma.len();
        BootstrapSummary {
            n_requested: boot.rows(),
            boot_mles: boot,
            sigma_hat: sigma,
            alpha_hat: alpha,
            beta_bar: vec![0.0; p],
            n_failed: 0,
            intercept: None,
        }
    }

    fn fit_with(beta: Vec<f64>, hessian: Matrix) -> FitResult {
        FitResult {
            eta_lin: vec![],
            hessian,
            status: FitStatus::Converged,
            grad_norm: 0.0,
            objective: 0.0,
            iterations: 0,
            trace: vec![],
            beta_hat: beta,
        }
    }

    #[test]
    fn quantiles() {
        assert_eq!(empirical_quantile(&[5.0, 1.0, 3.0, 2.0, 4.0], 0.5).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&[4.0, 3.0, 2.0, 1.0], 0.5).unwrap(), 2.5);
        assert_eq!(empirical_quantile(&[4.0, 3.0, 2.0, 1.0], 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&[4.0, 3.0, 2.0, 1.0], 1.0).unwrap(), 4.0);
        assert_eq!(empirical_quantile(&[], 0.5).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn wald_unit_hessian() {
        let ci = classical_wald_ci(&fit_with(vec![0.0], Matrix::identity(1)), 0.95).unwrap();
        assert_relative_eq!(ci.lo[0], -1.959_963_984_540_054, epsilon = 1e-12);
        assert_relative_eq!(ci.hi[0], 1.959_963_984_540_054, epsilon = 1e-12);
    }

    #[test]
    fn boot_g_substitution() {
        let fit = fit_with(vec![0.0, 4.0], Matrix::identity(2));
        let s = summary(1.0, vec![1.0, 1.0], Matrix::zeros(2, 2));
        let ci = boot_g_ci(&fit, &s, 0.95).unwrap();
        assert_relative_eq!(ci.hi[0], 1.959_963_984_540_054, epsilon = 1e-12);
        let s = summary(2.0, vec![1.0, 1.0], Matrix::zeros(2, 2));
        let ci = boot_g_ci(&fit, &s, 0.95).unwrap();
        assert_relative_eq!(ci.lo[1], (4.0 - 1.959_963_984_540_054) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(ci.hi[1], (4.0 + 1.959_963_984_540_054) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(ci.width(1), 2.0 * 1.959_963_984_540_054 / 2.0, epsilon = 1e-12);
        let s = summary(-0.5, vec![1.0, 1.0], Matrix::zeros(2, 2));
        assert_eq!(boot_g_ci(&fit, &s, 0.95).unwrap_err(), Error::NonPositiveAlpha(-0.5));
    }

    #[test]
    fn boot_t_with_normal_pivots_matches_boot_g() {
        // pivots on the exact normal quantile grid
        let b = 4001;
        let grid: Vec<f64> = (0..b).map(|k| normal_quantile((k as f64 + 0.5) / b as f64)).collect();
        let (alpha, sigma, beta_star) = (1.2, 0.7, 3.0);
        let boot: Vec<f64> = grid.iter().map(|u| alpha * beta_star + sigma * u).collect();
        let s = summary(alpha, vec![sigma], Matrix::from_row_major(b, 1, boot).unwrap());
        let fit = fit_with(vec![4.0], Matrix::identity(1));
        let t = boot_t_ci(&fit, &s, &[beta_star], 0.9).unwrap();
        let g = boot_g_ci(&fit, &s, 0.9).unwrap();
        assert_relative_eq!(t.lo[0], g.lo[0], epsilon = 2e-3);
        assert_relative_eq!(t.hi[0], g.hi[0], epsilon = 2e-3);
        // symmetric pivots: symmetric about β̂/α̂
        assert_relative_eq!(t.hi[0] - 4.0 / alpha, 4.0 / alpha - t.lo[0], epsilon = 1e-9);
    }

    #[test]
    fn boot_t_needs_enough_replicates() {
        assert_eq!(boot_t_min_replicates(0.95), 800);
        assert_eq!(boot_t_min_replicates(0.8), 200);
        let s = summary(1.0, vec![1.0], Matrix::zeros(100, 1));
        let fit = fit_with(vec![0.0], Matrix::identity(1));
        assert!(matches!(boot_t_ci(&fit, &s, &[0.0], 0.95), Err(Error::InsufficientReplicates { required: 800, .. })));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("hdt".parse::<Method>().is_err());
    }
}
