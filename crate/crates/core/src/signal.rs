//! Signal-strength estimation along the shrinkage path `s·β̂`.
//!
//! For `s` on a grid in `[0, 1]`, responses are simulated at `s·β̂` with
//! the observed covariates, refitted, and the SLOE estimate `η̂` of each
//! refit is recorded against `γ(s) = sd(X s β̂)`. A monotone smooth of
//! those points is inverted at the observed `η̃` to give `γ̂`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{rng_for, Executor, Stream};
use crate::glm::{fit_glm, Dataset, FitOptions, FitResult};
use crate::linalg::Matrix;
use crate::simgen::sample_responses;
use crate::sloe::{sloe_estimate, sloe_from_parts};
use crate::smooth::{interpolate, invert_monotone, isotonic_increasing, loess_linear};

/// Sample standard deviation (`n - 1` divisor) of `x_iᵀβ` with the
/// intercept coordinate, if any, left out.
pub fn sd_linear_predictor(x: &Matrix, beta: &[f64], intercept: Option<usize>) -> f64 {
    assert_eq!(x.cols(), beta.len(), "design has {} columns, beta has {}", x.cols(), beta.len());
    let t: Vec<f64> = x
        .row_iter()
        .map(|row| {
            row.iter().zip(beta).enumerate().filter(|(j, _)| Some(*j) != intercept).map(|(_, (a, b))| a * b).sum()
        })
        .collect();
    if t.len() < 2 {
        return 0.0;
    }
    crate::math::std_dev(&t, 1)
}

/// `s·β` with the intercept coordinate left untouched.
pub fn shrink(beta: &[f64], s: f64, intercept: Option<usize>) -> Vec<f64> {
    beta.iter().enumerate().map(|(j, &b)| if Some(j) == intercept { b } else { s * b }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    /// Number of grid points `I` (equally spaced `s` from 0 to 1).
    pub grid: usize,
    /// Replicates `J` per grid point.
    pub reps: usize,
    /// LOESS span.
    pub span: f64,
    pub fit: FitOptions,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { grid: 10, reps: 3, span: 0.75, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub s: f64,
    pub gamma: f64,
    /// One entry per replicate; `None` where the refit or SLOE failed.
    pub eta_samples: Vec<Option<f64>>,
}

impl Knot {
    pub fn survivors(&self) -> impl Iterator<Item = f64> + '_ {
        self.eta_samples.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCurve {
    pub knots: Vec<Knot>,
    /// Abscissae of the monotone smooth (distinct knot `γ` values with at
    /// least one surviving replicate).
    pub smooth_gamma: Vec<f64>,
    /// Non-decreasing smoothed `η̂` at `smooth_gamma`.
    pub smooth_eta: Vec<f64>,
    pub eta_tilde: f64,
    /// `None` when `eta_tilde` exceeds the top of the smoothed curve.
    pub gamma_hat: Option<f64>,
}

impl GammaCurve {
    /// Smoothed `η̂(γ)` (piecewise linear between knots).
    pub fn smooth_at(&self, gamma: f64) -> f64 {
        interpolate(&self.smooth_gamma, &self.smooth_eta, gamma)
    }

    pub fn n_failed(&self) -> usize {
        self.knots.iter().map(|k| k.eta_samples.iter().filter(|e| e.is_none()).count()).sum()
    }

    /// Knots at which every replicate failed (left out of the smooth).
    pub fn dropped_knots(&self) -> usize {
        self.knots.iter().filter(|k| k.survivors().next().is_none()).count()
    }

    /// The estimate, or the bracketing failure with diagnostics.
    pub fn gamma_hat(&self) -> Result<f64> {
        self.gamma_hat.ok_or(Error::CurveNotBracketing {
            eta_tilde: self.eta_tilde,
            eta_max: self.smooth_eta.last().copied().unwrap_or(f64::NAN),
            gamma_max: self.smooth_gamma.last().copied().unwrap_or(f64::NAN),
        })
    }
}

/// Simulates and smooths the `η̂(γ)` curve; `gamma_hat` is `None` when the
/// curve does not reach `η̃`. See [`estimate_gamma`] for the erroring form.
pub fn simulate_curve<E: Executor>(
    data: &Dataset,
    fit: &FitResult,
    opts: &CurveOptions,
    seed: u64,
    exec: &E,
) -> Result<GammaCurve> {
    if opts.grid < 4 || opts.reps < 1 {
        return Err(Error::InvalidArgument(alloc::format!(
            "curve needs at least 4 grid points and 1 replicate (got I = {}, J = {})",
            opts.grid,
            opts.reps
        )));
    }
    let eta_tilde = sloe_estimate(data, fit)?.eta_hat;
    let intercept = data.intercept_index();
    let x = data.x();
    let gamma_full = sd_linear_predictor(x, &fit.beta_hat, intercept);
    let (ni, nj) = (opts.grid, opts.reps);
    let s_values: Vec<f64> = (0..ni).map(|i| i as f64 / (ni - 1) as f64).collect();
    let paths: Vec<Vec<f64>> = s_values.iter().map(|&s| shrink(&fit.beta_hat, s, intercept)).collect();
    let etas: Vec<Vec<f64>> = paths.iter().map(|b| x.mul_vec(b)).collect();

    let samples = exec.map(ni * nj, |task| {
        let i = task / nj;
        let mut rng = rng_for(seed, Stream::CurveKnot, task as u64);
        let y = sample_responses(&etas[i], data.family(), &mut rng).ok()?;
        let fit_opts = FitOptions { start: Some(paths[i].clone()), ..opts.fit.clone() };
        let refit = fit_glm(x, &y, data.family(), &fit_opts);
        if !refit.is_converged() {
            return None;
        }
        sloe_from_parts(x, &y, data.family(), &refit).ok().map(|e| e.eta_hat)
    });

    let knots: Vec<Knot> = s_values
        .iter()
        .enumerate()
        .map(|(i, &s)| Knot { s, gamma: s * gamma_full, eta_samples: samples[i * nj..(i + 1) * nj].to_vec() })
        .collect();
    let (smooth_gamma, smooth_eta) = smooth_knots(&knots, opts.span)?;
    let gamma_hat = invert_monotone(&smooth_gamma, &smooth_eta, eta_tilde);
    Ok(GammaCurve { knots, smooth_gamma, smooth_eta, eta_tilde, gamma_hat })
}

/// Fits the curve and inverts it at `η̃`.
pub fn estimate_gamma<E: Executor>(
    data: &Dataset,
    fit: &FitResult,
    opts: &CurveOptions,
    seed: u64,
    exec: &E,
) -> Result<GammaCurve> {
    let curve = simulate_curve(data, fit, opts, seed, exec)?;
    curve.gamma_hat()?;
    Ok(curve)
}

/// LOESS through every surviving `(γ, η̂)` point, evaluated at the distinct
/// knot abscissae, then made non-decreasing by weighted PAVA.
fn smooth_knots(knots: &[Knot], span: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut px = Vec::new();
    let mut py = Vec::new();
    // (gamma, count) per distinct abscissa, in increasing order
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for k in knots {
        let before = py.len();
        for e in k.survivors() {
            px.push(k.gamma);
            py.push(e);
        }
        let added = (py.len() - before) as f64;
        if added == 0.0 {
            continue;
        }
        match groups.last_mut() {
            Some(g) if g.0 == k.gamma => g.1 += added,
            _ => groups.push((k.gamma, added)),
        }
    }
    if groups.is_empty() {
        return Err(Error::AllKnotsFailed);
    }
    let gx: Vec<f64> = groups.iter().map(|g| g.0).collect();
    let w: Vec<f64> = groups.iter().map(|g| g.1).collect();
    let raw = loess_linear(&px, &py, span, &gx)?;
    let mono = isotonic_increasing(&raw, &w)?;
    Ok((gx, mono))
}
