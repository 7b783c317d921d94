//! Single-fit leave-one-out estimate of `η = sd(x_newᵀβ̂)`.
//!
//! Each `S_i = x_iᵀβ̂ + q_i f'(t_i)` with `q_i = w_i / (1 - w_i f''(t_i))` and
//! `w_i = x_iᵀH⁻¹x_i` is a one-step approximation of `x_iᵀβ̂_(i)`, the
//! prediction at observation `i` of the fit without it. `η̂²` is the
//! (1/n) variance of the `S_i`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glm::{fit_glm, Dataset, Family, FitOptions, FitResult};
use crate::linalg::{dot, Matrix};

/// Guard on the denominator `1 - w_i f''(t_i)`.
pub const LEVERAGE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SloeEstimate {
    pub eta_hat: f64,
    pub s_values: Vec<f64>,
    pub w_values: Vec<f64>,
}

pub fn sloe_estimate(data: &Dataset, fit: &FitResult) -> Result<SloeEstimate> {
    sloe_from_parts(data.x(), data.y(), data.family(), fit)
}

pub fn sloe_from_parts(x: &Matrix, y: &[f64], family: Family, fit: &FitResult) -> Result<SloeEstimate> {
    fit.ensure_converged()?;
    let chol = fit.cholesky()?;
    let n = x.rows();
    let mut s_values = Vec::with_capacity(n);
    let mut w_values = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(x.cols());
    for (i, (row, &yi)) in x.row_iter().zip(y).enumerate() {
        let w = chol.inv_quad_form(row, &mut scratch);
        let t = dot(row, &fit.beta_hat);
        let d = family.derivatives(yi, t);
        let denom = 1.0 - w * d.second;
        if !(denom > LEVERAGE_EPS) {
            return Err(Error::LeverageDegenerate { index: i, denominator: denom });
        }
        let q = w / denom;
        let s = t + q * d.first;
        if !s.is_finite() {
            return Err(Error::LeverageDegenerate { index: i, denominator: denom });
        }
        s_values.push(s);
        w_values.push(w);
    }
    let nf = n as f64;
    let mean = s_values.iter().sum::<f64>() / nf;
    let mean_sq = s_values.iter().map(|s| s * s).sum::<f64>() / nf;
    // the two-moment form can dip below zero by rounding when all S_i agree
    let var = (mean_sq - mean * mean).max(0.0);
    Ok(SloeEstimate { eta_hat: libm::sqrt(var), s_values, w_values })
}

/// Exact leave-one-out counterpart: refits the model `n` times and returns
/// the (1/n) standard deviation of `x_iᵀβ̂_(i)`. Errors if any refit fails.
pub fn loo_oracle(data: &Dataset, opts: &FitOptions) -> Result<f64> {
    let n = data.n();
    let mut preds = Vec::with_capacity(n);
    let mut idx: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        idx.clear();
        idx.extend((0..n).filter(|&k| k != i));
        let sub_x = data.x().select_rows(&idx);
        let sub_y: Vec<f64> = idx.iter().map(|&k| data.y()[k]).collect();
        let fit = fit_glm(&sub_x, &sub_y, data.family(), opts);
        fit.ensure_converged()?;
        preds.push(dot(data.x().row(i), &fit.beta_hat));
    }
    Ok(crate::math::std_dev(&preds, 0))
}
