//! Damped Newton maximum likelihood with separability detection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glm::{Dataset, Family};
use crate::linalg::{norm2, Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Convergence when the Euclidean norm of the gradient of the summed
    /// negative log-likelihood falls to this value.
    pub grad_tol: f64,
    /// ...and the Newton step is below `step_tol · (1 + ‖β‖∞)` in max norm.
    /// On separated data the gradient vanishes while Newton steps stay O(1).
    pub step_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// `‖β‖₂` beyond which the iterates are declared divergent.
    pub divergence_norm: f64,
    /// Binary families: average loss below this (with a gradient still above
    /// tolerance) means the data are perfectly separated.
    pub separation_loss: f64,
    /// Relative ridge for the single retry when Cholesky fails.
    pub ridge: f64,
    pub start: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grad_tol: 1e-8,
            step_tol: 1e-4,
            max_iter: 100,
            max_halvings: 30,
            divergence_norm: 1e6,
            separation_loss: 1e-10,
            ridge: 1e-10,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitStatus {
    Converged,
    Separable,
    MaxIter,
    SingularHessian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// Linear predictors `t_i = x_iᵀβ̂`.
    pub eta_lin: Vec<f64>,
    /// Hessian of the summed negative log-likelihood at `beta_hat`.
    pub hessian: Matrix,
    pub status: FitStatus,
    pub grad_norm: f64,
    pub objective: f64,
    pub iterations: usize,
    /// Objective at the start of every iteration (non-increasing up to the
    /// rounding error of the summed loss).
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn is_converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    /// `Ok(self)` for converged fits, the matching error otherwise.
    pub fn ensure_converged(&self) -> Result<&Self> {
        match self.status {
            FitStatus::Converged => Ok(self),
            FitStatus::Separable => Err(Error::Separable),
            FitStatus::SingularHessian => Err(Error::SingularHessian),
            FitStatus::MaxIter => Err(Error::MaxIter { grad_norm: self.grad_norm }),
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(&self.hessian)
    }

    /// Classical standard errors `sqrt((H⁻¹)_jj)`.
    pub fn standard_errors(&self) -> Result<Vec<f64>> {
        let chol = self.cholesky()?;
        Ok(chol.inverse_diagonal().into_iter().map(libm::sqrt).collect())
    }
}

/// Fits the GLM on a validated dataset.
pub fn fit_mle(data: &Dataset, opts: &FitOptions) -> FitResult {
    fit_glm(data.x(), data.y(), data.family(), opts)
}

struct Eval {
    loss: f64,
    /// `Σ|f_i|`, for the rounding error of `loss`.
    abs_sum: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn evaluate(family: Family, y: &[f64], t: &[f64], want_derivs: bool) -> Eval {
    if !want_derivs {
        let (loss, abs_sum) = y.iter().zip(t).fold((0.0, 0.0), |(s, a), (&yi, &ti)| {
            let v = family.value(yi, ti);
            (s + v, a + v.abs())
        });
        return Eval { loss, abs_sum, first: Vec::new(), second: Vec::new() };
    }
    let n = y.len();
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    let mut loss = 0.0;
    let mut abs_sum = 0.0;
    for (&yi, &ti) in y.iter().zip(t) {
        let d = family.derivatives(yi, ti);
        loss += d.value;
        abs_sum += d.value.abs();
        first.push(d.first);
        second.push(d.second);
    }
    Eval { loss, abs_sum, first, second }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Binary fits that stop without converging while some observation is
/// fitted with probability 1 to double precision are quasi-separated.
const SATURATION_MARGIN: f64 = 36.0;

/// Newton iterations with Cholesky solves and step halving, on borrowed
/// parts so bootstrap loops need not clone `x`.
pub fn fit_glm(x: &Matrix, y: &[f64], family: Family, opts: &FitOptions) -> FitResult {
    let (n, p) = (x.rows(), x.cols());
    let mut beta = match &opts.start {
        Some(s) if s.len() == p => s.clone(),
        _ => vec![0.0; p],
    };
    let mut t = x.mul_vec(&beta);
    let mut trace = Vec::new();
    let mut iterations = 0;

    let (status, eval, grad_norm, hessian) = loop {
        let eval = evaluate(family, y, &t, true);
        let grad = x.tr_mul_vec(&eval.first);
        let grad_norm = norm2(&grad);
        trace.push(eval.loss);

        let hessian = x.weighted_gram(&eval.second);
        let chol = Cholesky::with_ridge_fallback(&hessian, opts.ridge);
        let direction = chol.as_ref().ok().map(|c| {
            let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
            c.solve(&neg_grad)
        });

        if grad_norm <= opts.grad_tol {
            let step_small = direction.as_ref().is_some_and(|d| max_abs(d) <= opts.step_tol * (1.0 + max_abs(&beta)));
            if step_small {
                break (FitStatus::Converged, eval, grad_norm, hessian);
            }
        }
        let beta_norm = norm2(&beta);
        if !beta_norm.is_finite() || beta_norm > opts.divergence_norm {
            break (FitStatus::Separable, eval, grad_norm, hessian);
        }
        if family.is_binary() && eval.loss < n as f64 * opts.separation_loss {
            break (FitStatus::Separable, eval, grad_norm, hessian);
        }
        if iterations == opts.max_iter {
            break (FitStatus::MaxIter, eval, grad_norm, hessian);
        }
        let Some(direction) = direction else {
            break (FitStatus::SingularHessian, eval, grad_norm, hessian);
        };
        iterations += 1;
        let xd = x.mul_vec(&direction);

        // Once the predicted decrease is below the rounding error of the
        // summed loss, comparisons are noise: take the full step.
        let decrement: f64 = -0.5 * grad.iter().zip(&direction).map(|(g, d)| g * d).sum::<f64>();
        let noise = (n as f64) * f64::EPSILON * eval.abs_sum;
        let mut step = 1.0;
        let mut accepted = None;
        let mut t_new = vec![0.0; n];
        for _ in 0..=opts.max_halvings {
            for ((tn, &ti), &di) in t_new.iter_mut().zip(&t).zip(&xd) {
                *tn = ti + step * di;
            }
            let loss = evaluate(family, y, &t_new, false).loss;
            if loss <= eval.loss || (step == 1.0 && decrement <= noise && loss <= eval.loss + noise) {
                accepted = Some(step);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(step) => {
                for (b, d) in beta.iter_mut().zip(&direction) {
                    *b += step * d;
                }
                core::mem::swap(&mut t, &mut t_new);
            }
            // no non-increasing step along the Newton direction
            None => break (FitStatus::MaxIter, eval, grad_norm, hessian),
        }
    };

    let mut status = status;
    if family.is_binary()
        && matches!(status, FitStatus::MaxIter | FitStatus::SingularHessian)
        && y.iter().zip(&t).any(|(yi, ti)| yi * ti > SATURATION_MARGIN)
    {
        status = FitStatus::Separable;
    }
    if status == FitStatus::Converged && Cholesky::new(&hessian).is_err() {
        status = FitStatus::SingularHessian;
    }
    FitResult { beta_hat: beta, eta_lin: t, hessian, status, grad_norm, objective: eval.loss, iterations, trace }
}
