//! Linear-programming check for (quasi-)complete separation of binary data.
//!
//! The MLE fails to exist exactly when some `w ≠ 0` has `y_i x_iᵀw ≥ 0` for
//! every row with at least one strict inequality. The LP
//!
//! ```text
//! maximize Σ s_i   subject to   y_i x_iᵀw ≥ s_i,  0 ≤ s_i ≤ 1,  w free
//! ```
//!
//! has a positive optimum exactly in that case.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use resizeboot_core::Matrix;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCheck {
    pub separable: bool,
    /// Rows with a strictly positive margin along `direction`.
    pub separated_rows: usize,
    pub direction: Vec<f64>,
}

const TOL: f64 = 1e-7;

/// `y` in `±1` coding.
pub fn check_separation(x: &Matrix, y: &[f64]) -> Result<SeparationCheck, String> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(format!("{n} rows but {} responses", y.len()));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<_> = (0..p).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let s: Vec<_> = (0..n).map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
    for i in 0..n {
        let mut terms: Vec<_> =
            x.row(i).iter().zip(&w).filter(|(v, _)| **v != 0.0).map(|(&v, &var)| (var, y[i] * v)).collect();
        terms.push((s[i], -1.0));
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let outcome = lp.solve().map_err(|e| format!("separation LP failed: {e:?}"))?;
    let sol = outcome.solution().ok_or_else(|| "separation LP was interrupted".to_string())?;
    let separated_rows = s.iter().filter(|&&v| sol.var_value(v) > TOL).count();
    Ok(SeparationCheck {
        separable: sol.objective() > TOL,
        separated_rows,
        direction: w.iter().map(|&v| sol.var_value(v)).collect(),
    })
}
