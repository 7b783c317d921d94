//! Local linear regression (LOESS, degree 1) and isotonic regression.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Degree-1 LOESS with tricube weights: at each evaluation point, the
/// `⌈span·n⌉` nearest observations are weighted by `(1 - (d/h)³)³` where
/// `h` is the distance to the farthest of them, and a weighted straight
/// line is fitted. Falls back to the weighted mean when all weighted `x`
/// coincide.
pub fn loess_linear(x: &[f64], y: &[f64], span: f64, at: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(alloc::format!("{} x values, {} y values", x.len(), y.len())));
    }
    if !(span > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("span must be positive (got {span})")));
    }
    let n = x.len();
    let q = (libm::ceil(span * n as f64) as usize).clamp(1, n);
    let mut dist = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(at.len());
    for &x0 in at {
        dist.clear();
        dist.extend(x.iter().map(|&xi| (xi - x0).abs()));
        let mut sorted = dist.clone();
        sorted.sort_by(f64::total_cmp);
        let mut h = sorted[q - 1];
        if span > 1.0 {
            h *= span;
        }
        let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&d, &xi), &yi) in dist.iter().zip(x).zip(y) {
            let w = if h > 0.0 {
                let r = d / h;
                if r < 1.0 {
                    let c = 1.0 - r * r * r;
                    c * c * c
                } else {
                    0.0
                }
            } else if d == 0.0 {
                1.0
            } else {
                0.0
            };
            if w > 0.0 {
                let dx = xi - x0;
                sw += w;
                swx += w * dx;
                swy += w * yi;
                swxx += w * dx * dx;
                swxy += w * dx * yi;
            }
        }
        if !(sw > 0.0) {
            // every neighbour sits exactly at the window edge
            let k = dist.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
            out.push(y[k]);
            continue;
        }
        let mx = swx / sw;
        let my = swy / sw;
        let sxx = swxx / sw - mx * mx;
        let value = if sxx > 1e-12 * (swxx / sw).max(f64::MIN_POSITIVE) {
            let slope = (swxy / sw - mx * my) / sxx;
            // centred at x0, so the intercept is the fitted value
            my - slope * mx
        } else {
            my
        };
        out.push(value);
    }
    Ok(out)
}

/// Weighted least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic_increasing(y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if y.len() != w.len() {
        return Err(Error::DimensionMismatch(alloc::format!("{} values, {} weights", y.len(), w.len())));
    }
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("isotonic weights must be positive".into()));
    }
    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let wt = w1 + w2;
            *blocks.last_mut().unwrap() = ((w1 * m1 + w2 * m2) / wt, wt, l1 + l2);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, _, l) in blocks {
        out.extend(core::iter::repeat_n(m, l));
    }
    Ok(out)
}

/// Smallest `x` at which the piecewise-linear curve through `(xs, ys)`
/// (with `ys` non-decreasing) reaches `target`. `None` when `target`
/// exceeds the last value; the first knot when `target` is below the
/// first value.
pub fn invert_monotone(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    let first = *ys.first()?;
    if target <= first {
        return Some(xs[0]);
    }
    let k = ys.iter().position(|&v| v >= target)?;
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    if y1 == y0 {
        return Some(x0);
    }
    Some(x0 + (target - y0) / (y1 - y0) * (x1 - x0))
}

/// Piecewise-linear interpolation through `(xs, ys)`, constant beyond the ends.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    if x1 == x0 {
        return y1;
    }
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}
