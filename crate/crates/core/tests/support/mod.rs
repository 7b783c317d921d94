//! Oracles shared by the integration and acceptance tests. Nothing here
//! calls into the library's fitting or derivative code: losses are written
//! out from the densities and minimized by first-order iterations.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use resizeboot_core::{Family, Matrix};

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Negative log-likelihood of one observation and its derivative in `t`.
/// Binary `y` is `±1`.
fn nll(family: Family, y: f64, t: f64) -> (f64, f64) {
    match family {
        Family::Logistic => {
            let m = y * t;
            // log(1 + e^{-m}) and its derivative -y/(1 + e^{m})
            let v = if m > 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
            (v, -y / (1.0 + m.exp()))
        }
        Family::Probit => {
            let m = y * t;
            let c = big_phi(m);
            (-c.ln(), -y * phi(m) / c)
        }
        Family::PoissonLog => {
            let e = t.exp();
            (e - y * t, e - y)
        }
    }
}

fn loss_grad(x: &Matrix, y: &[f64], family: Family, beta: &[f64]) -> (f64, Vec<f64>) {
    let p = x.cols();
    let mut g = vec![0.0; p];
    let mut loss = 0.0;
    for (i, row) in x.row_iter().enumerate() {
        let t: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let (v, d) = nll(family, y[i], t);
        loss += v;
        for j in 0..p {
            g[j] += d * row[j];
        }
    }
    (loss, g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Largest eigenvalue of `XᵀX` by power iteration.
fn gram_spectral_norm(x: &Matrix) -> f64 {
    let mut v = vec![1.0; x.cols()];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = x.tr_mul_vec(&x.mul_vec(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw / norm(&v);
        v = w.iter().map(|a| a / nw).collect();
        if (next - lambda).abs() <= 1e-12 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Curvature bound of the per-observation loss near linear predictors `t`.
fn curvature_bound(family: Family, t: &[f64]) -> f64 {
    match family {
        Family::Logistic => 0.25,
        Family::Probit => 1.0,
        Family::PoissonLog => 2.0 * t.iter().fold(0.0f64, |m, &v| m.max(v.exp())),
    }
}

/// Accelerated gradient descent with step `1/L` (`L` a bound on the
/// Hessian's spectral norm) and gradient-based momentum restarts, run until
/// the gradient norm is below `tol` or `max_iter` steps. No objective
/// comparisons are made, so progress is not limited by its rounding.
/// Returns the iterate and its gradient norm.
pub fn gradient_oracle(x: &Matrix, y: &[f64], family: Family, tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let p = x.cols();
    let gram = gram_spectral_norm(x);
    let mut beta = vec![0.0; p];
    let mut prev = beta.clone();
    let mut k = 0usize;
    for _ in 0..max_iter {
        k += 1;
        let mom = (k as f64 - 1.0) / (k as f64 + 2.0);
        let z: Vec<f64> = beta.iter().zip(&prev).map(|(b, q)| b + mom * (b - q)).collect();
        let (_, gz) = loss_grad(x, y, family, &z);
        if norm(&gz) <= tol && mom == 0.0 {
            break;
        }
        let lip = curvature_bound(family, &x.mul_vec(&z)) * gram;
        let next: Vec<f64> = z.iter().zip(&gz).map(|(a, g)| a - g / lip).collect();
        // restart when the step opposes the momentum direction
        let dot: f64 = gz.iter().zip(next.iter().zip(&beta)).map(|(g, (n, b))| g * (n - b)).sum();
        prev = std::mem::replace(&mut beta, next);
        if dot > 0.0 {
            k = 0;
            prev = beta.clone();
        }
        if k > 0 && norm(&loss_grad(x, y, family, &beta).1) <= tol {
            break;
        }
    }
    let (_, g) = loss_grad(x, y, family, &beta);
    (beta, norm(&g))
}

/// Gradient norm of the summed negative log-likelihood, from the formulas
/// above.
pub fn oracle_gradient_norm(x: &Matrix, y: &[f64], family: Family, beta: &[f64]) -> f64 {
    norm(&loss_grad(x, y, family, beta).1)
}

/// Responses drawn at linear predictors `eta` with a generator unrelated to
/// the library's seeding scheme.
pub struct DirectSampler {
    rng: ChaCha20Rng,
}

impl DirectSampler {
    pub fn new(seed: u64) -> Self {
        DirectSampler { rng: ChaCha20Rng::seed_from_u64(seed ^ 0x5EED_0FD1_2EC7) }
    }

    pub fn draw(&mut self, eta: &[f64], family: Family) -> Vec<f64> {
        eta.iter()
            .map(|&t| match family {
                Family::Logistic | Family::Probit => {
                    let p = if family == Family::Logistic { 1.0 / (1.0 + (-t).exp()) } else { big_phi(t) };
                    if self.rng.random::<f64>() < p {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Family::PoissonLog => {
                    // inversion by sequential search; fine for moderate means
                    let mu = t.exp();
                    let u: f64 = self.rng.random();
                    let (mut k, mut pk) = (0.0, (-mu).exp());
                    let mut cdf = pk;
                    while u > cdf && k < 1e6 {
                        k += 1.0;
                        pk *= mu / k;
                        cdf += pk;
                    }
                    k
                }
            })
            .collect()
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample sd with the `n - 1` divisor.
pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// `n × p` matrix of i.i.d. `N(0, scale²)` entries.
pub fn gaussian_matrix(n: usize, p: usize, scale: f64, seed: u64) -> Matrix {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * p)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    Matrix::from_row_major(n, p, data).unwrap()
}
