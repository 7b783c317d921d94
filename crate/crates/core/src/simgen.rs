//! Simulation designs: covariate generators, sparse coefficient schemes and
//! GLM responses, plus named presets for the standard experiments.
//!
//! Every generator scales its columns so that each covariate has variance
//! `1/p`, which keeps `sd(xᵀβ)` of order one when `β` has O(1) entries.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Pareto, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{derive_seed, rng_for, Stream};
use crate::glm::{Dataset, Family};
use crate::linalg::{dot, Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Covariates {
    /// Multivariate t with `nu` degrees of freedom and circulant scale
    /// matrix `Σ_ij = rho^min(d, p-d)`, `d = |i-j|`.
    Mvt {
        nu: f64,
        rho: f64,
    },
    /// Row `ζ·ε` where `ζ = 1/χ_ν` and `ε` follows an ARCH(1) recursion
    /// across the columns, restarted in every row.
    ModifiedArch {
        nu: f64,
        alpha0: f64,
        alpha1: f64,
    },
    /// Independent Pareto entries with density `shape·scale^shape / x^(shape+1)`.
    ParetoIid {
        shape: f64,
        scale: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_true"))]
        center: bool,
    },
    GaussianIid,
}

#[cfg(feature = "serde")]
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Coefficients {
    /// `k` non-nulls drawn from the equal mixture of `N(mu, sd²)` and `N(-mu, sd²)`.
    Mixture { k: usize, mu: f64, sd: f64 },
    /// `k` non-nulls equal to `±magnitude` with fair random signs.
    FixedMagnitude { k: usize, magnitude: f64 },
}

impl Coefficients {
    pub fn k(&self) -> usize {
        match *self {
            Coefficients::Mixture { k, .. } | Coefficients::FixedMagnitude { k, .. } => k,
        }
    }

    fn with_k(&self, k: usize) -> Coefficients {
        match *self {
            Coefficients::Mixture { mu, sd, .. } => Coefficients::Mixture { k, mu, sd },
            Coefficients::FixedMagnitude { magnitude, .. } => Coefficients::FixedMagnitude { k, magnitude },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignSpec {
    pub n: usize,
    pub p: usize,
    pub covariates: Covariates,
    pub coefficients: Coefficients,
    pub family: Family,
    /// When set, the drawn coefficients are rescaled so that the population
    /// signal strength `sd(x_newᵀβ)` equals this value.
    #[cfg_attr(feature = "serde", serde(default))]
    pub target_gamma: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

/// Names accepted by [`DesignSpec::preset`].
pub const PRESETS: [&str; 6] =
    ["mvt-large", "arch-large", "arch-probit-large", "pareto-small", "poisson-large", "sparse-appendixC"];

impl DesignSpec {
    pub fn preset(name: &str) -> Result<DesignSpec> {
        let mvt = Covariates::Mvt { nu: 8.0, rho: 0.5 };
        let arch = Covariates::ModifiedArch { nu: 8.0, alpha0: 0.6, alpha1: 0.4 };
        let mixture = |k, mu| Coefficients::Mixture { k, mu, sd: 1.0 };
        let spec = |n, p, covariates, coefficients, family| DesignSpec {
            n,
            p,
            covariates,
            coefficients,
            family,
            target_gamma: None,
            seed: 0,
        };
        Ok(match name.to_ascii_lowercase().as_str() {
            "mvt-large" => spec(4000, 400, mvt, mixture(50, 5.0), Family::Logistic),
            "arch-large" => spec(4000, 400, arch, mixture(50, 5.0), Family::Logistic),
            "arch-probit-large" => spec(4000, 400, arch, mixture(50, 3.0), Family::Probit),
            "pareto-small" => spec(
                400,
                40,
                Covariates::ParetoIid { shape: 5.0, scale: 1.0, center: true },
                mixture(20, 5.0),
                Family::Logistic,
            ),
            "poisson-large" => spec(4000, 400, mvt, mixture(50, 3.0), Family::PoissonLog),
            // 1/p = 0.025 for the conditional variance pins p = 40
            "sparse-appendixc" => {
                spec(400, 40, arch, Coefficients::FixedMagnitude { k: 10, magnitude: 10.0 }, Family::Logistic)
            }
            other => {
                return Err(Error::InvalidDesign(format!("unknown design '{other}' (known: {})", PRESETS.join(", "))))
            }
        })
    }

    /// Same design at a different size; the number of non-nulls scales
    /// with `p` (rounded half up).
    pub fn resized(&self, n: usize, p: usize) -> DesignSpec {
        let k0 = self.coefficients.k();
        let k = (k0 * p + self.p / 2).checked_div(self.p).unwrap_or(k0);
        DesignSpec { n, p, coefficients: self.coefficients.with_k(k.min(p)), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDesign(m));
        if self.p == 0 || self.n < self.p + 1 {
            return bad(format!("need p >= 1 and n >= p+1 (n = {}, p = {})", self.n, self.p));
        }
        match self.covariates {
            Covariates::Mvt { nu, rho } => {
                if !(nu > 2.0) {
                    return bad(format!("mvt needs nu > 2 (got {nu})"));
                }
                if !(rho.abs() < 1.0) {
                    return bad(format!("mvt needs |rho| < 1 (got {rho})"));
                }
            }
            Covariates::ModifiedArch { nu, alpha0, alpha1 } => {
                if !(nu > 2.0) {
                    return bad(format!("modified ARCH needs nu > 2 (got {nu})"));
                }
                if !(alpha0 > 0.0) || !(0.0..1.0).contains(&alpha1) {
                    return bad(format!("modified ARCH needs alpha0 > 0, 0 <= alpha1 < 1 (got {alpha0}, {alpha1})"));
                }
            }
            Covariates::ParetoIid { shape, scale, .. } => {
                if !(shape > 2.0) || !(scale > 0.0) {
                    return bad(format!("Pareto needs shape > 2 and scale > 0 (got {shape}, {scale})"));
                }
            }
            Covariates::GaussianIid => {}
        }
        let k = self.coefficients.k();
        if k > self.p {
            return bad(format!("{k} non-nulls requested but p = {}", self.p));
        }
        match self.coefficients {
            Coefficients::Mixture { mu, sd, .. } if !mu.is_finite() || !(sd >= 0.0) || !sd.is_finite() => {
                return bad(format!("mixture needs finite mu and sd >= 0 (got {mu}, {sd})"))
            }
            Coefficients::FixedMagnitude { magnitude, .. } if !magnitude.is_finite() => {
                return bad(format!("non-finite magnitude {magnitude}"))
            }
            _ => {}
        }
        if let Some(g) = self.target_gamma {
            if !(g >= 0.0) || !g.is_finite() {
                return bad(format!("target gamma must be finite and >= 0 (got {g})"));
            }
        }
        Ok(())
    }

    /// Population covariance of one covariate row.
    pub fn population_covariance(&self) -> Matrix {
        let p = self.p;
        let mut c = match self.covariates {
            Covariates::Mvt { rho, .. } => circulant(p, rho),
            _ => Matrix::identity(p),
        };
        let inv_p = 1.0 / p as f64;
        for i in 0..p {
            for v in c.row_mut(i) {
                *v *= inv_p;
            }
        }
        c
    }

    /// `sd(x_newᵀβ)` under the population covariance of the design.
    pub fn population_gamma(&self, beta: &[f64]) -> f64 {
        match self.covariates {
            Covariates::Mvt { rho, .. } => {
                let sigma = circulant(self.p, rho);
                libm::sqrt(dot(beta, &sigma.mul_vec(beta)).max(0.0) / self.p as f64)
            }
            _ => libm::sqrt(dot(beta, beta) / self.p as f64),
        }
    }

    /// The fixed coefficient vector of this design (seeded by `self.seed`).
    pub fn true_coefficients(&self) -> Result<Vec<f64>> {
        gen_coefficients(self, &mut rng_for(self.seed, Stream::Coefficients, 0))
    }

    /// Repetition `rep` of the design: fresh covariates and responses at
    /// the fixed coefficients.
    pub fn simulate(&self, rep: u64) -> Result<Simulated> {
        let beta = self.true_coefficients()?;
        let rep_seed = derive_seed(self.seed, Stream::Repetition, rep);
        let x = gen_covariates(self, &mut rng_for(rep_seed, Stream::Covariates, 0))?;
        let y = gen_response(&x, &beta, self.family, &mut rng_for(rep_seed, Stream::Response, 0))?;
        let gamma = self.population_gamma(&beta);
        Ok(Simulated { dataset: Dataset::new(x, y, self.family, false)?, beta, gamma })
    }
}

/// One simulated dataset with the truth that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub dataset: Dataset,
    pub beta: Vec<f64>,
    /// Population signal strength of `beta`.
    pub gamma: f64,
}

/// `p × p` circulant matrix `Σ_ij = rho^min(d, p-d)`, `d = |i-j|`.
pub fn circulant(p: usize, rho: f64) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let d = i.abs_diff(j);
            m[(i, j)] = libm::pow(rho, d.min(p - d) as f64);
        }
    }
    m
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gen_covariates<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Result<Matrix> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let pf = p as f64;
    let mut x = Matrix::zeros(n, p);
    match spec.covariates {
        Covariates::Mvt { nu, rho } => {
            let chol = Cholesky::new(&circulant(p, rho)).map_err(|_| {
                Error::InvalidDesign(format!("circulant matrix with rho = {rho} is not positive definite"))
            })?;
            let l = chol.factor();
            let chi2 = ChiSquared::new(nu).map_err(|e| Error::InvalidDesign(format!("{e}")))?;
            // Σ_jj = 1, so each coordinate has variance ν/(ν-2) before scaling
            let c = 1.0 / libm::sqrt(pf * nu / (nu - 2.0));
            let mut z = vec![0.0; p];
            for i in 0..n {
                z.iter_mut().for_each(|v| *v = normal(rng));
                let w: f64 = chi2.sample(rng);
                let mix = c / libm::sqrt(w / nu);
                let row = x.row_mut(i);
                for (j, r) in row.iter_mut().enumerate() {
                    *r = mix * dot(&l.row(j)[..=j], &z[..=j]);
                }
            }
        }
        Covariates::ModifiedArch { nu, alpha0, alpha1 } => {
            let chi2 = ChiSquared::new(nu).map_err(|e| Error::InvalidDesign(format!("{e}")))?;
            let sd0 = libm::sqrt(alpha0 / (1.0 - alpha1));
            for i in 0..n {
                let w: f64 = chi2.sample(rng);
                let zeta = 1.0 / libm::sqrt(w);
                let mut prev = sd0 * normal(rng);
                for r in x.row_mut(i) {
                    let e = libm::sqrt(alpha0 + alpha1 * prev * prev) * normal(rng);
                    *r = zeta * e;
                    prev = e;
                }
            }
            // the product ζ·ε has no convenient closed-form variance
            for j in 0..p {
                let col = x.column(j);
                let sd = crate::math::std_dev(&col, 1);
                if !(sd > 0.0) {
                    return Err(Error::InvalidDesign(format!("covariate column {j} is constant")));
                }
                x.scale_column(j, 1.0 / (sd * libm::sqrt(pf)));
            }
        }
        Covariates::ParetoIid { shape, scale, center } => {
            let dist = Pareto::new(scale, shape).map_err(|e| Error::InvalidDesign(format!("{e}")))?;
            let mean = shape * scale / (shape - 1.0);
            let sd = scale * libm::sqrt(shape / (shape - 2.0)) / (shape - 1.0);
            let shift = if center { mean } else { 0.0 };
            let k = 1.0 / (sd * libm::sqrt(pf));
            for v in x.as_mut_slice() {
                let draw: f64 = dist.sample(rng);
                *v = (draw - shift) * k;
            }
        }
        Covariates::GaussianIid => {
            let k = 1.0 / libm::sqrt(pf);
            for v in x.as_mut_slice() {
                *v = k * normal(rng);
            }
        }
    }
    Ok(x)
}

/// Sparse coefficients: `k` positions chosen uniformly without replacement,
/// zeros elsewhere. Rescaled to `target_gamma` when the design sets one.
pub fn gen_coefficients<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let p = spec.p;
    let k = spec.coefficients.k();
    let mut positions = rand::seq::index::sample(rng, p, k).into_vec();
    positions.sort_unstable();
    let mut beta = vec![0.0; p];
    for j in positions {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        beta[j] = match spec.coefficients {
            Coefficients::Mixture { mu, sd, .. } => sign * mu + sd * normal(rng),
            Coefficients::FixedMagnitude { magnitude, .. } => sign * magnitude,
        };
    }
    if let Some(target) = spec.target_gamma {
        let g = spec.population_gamma(&beta);
        if g == 0.0 {
            if target > 0.0 {
                return Err(Error::InvalidDesign(format!(
                    "cannot rescale zero coefficients to signal strength {target}"
                )));
            }
        } else {
            let c = target / g;
            beta.iter_mut().for_each(|b| *b *= c);
        }
    }
    Ok(beta)
}

/// Responses at linear predictors `Xβ` (binary responses as `±1`).
pub fn gen_response<R: Rng + ?Sized>(x: &Matrix, beta: &[f64], family: Family, rng: &mut R) -> Result<Vec<f64>> {
    if x.cols() != beta.len() {
        return Err(Error::DimensionMismatch(format!("{} covariates but {} coefficients", x.cols(), beta.len())));
    }
    sample_responses(&x.mul_vec(beta), family, rng)
}

pub(crate) fn sample_responses<R: Rng + ?Sized>(eta: &[f64], family: Family, rng: &mut R) -> Result<Vec<f64>> {
    eta.iter()
        .enumerate()
        .map(|(i, &t)| {
            family.sample(t, rng).map_err(|e| match e {
                Error::PoissonOverflow { eta, .. } => Error::PoissonOverflow { index: i, eta },
                other => other,
            })
        })
        .collect()
}
