//! GLM families as per-observation negative log-likelihoods `f_y(t)` of the
//! linear predictor `t`.
//!
//! Binary responses are encoded as `y ∈ {-1, +1}`; Poisson responses are
//! non-negative integer counts stored as `f64`.

use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::math::{log1p_exp, log_normal_cdf, mills_tail, normal_cdf, normal_pdf, sigmoid};

/// Largest Poisson mean the simulator will draw from.
pub const POISSON_MEAN_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Family {
    Logistic,
    Probit,
    #[cfg_attr(feature = "serde", serde(alias = "poisson"))]
    PoissonLog,
}

/// `(f, f', f'')` at one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logistic, Family::Probit, Family::PoissonLog];

    pub fn name(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Probit => "probit",
            Family::PoissonLog => "poisson-log",
        }
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, Family::PoissonLog)
    }

    /// Whether `y` is a valid (internally encoded) response.
    pub fn is_valid_response(self, y: f64) -> bool {
        match self {
            Family::Logistic | Family::Probit => y == 1.0 || y == -1.0,
            Family::PoissonLog => y >= 0.0 && y.is_finite() && libm::floor(y) == y,
        }
    }

    /// Maps an external response (`{0,1}` or `{-1,+1}` for binary families)
    /// to the internal encoding.
    pub fn encode_response(self, raw: f64) -> Option<f64> {
        let y = match self {
            Family::Logistic | Family::Probit if raw == 0.0 => -1.0,
            _ => raw,
        };
        self.is_valid_response(y).then_some(y)
    }

    /// Inverse of [`Family::encode_response`]: binary responses as `{0, 1}`.
    pub fn decode_response(self, y: f64) -> f64 {
        match self {
            Family::Logistic | Family::Probit => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Family::PoissonLog => y,
        }
    }

    /// Mean of the response on the natural scale: `P(Y = 1)` or `E[Y]`.
    pub fn mean(self, t: f64) -> f64 {
        match self {
            Family::Logistic => sigmoid(t),
            Family::Probit => normal_cdf(t),
            Family::PoissonLog => libm::exp(t),
        }
    }

    #[inline]
    pub fn value(self, y: f64, t: f64) -> f64 {
        match self {
            Family::Logistic => log1p_exp(-y * t),
            Family::Probit => -log_normal_cdf(y * t),
            Family::PoissonLog => libm::exp(t) - y * t,
        }
    }

    #[inline]
    pub fn derivatives(self, y: f64, t: f64) -> Derivatives {
        match self {
            Family::Logistic => {
                let u = y * t;
                let s_neg = sigmoid(-u);
                Derivatives { value: log1p_exp(-u), first: -y * s_neg, second: s_neg * sigmoid(u) }
            }
            Family::Probit => {
                let u = y * t;
                let (lambda, shifted) = probit_ratio(u);
                Derivatives { value: -log_normal_cdf(u), first: -y * lambda, second: lambda * shifted }
            }
            Family::PoissonLog => {
                let mu = libm::exp(t);
                Derivatives { value: mu - y * t, first: mu - y, second: mu }
            }
        }
    }

    /// Draws one response (internal encoding) at linear predictor `t`.
    pub fn sample<R: Rng + ?Sized>(self, t: f64, rng: &mut R) -> Result<f64> {
        match self {
            Family::Logistic | Family::Probit => {
                let u: f64 = rng.random();
                Ok(if u < self.mean(t) { 1.0 } else { -1.0 })
            }
            Family::PoissonLog => {
                let mu = libm::exp(t);
                if !(mu <= POISSON_MEAN_LIMIT) {
                    return Err(Error::PoissonOverflow { index: 0, eta: t });
                }
                if mu == 0.0 {
                    return Ok(0.0);
                }
                let dist =
                    Poisson::new(mu).map_err(|e| Error::InvalidArgument(alloc::format!("Poisson mean {mu}: {e}")))?;
                Ok(dist.sample(rng))
            }
        }
    }
}

/// For the probit family at `u = y t`: `λ(u) = φ(u)/Φ(u)` and `u + λ(u)`, so
/// that `f'' = λ (u + λ)`. Below `u = -8` both come from the Mills-ratio
/// continued fraction to avoid cancellation in `u + λ`.
#[inline]
fn probit_ratio(u: f64) -> (f64, f64) {
    if u < -8.0 {
        let x = -u;
        let c = mills_tail(x);
        (x + c, c)
    } else {
        let lambda = normal_pdf(u) / normal_cdf(u);
        (lambda, u + lambda)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "logit" | "binomial" => Ok(Family::Logistic),
            "probit" => Ok(Family::Probit),
            "poisson" | "poisson-log" | "poisson_log" => Ok(Family::PoissonLog),
            other => Err(Error::InvalidArgument(alloc::format!("unknown family '{other}'"))),
        }
    }
}
