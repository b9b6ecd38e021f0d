//! Symmetric response functions `F` mapping the latent difference `theta - delta`
//! to a success probability.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest double strictly below one. `eval` never returns more than this.
pub const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;
/// Smallest probability `eval` returns.
pub const PROB_FLOOR: f64 = f64::MIN_POSITIVE;

/// A symmetric continuous CDF supplied by the caller.
///
/// `cdf` must be strictly increasing with `cdf(x) + cdf(-x) = 1`;
/// [`ResponseFunction::custom`] spot-checks both on a grid.
#[derive(Clone, Copy)]
pub struct CustomCdf {
    pub name: &'static str,
    pub cdf: fn(f64) -> f64,
    pub quantile: fn(f64) -> f64,
}

impl fmt::Debug for CustomCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCdf").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub enum ResponseFunction {
    /// `F(x) = 1 / (1 + exp(-x))`, the Rasch case.
    #[default]
    Logistic,
    /// Standard normal CDF.
    Normal,
    Custom(CustomCdf),
}

impl PartialEq for ResponseFunction {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

/// Serialized by name; custom functions cannot round-trip.
impl Serialize for ResponseFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ResponseFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        ResponseFunction::from_name(&name).map_err(serde::de::Error::custom)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `Phi(x)` for `x <= 0`.
fn normal_lower_tail(x: f64) -> f64 {
    if x < -1.0 {
        normal_log_lower_tail(x).exp()
    } else {
        0.5 * libm::erfc(-x / SQRT_2)
    }
}

/// `ln Phi(x)` for `x < -1`: `phi(x) * R(-x)` with the Mills ratio as the
/// continued fraction `t + 1/(t + 2/(t + 3/(t + ...)))`, evaluated from the tail.
fn normal_log_lower_tail(x: f64) -> f64 {
    let t = -x;
    let mut cf = t;
    for n in (1..=400).rev() {
        cf = t + n as f64 / cf;
    }
    -0.5 * t * t - 0.5 * (2.0 * PI).ln() - cf.ln()
}

fn normal_log_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        (-normal_lower_tail(-x)).ln_1p()
    } else if x < -1.0 {
        normal_log_lower_tail(x)
    } else {
        normal_lower_tail(x).ln()
    }
}

fn normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        normal_lower_tail(x)
    } else {
        1.0 - normal_lower_tail(-x)
    }
}

impl ResponseFunction {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "logistic" => Ok(ResponseFunction::Logistic),
            "normal" | "probit" => Ok(ResponseFunction::Normal),
            other => Err(Error::invalid(format!("unknown response function '{other}'"))),
        }
    }

    /// Wraps a user CDF after checking symmetry and strict monotonicity on
    /// a grid over [-10, 10].
    pub fn custom(custom: CustomCdf) -> Result<Self> {
        let mut prev = 0.0;
        for i in 0..=200 {
            let x = -10.0 + 0.1 * i as f64;
            let v = (custom.cdf)(x);
            if !(v > 0.0 && v < 1.0) && x.abs() < 5.0 {
                return Err(Error::invalid(format!(
                    "{}: cdf({x}) = {v} outside (0,1)",
                    custom.name
                )));
            }
            if ((custom.cdf)(x) + (custom.cdf)(-x) - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("{}: not symmetric at {x}", custom.name)));
            }
            if i > 0 && v < prev {
                return Err(Error::invalid(format!("{}: decreasing at {x}", custom.name)));
            }
            prev = v;
        }
        Ok(ResponseFunction::Custom(custom))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ResponseFunction::Logistic => "logistic",
            ResponseFunction::Normal => "normal",
            ResponseFunction::Custom(c) => c.name,
        }
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self, ResponseFunction::Logistic)
    }

    /// `F(x)`, saturated into `[PROB_FLOOR, PROB_CEIL]` so the result is a
    /// valid open-interval probability for any finite `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = match self {
            ResponseFunction::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            ResponseFunction::Normal => normal_cdf(x),
            ResponseFunction::Custom(c) => (c.cdf)(x),
        };
        v.clamp(PROB_FLOOR, PROB_CEIL)
    }

    /// `ln F(x)`, accurate in both tails for the built-in functions.
    pub fn log_eval(&self, x: f64) -> f64 {
        match self {
            ResponseFunction::Logistic => -softplus(-x),
            ResponseFunction::Normal => normal_log_cdf(x),
            ResponseFunction::Custom(c) => (c.cdf)(x).clamp(PROB_FLOOR, PROB_CEIL).ln(),
        }
    }

    /// `ln(1 - F(x)) = ln F(-x)` by symmetry.
    pub fn log_survival(&self, x: f64) -> f64 {
        self.log_eval(-x)
    }

    /// `ln(F(x) / (1 - F(x)))`. Exactly `x` for the logistic function.
    pub fn log_odds(&self, x: f64) -> f64 {
        match self {
            ResponseFunction::Logistic => x,
            _ => self.log_eval(x) - self.log_eval(-x),
        }
    }

    /// `F^{-1}(p)` for `p` in (0,1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("quantile argument {p} outside (0,1)")));
        }
        Ok(match self {
            ResponseFunction::Logistic => (p / (1.0 - p)).ln(),
            ResponseFunction::Normal => Normal::standard().inverse_cdf(p),
            ResponseFunction::Custom(c) => (c.quantile)(p),
        })
    }

    /// `ln F'(x)`. Not available for custom functions.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        match self {
            ResponseFunction::Logistic => Ok(self.log_eval(x) + self.log_eval(-x)),
            ResponseFunction::Normal => Ok(-0.5 * x * x - 0.5 * (2.0 * PI).ln()),
            ResponseFunction::Custom(c) => Err(Error::Unsupported(format!(
                "density of custom response function '{}'",
                c.name
            ))),
        }
    }

    /// `F'(x)`. Not available for custom functions.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }
}

/// `ln(exp(a) - exp(b))` for `a >= b`.
pub(crate) fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d > -LN_2 {
        a + (-d.exp_m1()).ln()
    } else {
        a + (-d.exp()).ln_1p()
    }
}

/// Numerically stable `ln(sum(exp(xs)))`.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
