//! Lifetime characteristics at a constant stress level, with delta-method
//! standard errors and confidence intervals.
//!
//! At stress `x` the fitted scale is `lambda = exp(a0 + a1 x)`, giving
//!
//! ```text
//! reliability R(t) = exp(-t / lambda)
//! quantile   Q(p)  = -log(p) lambda     (time at which survival equals p)
//! mttf       E     = lambda
//! ```
//!
//! Each is a smooth function of `(a0, a1)`; its asymptotic variance is the
//! quadratic form of the gradient with the sandwich covariance. Direct
//! intervals `v +- z se` can leave the natural range in small samples, so a
//! transformed interval accompanies them: logit scale for reliability, log
//! scale for the positive quantities.

use crate::asymptotics::{self, AsymptoticsError};
use crate::model::{RegressionParams, StressProfile};
use crate::normal::{self, NormalError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharacteristicError {
    #[error("survival level {level} is outside (0, 1)")]
    LevelOutOfRange { level: f64 },
    #[error("mission time {t} must be finite and non-negative")]
    InvalidMissionTime { t: f64 },
    #[error("confidence {confidence} is outside (0, 1)")]
    InvalidConfidence { confidence: f64 },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("estimate {value} admits no transformed interval (logit needs (0,1), log needs a positive finite value)")]
    DegenerateTransform { value: f64 },
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Normal(#[from] NormalError),
}

/// Which lifetime characteristic is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CharacteristicKind {
    /// Survival probability at a fixed mission time.
    Reliability { mission_time: f64 },
    /// Time by which the survival probability equals `level`.
    Quantile { level: f64 },
    /// Mean time to failure, the exponential scale itself.
    Mttf,
}

/// Point estimate with delta-method uncertainty at one stress level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicEstimate {
    pub kind: CharacteristicKind,
    /// Stress level the characteristic is evaluated at.
    pub stress: f64,
    pub value: f64,
    /// Delta-method standard error of the estimate (already divided by
    /// `sqrt(N)`).
    pub std_error: f64,
    pub ci_direct: (f64, f64),
    /// Direct bounds were clipped to the natural range.
    pub direct_clamped: bool,
    pub ci_transformed: (f64, f64),
    pub confidence: f64,
}

fn scale_at(params: RegressionParams, stress: f64) -> f64 {
    (params.a0 + params.a1 * stress).exp()
}

/// `R(t) = exp(-t / lambda)` at stress `x0`.
pub fn reliability(t: f64, params: RegressionParams, x0: f64) -> f64 {
    (-t / scale_at(params, x0)).exp()
}

/// Time with survival probability `level`: `-log(level) * lambda`.
pub fn quantile(
    level: f64,
    params: RegressionParams,
    x0: f64,
) -> Result<f64, CharacteristicError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CharacteristicError::LevelOutOfRange { level });
    }
    Ok(-level.ln() * mttf(params, x0))
}

/// Mean time to failure `exp(a0 + a1 x0)`.
pub fn mttf(params: RegressionParams, x0: f64) -> f64 {
    scale_at(params, x0)
}

/// Point value of a characteristic.
pub fn value(
    kind: CharacteristicKind,
    params: RegressionParams,
    stress: f64,
) -> Result<f64, CharacteristicError> {
    match kind {
        CharacteristicKind::Reliability { mission_time } => {
            if !(mission_time.is_finite() && mission_time >= 0.0) {
                return Err(CharacteristicError::InvalidMissionTime { t: mission_time });
            }
            Ok(reliability(mission_time, params, stress))
        }
        CharacteristicKind::Quantile { level } => quantile(level, params, stress),
        CharacteristicKind::Mttf => Ok(mttf(params, stress)),
    }
}

/// Gradient of the characteristic with respect to `(a0, a1)`.
///
/// All three characteristics are `g(lambda)` with `d lambda / d a0 = lambda`
/// and `d lambda / d a1 = lambda x`, so the gradients share the pattern
/// `(d, d x)`:
/// reliability `d = R t / lambda`, quantile `d = Q`, MTTF `d = E`.
pub fn gradient(
    kind: CharacteristicKind,
    params: RegressionParams,
    stress: f64,
) -> Result<[f64; 2], CharacteristicError> {
    let d = match kind {
        CharacteristicKind::Reliability { mission_time } => {
            if !(mission_time.is_finite() && mission_time >= 0.0) {
                return Err(CharacteristicError::InvalidMissionTime { t: mission_time });
            }
            let lambda = scale_at(params, stress);
            reliability(mission_time, params, stress) * mission_time / lambda
        }
        CharacteristicKind::Quantile { level } => quantile(level, params, stress)?,
        CharacteristicKind::Mttf => mttf(params, stress),
    };
    Ok([d, d * stress])
}

/// Asymptotic variance `grad^T (J^-1 K J^-1) grad` of the
/// `sqrt(N)`-normalized characteristic estimate.
pub fn delta_variance(
    kind: CharacteristicKind,
    params: RegressionParams,
    profile: &StressProfile,
    stress: f64,
    beta: f64,
) -> Result<f64, CharacteristicError> {
    let grad = gradient(kind, params, stress)?;
    let sandwich = asymptotics::sandwich_matrix(params, profile, beta)?;
    Ok(sandwich.quadratic_form(grad))
}

/// Builds the point estimate with direct and transformed confidence
/// intervals.
pub fn confidence_interval(
    kind: CharacteristicKind,
    params: RegressionParams,
    profile: &StressProfile,
    stress: f64,
    beta: f64,
    n: usize,
    confidence: f64,
) -> Result<CharacteristicEstimate, CharacteristicError> {
    if n == 0 {
        return Err(CharacteristicError::EmptySample);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CharacteristicError::InvalidConfidence { confidence });
    }
    let v = value(kind, params, stress)?;
    // The quadratic form is nonnegative up to rounding; clip the dust.
    let variance = delta_variance(kind, params, profile, stress, beta)?.max(0.0);
    let se = (variance / n as f64).sqrt();
    let z = normal::two_sided_z(confidence)?;
    let half = z * se;

    let (lo_raw, hi_raw) = (v - half, v + half);
    let (natural_lo, natural_hi) = match kind {
        CharacteristicKind::Reliability { .. } => (0.0, 1.0),
        _ => (0.0, f64::INFINITY),
    };
    let lo = lo_raw.max(natural_lo);
    let hi = hi_raw.min(natural_hi);
    let direct_clamped = lo != lo_raw || hi != hi_raw;

    let ci_transformed = match kind {
        CharacteristicKind::Reliability { .. } => {
            if !(v > 0.0 && v < 1.0) {
                return Err(CharacteristicError::DegenerateTransform { value: v });
            }
            // Invert the logit-scale interval: the delta-method standard
            // error of logit(R) is se / (R (1 - R)).
            let s = (half / (v * (1.0 - v))).exp();
            (v / (v + (1.0 - v) * s), v / (v + (1.0 - v) / s))
        }
        _ => {
            if !(v.is_finite() && v > 0.0) {
                return Err(CharacteristicError::DegenerateTransform { value: v });
            }
            // Log-scale interval for positive quantities.
            (v * (-half / v).exp(), v * (half / v).exp())
        }
    };

    Ok(CharacteristicEstimate {
        kind,
        stress,
        value: v,
        std_error: se,
        ci_direct: (lo, hi),
        direct_clamped,
        ci_transformed,
        confidence,
    })
}
