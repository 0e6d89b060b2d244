//! The piecewise exponential cumulative-exposure lifetime model.
//!
//! Under the cumulative-exposure assumption, wear accrued during stage 1
//! carries into stage 2 as a time shift `h` chosen so the c.d.f. is continuous
//! at the stress-change time `tau1`. With exponential stage distributions of
//! scales `lambda1`, `lambda2`:
//!
//! ```text
//! F(t) = 1 - exp(-t/lambda1)        0 <= t < tau1
//!        1 - exp(-(t+h)/lambda2)    tau1 <= t < tau2
//! h    = (lambda2/lambda1) tau1 - tau1
//! ```
//!
//! The observable distribution is mixed: the density above on `[0, tau2)`
//! plus a point mass `exp(-(tau2+h)/lambda2)` of censored survivors at `tau2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid stress profile: {0}")]
    InvalidProfile(String),
    #[error("stage-{stage} rate exp({log_rate}) is not a positive finite number")]
    NonFiniteRate { stage: u8, log_rate: f64 },
    #[error("time {t} is outside the density support [0, {tau2})")]
    TimeOutOfSupport { t: f64, tau2: f64 },
    #[error("probability {u} is outside [0, 1)")]
    ProbabilityOutOfRange { u: f64 },
}

/// Design of a simple (two-level) step-stress experiment.
///
/// Stress is `x1` on `[0, tau1)` and `x2` on `[tau1, tau2)`; the experiment
/// terminates at `tau2`. `x0` is the normal operating stress that estimates
/// are extrapolated to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressProfile {
    pub x1: f64,
    pub x2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub x0: f64,
}

impl StressProfile {
    /// Validates `0 < tau1 < tau2`, `x0 < x1 < x2` and finiteness.
    pub fn new(x1: f64, x2: f64, tau1: f64, tau2: f64, x0: f64) -> Result<Self, ModelError> {
        let profile = Self { x1, x2, tau1, tau2, x0 };
        profile.validate()?;
        Ok(profile)
    }

    // Negated comparisons are deliberate: they also trip on NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidProfile(msg));
        for (name, v) in [
            ("x1", self.x1),
            ("x2", self.x2),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("x0", self.x0),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} = {v} is not finite"));
            }
        }
        if !(self.tau1 > 0.0) {
            return bad(format!("tau1 = {} must be positive", self.tau1));
        }
        if !(self.tau2 > self.tau1) {
            return bad(format!(
                "tau2 = {} must exceed tau1 = {}",
                self.tau2, self.tau1
            ));
        }
        if !(self.x1 < self.x2) {
            return bad(format!(
                "stress must strictly increase: x1 = {}, x2 = {}",
                self.x1, self.x2
            ));
        }
        if !(self.x0 < self.x1) {
            return bad(format!(
                "normal-use stress x0 = {} must lie below x1 = {}",
                self.x0, self.x1
            ));
        }
        Ok(())
    }
}

/// Regression vector of the log-linear stress link `lambda = exp(a0 + a1 x)`.
///
/// `a1 < 0` on the admissible region: higher stress shortens lifetimes. The
/// optimizer enforces this by rejection, so the struct itself stays plain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub a0: f64,
    pub a1: f64,
}

impl RegressionParams {
    pub fn new(a0: f64, a1: f64) -> Self {
        Self { a0, a1 }
    }

    /// Inside the admissible region `R x (-inf, 0)`.
    pub fn is_admissible(&self) -> bool {
        self.a0.is_finite() && self.a1.is_finite() && self.a1 < 0.0
    }
}

/// Stage scales and the cumulative-exposure shift, derived from a regression
/// vector and a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(lambda2/lambda1) tau1 - tau1`; negative whenever `lambda2 < lambda1`.
    pub shift: f64,
}

impl RateParams {
    /// Evaluates the stress link `lambda_i = exp(a0 + a1 x_i)` and the shift.
    pub fn from_regression(
        params: RegressionParams,
        profile: &StressProfile,
    ) -> Result<Self, ModelError> {
        profile.validate()?;
        let log1 = params.a0 + params.a1 * profile.x1;
        let log2 = params.a0 + params.a1 * profile.x2;
        let lambda1 = log1.exp();
        let lambda2 = log2.exp();
        if !lambda1.is_finite() || lambda1 <= 0.0 {
            return Err(ModelError::NonFiniteRate {
                stage: 1,
                log_rate: log1,
            });
        }
        if !lambda2.is_finite() || lambda2 <= 0.0 {
            return Err(ModelError::NonFiniteRate {
                stage: 2,
                log_rate: log2,
            });
        }
        let shift = (lambda2 / lambda1) * profile.tau1 - profile.tau1;
        if !shift.is_finite() {
            return Err(ModelError::NonFiniteRate {
                stage: 2,
                log_rate: log2 - log1,
            });
        }
        Ok(Self {
            lambda1,
            lambda2,
            shift,
        })
    }
}

/// A fully specified lifetime model: profile plus stage rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaltModel {
    pub profile: StressProfile,
    pub rates: RateParams,
}

impl SsaltModel {
    pub fn new(params: RegressionParams, profile: StressProfile) -> Result<Self, ModelError> {
        let rates = RateParams::from_regression(params, &profile)?;
        Ok(Self { profile, rates })
    }

    pub fn from_parts(rates: RateParams, profile: StressProfile) -> Self {
        Self { profile, rates }
    }

    /// Observable (Type-I censored) c.d.f.: jumps to 1 at `tau2`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t >= self.profile.tau2 {
            1.0
        } else {
            self.cdf_uncensored(t)
        }
    }

    /// Underlying lifetime c.d.f.: extends the stage-2 branch past `tau2`.
    pub fn cdf_uncensored(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t < self.profile.tau1 {
            -(-t / self.rates.lambda1).exp_m1()
        } else {
            -(-(t + self.rates.shift) / self.rates.lambda2).exp_m1()
        }
    }

    /// Continuous component of the mixed distribution on `[0, tau2)`.
    ///
    /// Not a proper density: it integrates to `1 - survival_at_end()`.
    pub fn pdf(&self, t: f64) -> Result<f64, ModelError> {
        if t < 0.0 || t >= self.profile.tau2 {
            return Err(ModelError::TimeOutOfSupport {
                t,
                tau2: self.profile.tau2,
            });
        }
        Ok(if t < self.profile.tau1 {
            (-t / self.rates.lambda1).exp() / self.rates.lambda1
        } else {
            (-(t + self.rates.shift) / self.rates.lambda2).exp() / self.rates.lambda2
        })
    }

    /// Probability mass of surviving the whole experiment,
    /// `exp(-(tau2 + h)/lambda2)`.
    pub fn survival_at_end(&self) -> f64 {
        (-(self.profile.tau2 + self.rates.shift) / self.rates.lambda2).exp()
    }

    /// Piecewise density without the support check, extending branch 2 to the
    /// closed interval end. Quadrature oracles need the `t = tau2` endpoint.
    pub(crate) fn density_unclamped(&self, t: f64) -> f64 {
        if t < self.profile.tau1 {
            (-t / self.rates.lambda1).exp() / self.rates.lambda1
        } else {
            (-(t + self.rates.shift) / self.rates.lambda2).exp() / self.rates.lambda2
        }
    }

    /// Inverse of the uncensored c.d.f. The result may exceed `tau2`; callers
    /// sampling observations apply censoring themselves.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64, ModelError> {
        if !(0.0..1.0).contains(&u) {
            return Err(ModelError::ProbabilityOutOfRange { u });
        }
        let f_tau1 = self.cdf_uncensored(self.profile.tau1);
        Ok(if u < f_tau1 {
            -self.rates.lambda1 * (1.0 - u).ln()
        } else {
            -self.rates.lambda2 * (1.0 - u).ln() - self.rates.shift
        })
    }
}
