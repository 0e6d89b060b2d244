//! Closed-form sandwich asymptotics of the minimum DPD estimator.
//!
//! Every entry of the `J` and `xi` moments decomposes over the three pieces of
//! the observable mixed distribution:
//!
//! ```text
//! J(u,v)  = int_0^tau1 u v f1^{b+1} + int_tau1^tau2 u v f2^{b+1} + Du Dv S^{b+1}
//! xi(u)   = int_0^tau1 u   f1^{b+1} + int_tau1^tau2 u   f2^{b+1} + Du    S^{b+1}
//! ```
//!
//! where `u(t), v(t)` are the scores `d log f / d a_i` (linear in `t` on each
//! segment), `Du` the score of the log survivor mass, and `S` the survivor
//! mass. The integrands are `(polynomial) * exp(-ct)`, so each term has an
//! exact antiderivative; the closed forms below evaluate those directly.
//!
//! The asymptotic covariance of `sqrt(N) (a_hat - a)` is the sandwich
//! `J^-1 K J^-1` with `K = J_{2 beta} - xi xi^T`; at `beta = 0`, `xi = 0` and
//! `K = J` is the Fisher information, collapsing the sandwich to `J^-1`.
//!
//! [`quadrature_j`] and [`quadrature_xi`] recompute every term by adaptive
//! quadrature with finite-difference scores; they are the slow, independent
//! route used by tests to gate the closed forms.

use crate::model::{ModelError, RateParams, RegressionParams, SsaltModel, StressProfile};
use crate::quad::{self, QuadError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("beta = {beta} must be finite and non-negative")]
    InvalidBeta { beta: f64 },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("J matrix is numerically singular (det = {det:e}, threshold = {threshold:e})")]
    SingularJ { det: f64, threshold: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Symmetric 2x2 matrix in `(a0, a1)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub m00: f64,
    pub m01: f64,
    pub m10: f64,
    pub m11: f64,
}

impl Matrix2 {
    pub fn det(&self) -> f64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn max_abs(&self) -> f64 {
        self.m00
            .abs()
            .max(self.m01.abs())
            .max(self.m10.abs())
            .max(self.m11.abs())
    }

    /// Cofactor inverse; fails when the determinant is negligible relative to
    /// the matrix scale.
    pub fn inverse(&self) -> Result<Matrix2, AsymptoticsError> {
        let det = self.det();
        let threshold = 1e-14 * self.max_abs().powi(2);
        if det.abs() <= threshold || !det.is_finite() {
            return Err(AsymptoticsError::SingularJ { det, threshold });
        }
        Ok(Matrix2 {
            m00: self.m11 / det,
            m01: -self.m01 / det,
            m10: -self.m10 / det,
            m11: self.m00 / det,
        })
    }

    pub fn mul(&self, other: &Matrix2) -> Matrix2 {
        Matrix2 {
            m00: self.m00 * other.m00 + self.m01 * other.m10,
            m01: self.m00 * other.m01 + self.m01 * other.m11,
            m10: self.m10 * other.m00 + self.m11 * other.m10,
            m11: self.m10 * other.m01 + self.m11 * other.m11,
        }
    }

    /// Quadratic form `g^T M g`.
    pub fn quadratic_form(&self, g: [f64; 2]) -> f64 {
        g[0] * g[0] * self.m00 + g[0] * g[1] * (self.m01 + self.m10) + g[1] * g[1] * self.m11
    }
}

/// `J`, `K` and the sandwich `J^-1 K J^-1` at one tuning parameter, plus the
/// per-parameter variances scaled by the sample size.
///
/// The sandwich is the covariance of the `sqrt(N)`-normalized estimator;
/// `n_scaled_variances` divides its diagonal by `N` so the entries are the
/// approximate variances of the estimates themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCovariance {
    pub j: Matrix2,
    pub k: Matrix2,
    pub sandwich: Matrix2,
    pub n_scaled_variances: [f64; 2],
    pub beta: f64,
    pub sample_size: usize,
}

/// Score of `log f` with respect to one regression coordinate: linear in `t`
/// on each density segment, constant on the survivor mass.
struct Score {
    /// (intercept, slope) on `[0, tau1)`.
    stage1: (f64, f64),
    /// (intercept, slope) on `[tau1, tau2)`.
    stage2: (f64, f64),
    /// Derivative of the log survivor mass.
    boundary: f64,
}

fn score_a0(rates: &RateParams, profile: &StressProfile) -> Score {
    let l1 = rates.lambda1;
    let l2 = rates.lambda2;
    let ell = -1.0 - profile.tau1 / l2 + profile.tau1 / l1;
    Score {
        stage1: (-1.0, 1.0 / l1),
        stage2: (ell, 1.0 / l2),
        boundary: (profile.tau2 + rates.shift) / l2,
    }
}

fn score_a1(rates: &RateParams, profile: &StressProfile) -> Score {
    let l1 = rates.lambda1;
    let l2 = rates.lambda2;
    let x1 = profile.x1;
    let x2 = profile.x2;
    let ell = -x2 - (profile.tau1 / l2) * x2 + (profile.tau1 / l1) * x1;
    Score {
        stage1: (-x1, x1 / l1),
        stage2: (ell, x2 / l2),
        boundary: (profile.tau2 / l2) * x2 + (profile.tau1 / l1) * x1 - (profile.tau1 / l2) * x2,
    }
}

/// Exact `int_a^b exp(-ct) dt`, `int_a^b t exp(-ct) dt`, `int_a^b t^2 exp(-ct) dt`.
fn exp_moments(a: f64, b: f64, c: f64) -> [f64; 3] {
    let ea = (-c * a).exp();
    let eb = (-c * b).exp();
    let m0 = (ea - eb) / c;
    let m1 = (ea * (c * a + 1.0) - eb * (c * b + 1.0)) / (c * c);
    let m2 = (ea * ((c * a).powi(2) + 2.0 * c * a + 2.0)
        - eb * ((c * b).powi(2) + 2.0 * c * b + 2.0))
        / (c * c * c);
    [m0, m1, m2]
}

/// `int (p + q t)(r + s t) exp(-ct) dt` over `[a, b]` from the exact moments.
fn poly_exp_integral(p: f64, q: f64, r: f64, s: f64, a: f64, b: f64, c: f64) -> f64 {
    let [m0, m1, m2] = exp_moments(a, b, c);
    p * r * m0 + (p * s + q * r) * m1 + q * s * m2
}

fn beta_valid(beta: f64) -> Result<(), AsymptoticsError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(AsymptoticsError::InvalidBeta { beta })
    }
}

/// Shared segment machinery: weighted integrals of `u * v * f^{beta+1}` or of
/// `u * f^{beta+1}` when `v` is `None`.
fn moment(
    u: &Score,
    v: Option<&Score>,
    rates: &RateParams,
    profile: &StressProfile,
    beta: f64,
) -> f64 {
    let one = (1.0, 0.0);
    let v1 = v.map_or(one, |s| s.stage1);
    let v2 = v.map_or(one, |s| s.stage2);
    let vb = v.map_or(1.0, |s| s.boundary);

    let bp1 = beta + 1.0;
    let l1 = rates.lambda1;
    let l2 = rates.lambda2;
    let h = rates.shift;

    // f1^{b+1} = l1^{-(b+1)} exp(-t (b+1)/l1) on [0, tau1).
    let seg1 = l1.powf(-bp1)
        * poly_exp_integral(
            u.stage1.0, u.stage1.1, v1.0, v1.1, 0.0, profile.tau1, bp1 / l1,
        );
    // Stage 2 integrates over the shifted clock s = t + h (s >= tau1 + h > 0),
    // keeping every exponential argument negative; splitting off a factor
    // exp(-h(b+1)/l2) instead can overflow at extreme rates. The scores shift
    // accordingly: p + q t = (p - q h) + q s.
    let seg2 = l2.powf(-bp1)
        * poly_exp_integral(
            u.stage2.0 - u.stage2.1 * h,
            u.stage2.1,
            v2.0 - v2.1 * h,
            v2.1,
            profile.tau1 + h,
            profile.tau2 + h,
            bp1 / l2,
        );
    let survivor = (-(profile.tau2 + h) / l2 * bp1).exp();
    seg1 + seg2 + u.boundary * vb * survivor
}

/// `J_beta(a0)`: second moment of the `a0` score under `f^{beta+1}`.
pub fn j_beta_a0(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let rates = RateParams::from_regression(params, profile)?;
    let s = score_a0(&rates, profile);
    Ok(moment(&s, Some(&s), &rates, profile, beta))
}

/// `J_beta(a1)`.
pub fn j_beta_a1(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let rates = RateParams::from_regression(params, profile)?;
    let s = score_a1(&rates, profile);
    Ok(moment(&s, Some(&s), &rates, profile, beta))
}

/// Off-diagonal `J_beta(a0, a1)`.
pub fn j_beta_cross(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let rates = RateParams::from_regression(params, profile)?;
    let s0 = score_a0(&rates, profile);
    let s1 = score_a1(&rates, profile);
    Ok(moment(&s0, Some(&s1), &rates, profile, beta))
}

/// `xi_beta(a0)`: first moment of the `a0` score; identically zero at
/// `beta = 0`.
pub fn xi_beta_a0(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let rates = RateParams::from_regression(params, profile)?;
    let s = score_a0(&rates, profile);
    Ok(moment(&s, None, &rates, profile, beta))
}

/// `xi_beta(a1)`.
pub fn xi_beta_a1(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let rates = RateParams::from_regression(params, profile)?;
    let s = score_a1(&rates, profile);
    Ok(moment(&s, None, &rates, profile, beta))
}

/// Joint `J_beta` matrix.
pub fn j_matrix(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<Matrix2, AsymptoticsError> {
    let j00 = j_beta_a0(params, profile, beta)?;
    let j11 = j_beta_a1(params, profile, beta)?;
    let j01 = j_beta_cross(params, profile, beta)?;
    Ok(Matrix2 {
        m00: j00,
        m01: j01,
        m10: j01,
        m11: j11,
    })
}

/// Joint `xi_beta` vector.
pub fn xi_vector(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<[f64; 2], AsymptoticsError> {
    Ok([
        xi_beta_a0(params, profile, beta)?,
        xi_beta_a1(params, profile, beta)?,
    ])
}

/// `K_beta = J_{2 beta} - xi xi^T`. Reuses the same closed forms with a
/// doubled tuning parameter.
pub fn k_matrix(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<Matrix2, AsymptoticsError> {
    let j2 = j_matrix(params, profile, 2.0 * beta)?;
    let xi = xi_vector(params, profile, beta)?;
    Ok(Matrix2 {
        m00: j2.m00 - xi[0] * xi[0],
        m01: j2.m01 - xi[0] * xi[1],
        m10: j2.m10 - xi[1] * xi[0],
        m11: j2.m11 - xi[1] * xi[1],
    })
}

/// Unscaled sandwich matrix `J^-1 K J^-1`.
pub fn sandwich_matrix(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
) -> Result<Matrix2, AsymptoticsError> {
    let j_inv = j_matrix(params, profile, beta)?.inverse()?;
    let k = k_matrix(params, profile, beta)?;
    Ok(j_inv.mul(&k).mul(&j_inv))
}

/// Assembles the full asymptotic covariance report for a sample of `n` units.
pub fn sandwich_covariance(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
    n: usize,
) -> Result<AsymptoticCovariance, AsymptoticsError> {
    if n == 0 {
        return Err(AsymptoticsError::EmptySample);
    }
    let j = j_matrix(params, profile, beta)?;
    let k = k_matrix(params, profile, beta)?;
    let j_inv = j.inverse()?;
    let sandwich = j_inv.mul(&k).mul(&j_inv);
    Ok(AsymptoticCovariance {
        j,
        k,
        sandwich,
        n_scaled_variances: [sandwich.m00 / n as f64, sandwich.m11 / n as f64],
        beta,
        sample_size: n,
    })
}

/// Which `J` entry a quadrature request refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JEntry {
    A0,
    A1,
    Cross,
}

/// Which score a `xi` quadrature request refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamAxis {
    A0,
    A1,
}

/// Finite-difference score `d log f(t) / d a_axis`, computed from the model
/// density itself so the route shares nothing with the closed forms above.
fn fd_log_density_score(
    params: RegressionParams,
    profile: &StressProfile,
    axis: ParamAxis,
    t: f64,
) -> f64 {
    const STEP: f64 = 1e-5;
    let shifted = |d: f64| -> f64 {
        let p = match axis {
            ParamAxis::A0 => RegressionParams::new(params.a0 + d, params.a1),
            ParamAxis::A1 => RegressionParams::new(params.a0, params.a1 + d),
        };
        let model = SsaltModel::new(p, *profile).expect("valid perturbed params");
        model.density_unclamped(t).ln()
    };
    (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP)
}

/// Finite-difference score of the log survivor mass.
fn fd_log_survivor_score(
    params: RegressionParams,
    profile: &StressProfile,
    axis: ParamAxis,
) -> f64 {
    const STEP: f64 = 1e-5;
    let shifted = |d: f64| -> f64 {
        let p = match axis {
            ParamAxis::A0 => RegressionParams::new(params.a0 + d, params.a1),
            ParamAxis::A1 => RegressionParams::new(params.a0, params.a1 + d),
        };
        let model = SsaltModel::new(p, *profile).expect("valid perturbed params");
        model.survival_at_end().ln()
    };
    (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP)
}

/// Adaptive-quadrature route for the `J` entries. Slow; test oracle only.
pub fn quadrature_j(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
    entry: JEntry,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let model = SsaltModel::new(params, *profile)?;
    let (u, v) = match entry {
        JEntry::A0 => (ParamAxis::A0, ParamAxis::A0),
        JEntry::A1 => (ParamAxis::A1, ParamAxis::A1),
        JEntry::Cross => (ParamAxis::A0, ParamAxis::A1),
    };
    let bp1 = beta + 1.0;
    let integrand = |t: f64| {
        let su = fd_log_density_score(params, profile, u, t);
        let sv = if u == v {
            su
        } else {
            fd_log_density_score(params, profile, v, t)
        };
        su * sv * model.density_unclamped(t).powf(bp1)
    };
    let seg1 = quad::integrate(integrand, 0.0, profile.tau1, 1e-11, 1e-300)?;
    let seg2 = quad::integrate(integrand, profile.tau1, profile.tau2, 1e-11, 1e-300)?;
    let du = fd_log_survivor_score(params, profile, u);
    let dv = if u == v {
        du
    } else {
        fd_log_survivor_score(params, profile, v)
    };
    Ok(seg1 + seg2 + du * dv * model.survival_at_end().powf(bp1))
}

/// Adaptive-quadrature route for the `xi` entries. Slow; test oracle only.
pub fn quadrature_xi(
    params: RegressionParams,
    profile: &StressProfile,
    beta: f64,
    axis: ParamAxis,
) -> Result<f64, AsymptoticsError> {
    beta_valid(beta)?;
    let model = SsaltModel::new(params, *profile)?;
    let bp1 = beta + 1.0;
    let integrand = |t: f64| {
        fd_log_density_score(params, profile, axis, t)
            * model.density_unclamped(t).powf(bp1)
    };
    let seg1 = quad::integrate(integrand, 0.0, profile.tau1, 1e-11, 1e-300)?;
    let seg2 = quad::integrate(integrand, profile.tau1, profile.tau2, 1e-11, 1e-300)?;
    let du = fd_log_survivor_score(params, profile, axis);
    Ok(seg1 + seg2 + du * model.survival_at_end().powf(bp1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{components_profile, sim_params, sim_profile};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> (RegressionParams, StressProfile) {
        let x1 = rng.gen_range(0.6..1.4);
        let x2 = x1 + rng.gen_range(0.5..1.5);
        let tau1 = rng.gen_range(5.0..15.0);
        let tau2 = tau1 + rng.gen_range(10.0..30.0);
        let profile = StressProfile::new(x1, x2, tau1, tau2, x1 - 0.5).unwrap();
        let params = RegressionParams::new(rng.gen_range(2.0..4.0), rng.gen_range(-1.4..-0.6));
        (params, profile)
    }

    #[test]
    fn xi_vanishes_at_beta_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let (params, profile) = random_point(&mut rng);
            assert!(xi_beta_a0(params, &profile, 0.0).unwrap().abs() < 1e-10);
            assert!(xi_beta_a1(params, &profile, 0.0).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn k_equals_j_at_beta_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let (params, profile) = random_point(&mut rng);
            let j = j_matrix(params, &profile, 0.0).unwrap();
            let k = k_matrix(params, &profile, 0.0).unwrap();
            for (a, b) in [(j.m00, k.m00), (j.m01, k.m01), (j.m11, k.m11)] {
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sandwich_is_inverse_fisher_at_beta_zero() {
        let cov = sandwich_covariance(sim_params(), &sim_profile(), 0.0, 100).unwrap();
        let j_inv = cov.j.inverse().unwrap();
        assert_relative_eq!(cov.sandwich.m00, j_inv.m00, max_relative = 1e-10);
        assert_relative_eq!(cov.sandwich.m11, j_inv.m11, max_relative = 1e-10);
        assert_relative_eq!(cov.sandwich.m01, j_inv.m01, max_relative = 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..3 {
            let (params, profile) = random_point(&mut rng);
            for beta in [0.0, 0.25, 0.5, 1.0] {
                let pairs = [
                    (j_beta_a0(params, &profile, beta).unwrap(),
                     quadrature_j(params, &profile, beta, JEntry::A0).unwrap()),
                    (j_beta_a1(params, &profile, beta).unwrap(),
                     quadrature_j(params, &profile, beta, JEntry::A1).unwrap()),
                    (j_beta_cross(params, &profile, beta).unwrap(),
                     quadrature_j(params, &profile, beta, JEntry::Cross).unwrap()),
                ];
                for (closed, oracle) in pairs {
                    assert_relative_eq!(closed, oracle, max_relative = 1e-8);
                }
                let xi0 = xi_beta_a0(params, &profile, beta).unwrap();
                let xi0q = quadrature_xi(params, &profile, beta, ParamAxis::A0).unwrap();
                // xi crosses zero at beta = 0; compare on a scale floor there.
                assert_relative_eq!(xi0, xi0q, max_relative = 1e-7, epsilon = 1e-9);
                let xi1 = xi_beta_a1(params, &profile, beta).unwrap();
                let xi1q = quadrature_xi(params, &profile, beta, ParamAxis::A1).unwrap();
                assert_relative_eq!(xi1, xi1q, max_relative = 1e-7, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn cross_term_obeys_cauchy_schwarz() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..25 {
            let (params, profile) = random_point(&mut rng);
            let beta = rng.gen_range(0.0..1.0);
            let j00 = j_beta_a0(params, &profile, beta).unwrap();
            let j11 = j_beta_a1(params, &profile, beta).unwrap();
            let j01 = j_beta_cross(params, &profile, beta).unwrap();
            assert!(j01 * j01 <= j00 * j11 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn stage1_terms_scale_with_stress_powers() {
        // On [0, tau1) the a1 score is x1 times the a0 score, so the stage-1
        // contributions obey J(a1) = x1^2 J(a0) and J(a0,a1) = x1 J(a0)
        // exactly, segment by segment.
        let profile = sim_profile();
        let params = sim_params();
        let rates = RateParams::from_regression(params, &profile).unwrap();
        for beta in [0.0, 0.5, 1.0] {
            let s0 = score_a0(&rates, &profile);
            let s1 = score_a1(&rates, &profile);
            let bp1 = beta + 1.0;
            let l1 = rates.lambda1;
            let j00_seg1 = l1.powf(-bp1)
                * poly_exp_integral(
                    s0.stage1.0, s0.stage1.1, s0.stage1.0, s0.stage1.1, 0.0, profile.tau1,
                    bp1 / l1,
                );
            let j11_seg1 = l1.powf(-bp1)
                * poly_exp_integral(
                    s1.stage1.0, s1.stage1.1, s1.stage1.0, s1.stage1.1, 0.0, profile.tau1,
                    bp1 / l1,
                );
            let j01_seg1 = l1.powf(-bp1)
                * poly_exp_integral(
                    s0.stage1.0, s0.stage1.1, s1.stage1.0, s1.stage1.1, 0.0, profile.tau1,
                    bp1 / l1,
                );
            assert_relative_eq!(j11_seg1, profile.x1 * profile.x1 * j00_seg1, max_relative = 1e-12);
            assert_relative_eq!(j01_seg1, profile.x1 * j00_seg1, max_relative = 1e-12);
        }
    }

    #[test]
    fn joint_matrix_diagonal_matches_marginals() {
        let j = j_matrix(sim_params(), &sim_profile(), 0.7).unwrap();
        assert_eq!(j.m00, j_beta_a0(sim_params(), &sim_profile(), 0.7).unwrap());
        assert_eq!(j.m11, j_beta_a1(sim_params(), &sim_profile(), 0.7).unwrap());
        assert_eq!(j.m01, j.m10);
    }

    #[test]
    fn j_positive_definite_on_reference_points() {
        for (params, profile) in [
            (sim_params(), sim_profile()),
            (RegressionParams::new(10.746, -0.0292), components_profile()),
        ] {
            for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let j = j_matrix(params, &profile, beta).unwrap();
                // 2x2 positive definiteness: positive trace entries + det.
                assert!(j.m00 > 0.0 && j.m11 > 0.0 && j.det() > 0.0, "beta = {beta}");
            }
        }
    }

    #[test]
    fn sandwich_symmetric_nonnegative_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..15 {
            let (params, profile) = random_point(&mut rng);
            let beta = rng.gen_range(0.0..1.0);
            let cov = sandwich_covariance(params, &profile, beta, 50).unwrap();
            assert_relative_eq!(cov.sandwich.m01, cov.sandwich.m10, max_relative = 1e-9);
            assert!(cov.sandwich.m00 >= 0.0);
            assert!(cov.sandwich.m11 >= 0.0);
            assert!(cov.n_scaled_variances[0] <= cov.sandwich.m00);
        }
    }

    #[test]
    fn moments_stay_finite_at_extreme_rates() {
        // Steep slopes push lambda2 toward zero; the stage-2 term must not
        // produce inf * 0.
        let profile = StressProfile::new(100.0, 150.0, 900.0, 1096.0, 25.0).unwrap();
        for a1 in [-0.1, -0.2, -0.5] {
            let params = RegressionParams::new(10.0, a1);
            for beta in [0.0, 0.5, 1.0] {
                let j = j_matrix(params, &profile, beta).unwrap();
                assert!(
                    j.m00.is_finite() && j.m01.is_finite() && j.m11.is_finite(),
                    "a1 = {a1}, beta = {beta}: {j:?}"
                );
                let xi = xi_vector(params, &profile, beta).unwrap();
                assert!(xi[0].is_finite() && xi[1].is_finite());
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let singular = Matrix2 {
            m00: 1.0,
            m01: 1.0,
            m10: 1.0,
            m11: 1.0,
        };
        assert!(matches!(
            singular.inverse(),
            Err(AsymptoticsError::SingularJ { .. })
        ));
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(matches!(
            sandwich_covariance(sim_params(), &sim_profile(), 0.0, 0),
            Err(AsymptoticsError::EmptySample)
        ));
    }

    #[test]
    fn beta_zero_matches_independent_fisher_transcription() {
        // Third route for beta = 0: the Fisher information assembled from
        // independently transcribed closed forms (after simplifying all
        // (beta+1) factors to 1 by hand), rather than from the generic
        // moment machinery.
        let params = sim_params();
        let profile = sim_profile();
        let rates = RateParams::from_regression(params, &profile).unwrap();
        let (l1, l2, h) = (rates.lambda1, rates.lambda2, rates.shift);
        let (tau1, tau2) = (profile.tau1, profile.tau2);
        let (x1, x2) = (profile.x1, profile.x2);

        let r1 = tau1 / l1;
        let seg1_a0 = 1.0 - (-r1).exp() * (1.0 + r1 * r1);

        let ell = -1.0 - tau1 / l2 + tau1 / l1;
        let e1 = (-tau1 / l2).exp();
        let e2 = (-tau2 / l2).exp();
        let eh = (-h / l2).exp();
        let (s1, s2) = (tau1 / l2, tau2 / l2);
        let seg2_a0 = ell * ell * eh * (e1 - e2)
            + eh * (e1 * (s1 * s1 + 2.0 * s1 + 2.0) - e2 * (s2 * s2 + 2.0 * s2 + 2.0))
            + 2.0 * ell * eh * (e1 * (s1 + 1.0) - e2 * (s2 + 1.0));

        let d0 = (tau2 + h) / l2;
        let boundary_a0 = d0 * d0 * (-(tau2 + h) / l2).exp();

        let expected_a0 = seg1_a0 + seg2_a0 + boundary_a0;
        assert_relative_eq!(
            j_beta_a0(params, &profile, 0.0).unwrap(),
            expected_a0,
            max_relative = 1e-12
        );

        let ell_star = -x2 - s1 * x2 + (tau1 / l1) * x1;
        let seg1_a1 = x1 * x1 * seg1_a0;
        let seg2_a1 = ell_star * ell_star * eh * (e1 - e2)
            + x2 * x2 * eh * (e1 * (s1 * s1 + 2.0 * s1 + 2.0) - e2 * (s2 * s2 + 2.0 * s2 + 2.0))
            + 2.0 * ell_star * x2 * eh * (e1 * (s1 + 1.0) - e2 * (s2 + 1.0));
        let d1 = s2 * x2 + (tau1 / l1) * x1 - s1 * x2;
        let boundary_a1 = d1 * d1 * (-(tau2 + h) / l2).exp();
        assert_relative_eq!(
            j_beta_a1(params, &profile, 0.0).unwrap(),
            seg1_a1 + seg2_a1 + boundary_a1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_exponential_limit_matches_hand_integrals() {
        // tau1 -> 0 and tau2 -> infinity leave one exponential of scale
        // lambda2, where the moments integrate by hand to
        //   xi = -lambda^-b b/(b+1)^2,
        //   J  =  lambda^-b (1/(b+1) - 2/(b+1)^2 + 2/(b+1)^3).
        let params = RegressionParams::new(3.5, -1.0);
        let profile = StressProfile::new(1.0, 2.0, 1e-9, 2000.0, 0.5).unwrap();
        let lambda2 = (params.a0 + params.a1 * profile.x2).exp();
        for beta in [0.25, 0.5, 1.0] {
            let bp1: f64 = beta + 1.0;
            let xi_expected = -lambda2.powf(-beta) * beta / (bp1 * bp1);
            let xi = xi_beta_a0(params, &profile, beta).unwrap();
            assert_relative_eq!(xi, xi_expected, max_relative = 1e-6);
            let j_expected =
                lambda2.powf(-beta) * (1.0 / bp1 - 2.0 / bp1.powi(2) + 2.0 / bp1.powi(3));
            let j = j_beta_a0(params, &profile, beta).unwrap();
            assert_relative_eq!(j, j_expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn stage2_term_vanishes_when_interval_collapses() {
        // tau2 close to tau1 leaves only the stage-1 integral and a large
        // survivor boundary term.
        let profile = StressProfile::new(1.0, 2.0, 10.0, 10.0 + 1e-9, 0.5).unwrap();
        let closed = j_beta_a0(sim_params(), &profile, 0.5).unwrap();
        let oracle = quadrature_j(sim_params(), &profile, 0.5, JEntry::A0).unwrap();
        assert_relative_eq!(closed, oracle, max_relative = 1e-7);
    }
}
