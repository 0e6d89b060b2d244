//! Seeded experiment generation and the two Monte Carlo studies.
//!
//! Sampling is inverse-transform: each unit consumes exactly two uniforms
//! (one contamination coin, one value), so a replicate's data depend only on
//! its own RNG stream. Streams are derived per replicate from the study seed
//! via the counter-based generator's stream id, which makes results
//! independent of how replicates are scheduled across worker threads.
//!
//! Contaminated units are drawn from a shifted exponential near the end of
//! the test (`shift + Exp(outlier_mttf)`) and are subject to the same Type-I
//! censoring as every other unit: a late outlier that outlives `tau2` is
//! simply censored, since the observable law has no other place for it.

use crate::asymptotics;
use crate::characteristics;
use crate::estimator::{fit_path, FitConfig};
use crate::loss::{DataError, ExperimentData};
use crate::model::{ModelError, RegressionParams, SsaltModel, StressProfile};
use crate::normal::{self, NormalError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error("invalid study configuration:\n{}", violations.join("\n"))]
    InvalidConfig { violations: Vec<String> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Normal(#[from] NormalError),
}

/// Outlier mechanism: with probability `proportion` a unit's lifetime is
/// drawn from `shift + Exp(outlier_mttf)` instead of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub proportion: f64,
    pub shift: f64,
    pub outlier_mttf: f64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        Self {
            proportion: 0.0,
            shift: 31.0,
            outlier_mttf: 0.5,
        }
    }

    pub fn with_proportion(proportion: f64) -> Self {
        Self {
            proportion,
            ..Self::none()
        }
    }
}

/// Contamination intensity for one study cell, either as a proportion or as
/// an absolute count of outliers out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationLevel {
    Proportion(f64),
    Count(usize),
}

impl ContaminationLevel {
    pub fn as_proportion(&self, sample_size: usize) -> f64 {
        match *self {
            ContaminationLevel::Proportion(p) => p,
            ContaminationLevel::Count(c) => c as f64 / sample_size.max(1) as f64,
        }
    }
}

/// Configuration shared by both studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub true_params: RegressionParams,
    pub profile: StressProfile,
    pub sample_size: usize,
    pub replicates: usize,
    pub betas: Vec<f64>,
    pub contamination_levels: Vec<ContaminationLevel>,
    pub outlier_shift: f64,
    pub outlier_mttf: f64,
    pub seed: u64,
    pub confidence: f64,
    /// Mission time for the reliability column of the MSE study.
    pub mission_time: f64,
    /// Survival level for the quantile column of the MSE study.
    pub quantile_level: f64,
}

impl StudyConfig {
    /// The simulated reference design: true params (3.5, -1), stresses 1 -> 2
    /// at tau1 = 10, termination 33, outliers at 31 with mean 0.5.
    pub fn simulated_defaults() -> Self {
        Self {
            true_params: RegressionParams::new(3.5, -1.0),
            profile: StressProfile::new(1.0, 2.0, 10.0, 33.0, 0.5).expect("valid profile"),
            sample_size: 520,
            replicates: 500,
            betas: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            contamination_levels: vec![
                ContaminationLevel::Proportion(0.0),
                ContaminationLevel::Proportion(0.02),
                ContaminationLevel::Proportion(0.04),
                ContaminationLevel::Proportion(0.06),
            ],
            outlier_shift: 31.0,
            outlier_mttf: 0.5,
            seed: 0x5541_4c54,
            confidence: 0.95,
            mission_time: 14.0,
            quantile_level: 0.5,
        }
    }

    /// Collects every violated constraint rather than stopping at the first.
    pub fn validate(&self) -> Result<(), StudyError> {
        let mut violations = Vec::new();
        if let Err(e) = self.profile.validate() {
            violations.push(e.to_string());
        }
        if !self.true_params.is_admissible() {
            violations.push(format!(
                "true parameters (a0 = {}, a1 = {}) must have finite a0 and a1 < 0",
                self.true_params.a0, self.true_params.a1
            ));
        }
        if self.sample_size < 2 {
            violations.push(format!("sample_size = {} must be at least 2", self.sample_size));
        }
        if self.replicates == 0 {
            violations.push("replicates must be at least 1".into());
        }
        if self.betas.is_empty() {
            violations.push("betas must be non-empty".into());
        }
        for &b in &self.betas {
            if !(b.is_finite() && b >= 0.0) {
                violations.push(format!("beta = {b} must be finite and non-negative"));
            }
        }
        if self.contamination_levels.is_empty() {
            violations.push("contamination_levels must be non-empty".into());
        }
        for level in &self.contamination_levels {
            let nu = level.as_proportion(self.sample_size);
            if !(0.0..1.0).contains(&nu) {
                violations.push(format!("contamination level {nu} must lie in [0, 1)"));
            }
        }
        if !(self.outlier_shift.is_finite() && self.outlier_shift < self.profile.tau2) {
            violations.push(format!(
                "outlier shift {} must lie below the termination time {} for outliers to be observable",
                self.outlier_shift, self.profile.tau2
            ));
        }
        if !(self.outlier_mttf.is_finite() && self.outlier_mttf > 0.0) {
            violations.push(format!("outlier mttf {} must be positive", self.outlier_mttf));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            violations.push(format!("confidence {} must lie in (0, 1)", self.confidence));
        }
        if !(self.mission_time.is_finite() && self.mission_time >= 0.0) {
            violations.push(format!("mission_time {} must be non-negative", self.mission_time));
        }
        if !(self.quantile_level > 0.0 && self.quantile_level < 1.0) {
            violations.push(format!(
                "quantile_level {} must lie in (0, 1)",
                self.quantile_level
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(StudyError::InvalidConfig { violations })
        }
    }

    fn contamination_at(&self, level: ContaminationLevel) -> ContaminationSpec {
        ContaminationSpec {
            proportion: level.as_proportion(self.sample_size),
            shift: self.outlier_shift,
            outlier_mttf: self.outlier_mttf,
        }
    }
}

/// Draws one experiment of `n` units. Deterministic given the RNG state.
pub fn sample_experiment<R: Rng>(
    rng: &mut R,
    n: usize,
    true_params: RegressionParams,
    profile: &StressProfile,
    contamination: &ContaminationSpec,
) -> Result<ExperimentData, StudyError> {
    let model = SsaltModel::new(true_params, *profile)?;
    let mut stage1 = Vec::new();
    let mut stage2 = Vec::new();
    for _ in 0..n {
        let coin: f64 = rng.gen();
        let u: f64 = rng.gen();
        let t = if coin < contamination.proportion {
            contamination.shift - contamination.outlier_mttf * (1.0 - u).ln()
        } else {
            model.inverse_cdf(u)?
        };
        if t < profile.tau1 {
            stage1.push(t);
        } else if t < profile.tau2 {
            stage2.push(t);
        }
        // t >= tau2 is censored and contributes only through the unit count.
    }
    Ok(ExperimentData::new(stage1, stage2, n)?)
}

/// Mean squared errors of the parameter and characteristic estimates for one
/// study cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub contamination: f64,
    pub beta: f64,
    pub mse_a0: f64,
    pub mse_a1: f64,
    pub mse_mttf: f64,
    pub mse_quantile: f64,
    pub mse_reliability: f64,
    pub replicates_used: usize,
    pub replicates_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseStudyResult {
    pub rows: Vec<MseRow>,
}

impl MseStudyResult {
    pub fn row(&self, contamination: f64, beta: f64) -> Option<&MseRow> {
        self.rows
            .iter()
            .find(|r| r.contamination == contamination && r.beta == beta)
    }
}

/// Coverage, width and mean estimate of the per-parameter direct intervals
/// for one study cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub contamination: f64,
    pub beta: f64,
    pub coverage_a0: f64,
    pub width_a0: f64,
    pub mean_a0: f64,
    pub coverage_a1: f64,
    pub width_a1: f64,
    pub mean_a1: f64,
    pub replicates_used: usize,
    pub replicates_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStudyResult {
    pub rows: Vec<CoverageRow>,
}

impl CoverageStudyResult {
    pub fn row(&self, contamination: f64, beta: f64) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.contamination == contamination && r.beta == beta)
    }
}

/// Per-replicate RNG: one stream per (level, replicate) cell of the study.
fn replicate_rng(seed: u64, level_idx: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level_idx as u64) << 32) | replicate as u64);
    rng
}

/// Draws the exact experiment a study uses for one (level, replicate) cell,
/// so a dataset written to disk can be traced back to a study cell.
pub fn sample_study_replicate(
    config: &StudyConfig,
    level_index: usize,
    replicate: usize,
) -> Result<ExperimentData, StudyError> {
    config.validate()?;
    let Some(&level) = config.contamination_levels.get(level_index) else {
        return Err(StudyError::InvalidConfig {
            violations: vec![format!(
                "contamination level index {level_index} out of range ({} configured)",
                config.contamination_levels.len()
            )],
        });
    };
    let contamination = config.contamination_at(level);
    let mut rng = replicate_rng(config.seed, level_index, replicate);
    sample_experiment(
        &mut rng,
        config.sample_size,
        config.true_params,
        &config.profile,
        &contamination,
    )
}

/// One replicate's fitted parameters along the beta path, or `None` per entry
/// when that fit failed or did not converge.
fn fit_replicate(
    config: &StudyConfig,
    level_idx: usize,
    replicate: usize,
) -> Result<Vec<Option<RegressionParams>>, StudyError> {
    let level = config.contamination_levels[level_idx];
    let contamination = config.contamination_at(level);
    let mut rng = replicate_rng(config.seed, level_idx, replicate);
    let data = sample_experiment(
        &mut rng,
        config.sample_size,
        config.true_params,
        &config.profile,
        &contamination,
    )?;
    let fit_config = FitConfig::default();
    let fits = fit_path(&data, &config.profile, &config.betas, &fit_config);
    Ok(fits
        .into_iter()
        .map(|r| match r {
            Ok(f) if f.converged => Some(f.params),
            _ => None,
        })
        .collect())
}

/// Empirical mean squared error of the estimates against the true values,
/// per contamination level and tuning parameter.
pub fn mse_study(config: &StudyConfig) -> Result<MseStudyResult, StudyError> {
    config.validate()?;
    let x0 = config.profile.x0;
    let true_mttf = characteristics::mttf(config.true_params, x0);
    let true_quantile =
        characteristics::quantile(config.quantile_level, config.true_params, x0)
            .expect("validated level");
    let true_reliability =
        characteristics::reliability(config.mission_time, config.true_params, x0);

    let mut rows = Vec::new();
    for (li, level) in config.contamination_levels.iter().enumerate() {
        let replicate_fits: Vec<Result<Vec<Option<RegressionParams>>, StudyError>> = (0
            ..config.replicates)
            .into_par_iter()
            .map(|r| fit_replicate(config, li, r))
            .collect();

        let nu = level.as_proportion(config.sample_size);
        for (bi, &beta) in config.betas.iter().enumerate() {
            let mut used = 0usize;
            let mut failed = 0usize;
            let mut sq = [0.0f64; 5];
            for rep in &replicate_fits {
                let params = match rep {
                    Ok(path) => path[bi],
                    Err(_) => None,
                };
                let Some(p) = params else {
                    failed += 1;
                    continue;
                };
                used += 1;
                sq[0] += (p.a0 - config.true_params.a0).powi(2);
                sq[1] += (p.a1 - config.true_params.a1).powi(2);
                sq[2] += (characteristics::mttf(p, x0) - true_mttf).powi(2);
                let q = characteristics::quantile(config.quantile_level, p, x0)
                    .expect("validated level");
                sq[3] += (q - true_quantile).powi(2);
                sq[4] +=
                    (characteristics::reliability(config.mission_time, p, x0) - true_reliability)
                        .powi(2);
            }
            let denom = used.max(1) as f64;
            rows.push(MseRow {
                contamination: nu,
                beta,
                mse_a0: sq[0] / denom,
                mse_a1: sq[1] / denom,
                mse_mttf: sq[2] / denom,
                mse_quantile: sq[3] / denom,
                mse_reliability: sq[4] / denom,
                replicates_used: used,
                replicates_failed: failed,
            });
        }
    }
    Ok(MseStudyResult { rows })
}

/// Empirical coverage of the direct parameter intervals, with the sandwich
/// evaluated at the fitted parameters of each replicate.
pub fn coverage_study(config: &StudyConfig) -> Result<CoverageStudyResult, StudyError> {
    config.validate()?;
    let z = normal::two_sided_z(config.confidence)?;
    let n = config.sample_size;

    let mut rows = Vec::new();
    for (li, level) in config.contamination_levels.iter().enumerate() {
        let replicate_fits: Vec<Result<Vec<Option<RegressionParams>>, StudyError>> = (0
            ..config.replicates)
            .into_par_iter()
            .map(|r| fit_replicate(config, li, r))
            .collect();

        let nu = level.as_proportion(config.sample_size);
        for (bi, &beta) in config.betas.iter().enumerate() {
            let mut used = 0usize;
            let mut failed = 0usize;
            let mut hits = [0usize; 2];
            let mut widths = [0.0f64; 2];
            let mut means = [0.0f64; 2];
            for rep in &replicate_fits {
                let params = match rep {
                    Ok(path) => path[bi],
                    Err(_) => None,
                };
                let cov = params.and_then(|p| {
                    asymptotics::sandwich_covariance(p, &config.profile, beta, n).ok()
                });
                let (Some(p), Some(cov)) = (params, cov) else {
                    failed += 1;
                    continue;
                };
                used += 1;
                let half = [
                    z * cov.n_scaled_variances[0].sqrt(),
                    z * cov.n_scaled_variances[1].sqrt(),
                ];
                if (p.a0 - config.true_params.a0).abs() <= half[0] {
                    hits[0] += 1;
                }
                if (p.a1 - config.true_params.a1).abs() <= half[1] {
                    hits[1] += 1;
                }
                widths[0] += 2.0 * half[0];
                widths[1] += 2.0 * half[1];
                means[0] += p.a0;
                means[1] += p.a1;
            }
            let denom = used.max(1) as f64;
            rows.push(CoverageRow {
                contamination: nu,
                beta,
                coverage_a0: hits[0] as f64 / denom,
                width_a0: widths[0] / denom,
                mean_a0: means[0] / denom,
                coverage_a1: hits[1] as f64 / denom,
                width_a1: widths[1] / denom,
                mean_a1: means[1] / denom,
                replicates_used: used,
                replicates_failed: failed,
            });
        }
    }
    Ok(CoverageStudyResult { rows })
}
