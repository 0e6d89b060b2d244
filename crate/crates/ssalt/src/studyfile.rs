//! TOML configuration files for the Monte Carlo study commands.
//!
//! ```toml
//! [model]
//! a0 = 3.5
//! a1 = -1.0
//!
//! [design]
//! x1 = 1.0
//! x2 = 2.0
//! tau1 = 10.0
//! tau2 = 33.0
//! x0 = 0.5
//!
//! [study]
//! sample_size = 520
//! replicates = 500
//! betas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
//! contamination_proportions = [0.0, 0.02, 0.06]
//! # contamination_counts = [0, 60, 160]   # alternative to proportions
//! seed = 20240101
//! confidence = 0.95       # optional
//! mission_time = 14.0     # optional
//! quantile_level = 0.5    # optional
//!
//! [outliers]              # optional
//! shift = 31.0
//! mttf = 0.5
//! ```
//!
//! `contamination_proportions` and `contamination_counts` may be combined;
//! counts are normalized by `sample_size` when the study runs. Unknown keys
//! are rejected so typos surface instead of silently using defaults.

use crate::model::{RegressionParams, StressProfile};
use crate::simulation::{ContaminationLevel, StudyConfig, StudyError};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StudyFileError {
    #[error("config syntax error: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] StudyError),
    #[error("config must list contamination_proportions and/or contamination_counts")]
    NoContamination,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyFileDoc {
    model: ModelSection,
    design: DesignSection,
    study: StudySection,
    #[serde(default)]
    outliers: OutlierSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    a0: f64,
    a1: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignSection {
    x1: f64,
    x2: f64,
    tau1: f64,
    tau2: f64,
    x0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudySection {
    sample_size: usize,
    replicates: usize,
    betas: Vec<f64>,
    #[serde(default)]
    contamination_proportions: Vec<f64>,
    #[serde(default)]
    contamination_counts: Vec<usize>,
    seed: u64,
    #[serde(default = "default_confidence")]
    confidence: f64,
    #[serde(default = "default_mission_time")]
    mission_time: f64,
    #[serde(default = "default_quantile_level")]
    quantile_level: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutlierSection {
    #[serde(default = "default_shift")]
    shift: f64,
    #[serde(default = "default_outlier_mttf")]
    mttf: f64,
}

impl Default for OutlierSection {
    fn default() -> Self {
        Self {
            shift: default_shift(),
            mttf: default_outlier_mttf(),
        }
    }
}

fn default_confidence() -> f64 {
    0.95
}
fn default_mission_time() -> f64 {
    14.0
}
fn default_quantile_level() -> f64 {
    0.5
}
fn default_shift() -> f64 {
    31.0
}
fn default_outlier_mttf() -> f64 {
    0.5
}

/// Parses and validates a study configuration. The returned config has
/// already passed [`StudyConfig::validate`].
pub fn parse_study_config(text: &str) -> Result<StudyConfig, StudyFileError> {
    let doc: StudyFileDoc = toml::from_str(text)?;
    let mut contamination_levels: Vec<ContaminationLevel> = Vec::new();
    contamination_levels.extend(
        doc.study
            .contamination_proportions
            .iter()
            .map(|&p| ContaminationLevel::Proportion(p)),
    );
    contamination_levels.extend(
        doc.study
            .contamination_counts
            .iter()
            .map(|&c| ContaminationLevel::Count(c)),
    );
    if contamination_levels.is_empty() {
        return Err(StudyFileError::NoContamination);
    }
    let config = StudyConfig {
        true_params: RegressionParams::new(doc.model.a0, doc.model.a1),
        profile: StressProfile {
            x1: doc.design.x1,
            x2: doc.design.x2,
            tau1: doc.design.tau1,
            tau2: doc.design.tau2,
            x0: doc.design.x0,
        },
        sample_size: doc.study.sample_size,
        replicates: doc.study.replicates,
        betas: doc.study.betas,
        contamination_levels,
        outlier_shift: doc.outliers.shift,
        outlier_mttf: doc.outliers.mttf,
        seed: doc.study.seed,
        confidence: doc.study.confidence,
        mission_time: doc.study.mission_time,
        quantile_level: doc.study.quantile_level,
    };
    config.validate()?;
    Ok(config)
}
