//! Report bundles and their CSV/JSON renderings.
//!
//! A fit report carries the estimates per tuning parameter with sandwich
//! standard errors and direct parameter intervals; characteristic tables are
//! attached per stress level. Values are stored in the raw time unit of the
//! data; unit conversion happens only when a table is rendered.

use crate::asymptotics;
use crate::characteristics::{self, CharacteristicEstimate, CharacteristicKind};
use crate::estimator::{fit_path, FitConfig};
use crate::loss::ExperimentData;
use crate::model::{RegressionParams, StressProfile};
use crate::normal;
use crate::simulation::{CoverageStudyResult, MseStudyResult};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no tuning parameters requested")]
    NoBetas,
    #[error("fit at beta = {beta} failed: {source}")]
    Fit {
        beta: f64,
        #[source]
        source: crate::estimator::FitError,
    },
    #[error(transparent)]
    Characteristic(#[from] crate::characteristics::CharacteristicError),
    #[error(transparent)]
    Normal(#[from] crate::normal::NormalError),
}

impl ReportError {
    /// The underlying failure is a nonexistence condition (no failures in a
    /// stage) rather than a numerical one.
    pub fn is_nonexistence(&self) -> bool {
        matches!(
            self,
            ReportError::Fit {
                source: crate::estimator::FitError::MissingStageFailures { .. },
                ..
            }
        )
    }
}

/// Presentation unit for time-valued cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Raw,
    Minutes,
    Hours,
}

impl Units {
    /// Divisor applied to raw time values (raw unit assumed to be seconds
    /// when converting).
    pub fn divisor(self) -> f64 {
        match self {
            Units::Raw => 1.0,
            Units::Minutes => 60.0,
            Units::Hours => 3600.0,
        }
    }

    pub fn label(self, raw_label: &str) -> String {
        match self {
            Units::Raw => raw_label.to_string(),
            Units::Minutes => "minutes".to_string(),
            Units::Hours => "hours".to_string(),
        }
    }
}

/// One fitted tuning parameter with its sandwich uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta: f64,
    pub a0: f64,
    pub a1: f64,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Sandwich standard errors of the estimates (already divided by
    /// sqrt(N)); absent when the covariance was singular.
    pub se_a0: Option<f64>,
    pub se_a1: Option<f64>,
    pub ci_a0: Option<(f64, f64)>,
    pub ci_a1: Option<(f64, f64)>,
}

/// A characteristic table: one row per tuning parameter at one stress level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTable {
    pub kind: CharacteristicKind,
    pub stress: f64,
    pub rows: Vec<CharacteristicTableRow>,
}

/// One cell of a characteristic table. When interval construction fails (a
/// degenerate transform, a singular covariance) the point value is still
/// reported and the error message kept, without aborting the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTableRow {
    pub beta: f64,
    /// Point value; present whenever the characteristic itself is defined.
    pub value: Option<f64>,
    /// Interval estimate; absent when interval construction failed.
    pub estimate: Option<CharacteristicEstimate>,
    pub error: Option<String>,
}

/// Everything a fit or characteristics command produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub tool_version: String,
    /// FNV-1a hash of the inputs that determined this report.
    pub config_hash: String,
    /// Generator seed when the underlying data were simulated; absent for
    /// recorded datasets.
    pub seed: Option<u64>,
    pub time_unit: String,
    pub profile: StressProfile,
    pub sample_size: usize,
    pub n1: usize,
    pub n2: usize,
    pub censored: usize,
    pub confidence: f64,
    pub fits: Vec<FitReport>,
    pub characteristics: Vec<CharacteristicTable>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn fitted_params(&self, beta: f64) -> Option<RegressionParams> {
        self.fits
            .iter()
            .find(|f| f.beta == beta)
            .map(|f| RegressionParams::new(f.a0, f.a1))
    }
}

/// Runs the full fit path and assembles the parameter table.
pub fn build_fit_report(
    data: &ExperimentData,
    profile: &StressProfile,
    betas: &[f64],
    confidence: f64,
    time_unit: &str,
    notes: Vec<String>,
) -> Result<ReportBundle, ReportError> {
    if betas.is_empty() {
        return Err(ReportError::NoBetas);
    }
    let z = normal::two_sided_z(confidence)?;
    let n = data.total_units();
    let mut fits = Vec::with_capacity(betas.len());
    for (i, result) in fit_path(data, profile, betas, &FitConfig::default())
        .into_iter()
        .enumerate()
    {
        let fit = result.map_err(|e| ReportError::Fit {
            beta: betas[i],
            source: e,
        })?;
        let cov = asymptotics::sandwich_covariance(fit.params, profile, fit.beta, n).ok();
        let se = cov.map(|c| {
            (
                c.n_scaled_variances[0].sqrt(),
                c.n_scaled_variances[1].sqrt(),
            )
        });
        fits.push(FitReport {
            beta: fit.beta,
            a0: fit.params.a0,
            a1: fit.params.a1,
            objective: fit.objective,
            converged: fit.converged,
            iterations: fit.iterations,
            se_a0: se.map(|s| s.0),
            se_a1: se.map(|s| s.1),
            ci_a0: se.map(|s| (fit.params.a0 - z * s.0, fit.params.a0 + z * s.0)),
            ci_a1: se.map(|s| (fit.params.a1 - z * s.1, fit.params.a1 + z * s.1)),
        });
    }

    let mut hash_input = String::new();
    let _ = write!(
        hash_input,
        "{profile:?}|{n}|{:?}|{:?}|{betas:?}|{confidence}",
        data.stage1_times(),
        data.stage2_times()
    );

    Ok(ReportBundle {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: fnv1a_hex(hash_input.as_bytes()),
        seed: None,
        time_unit: time_unit.to_string(),
        profile: *profile,
        sample_size: n,
        n1: data.n1(),
        n2: data.n2(),
        censored: data.censored(),
        confidence,
        fits,
        characteristics: Vec::new(),
        notes,
    })
}

/// Computes characteristic tables for every fitted beta at the given stress
/// levels and attaches them to the bundle. Cell failures (a degenerate
/// transform, a singular covariance) are recorded in place rather than
/// aborting the table.
pub fn attach_characteristics(
    bundle: &mut ReportBundle,
    stresses: &[f64],
    mission_time: f64,
    quantile_level: f64,
) {
    let kinds = [
        CharacteristicKind::Mttf,
        CharacteristicKind::Reliability { mission_time },
        CharacteristicKind::Quantile {
            level: quantile_level,
        },
    ];
    let mut tables = Vec::new();
    for kind in kinds {
        for &stress in stresses {
            let mut rows = Vec::new();
            for fit in &bundle.fits {
                let params = RegressionParams::new(fit.a0, fit.a1);
                let value = characteristics::value(kind, params, stress).ok();
                let cell = characteristics::confidence_interval(
                    kind,
                    params,
                    &bundle.profile,
                    stress,
                    fit.beta,
                    bundle.sample_size,
                    bundle.confidence,
                );
                rows.push(match cell {
                    Ok(estimate) => CharacteristicTableRow {
                        beta: fit.beta,
                        value,
                        estimate: Some(estimate),
                        error: None,
                    },
                    Err(e) => CharacteristicTableRow {
                        beta: fit.beta,
                        value,
                        estimate: None,
                        error: Some(e.to_string()),
                    },
                });
            }
            tables.push(CharacteristicTable { kind, stress, rows });
        }
    }
    bundle.characteristics = tables;
}

fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// RFC 4180: quote fields containing separators, quotes or line breaks.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Parameter table, one row per beta.
pub fn fit_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from(
        "beta,a0,a0_se,a0_ci_low,a0_ci_high,a1,a1_se,a1_ci_low,a1_ci_high,objective,converged,iterations\n",
    );
    for fit in &bundle.fits {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_num(fit.beta),
            fmt_num(fit.a0),
            fmt_opt(fit.se_a0),
            fmt_opt(fit.ci_a0.map(|c| c.0)),
            fmt_opt(fit.ci_a0.map(|c| c.1)),
            fmt_num(fit.a1),
            fmt_opt(fit.se_a1),
            fmt_opt(fit.ci_a1.map(|c| c.0)),
            fmt_opt(fit.ci_a1.map(|c| c.1)),
            fmt_num(fit.objective),
            fit.converged,
            fit.iterations,
        );
    }
    out
}

fn kind_label(kind: CharacteristicKind) -> String {
    match kind {
        CharacteristicKind::Mttf => "mttf".to_string(),
        CharacteristicKind::Reliability { mission_time } => {
            format!("reliability(t={mission_time})")
        }
        CharacteristicKind::Quantile { level } => format!("quantile(level={level})"),
    }
}

fn is_time_valued(kind: CharacteristicKind) -> bool {
    !matches!(kind, CharacteristicKind::Reliability { .. })
}

/// Characteristic tables in long form; time-valued cells divided per `units`.
pub fn characteristics_csv(bundle: &ReportBundle, units: Units) -> String {
    let mut out = String::from(
        "characteristic,stress,beta,unit,estimate,direct_low,direct_high,direct_clamped,transformed_low,transformed_high,error\n",
    );
    for table in &bundle.characteristics {
        let divisor = if is_time_valued(table.kind) {
            units.divisor()
        } else {
            1.0
        };
        let unit_label = if is_time_valued(table.kind) {
            units.label(&bundle.time_unit)
        } else {
            "probability".to_string()
        };
        for row in &table.rows {
            match &row.estimate {
                Some(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},",
                        csv_field(&kind_label(table.kind)),
                        fmt_num(table.stress),
                        fmt_num(row.beta),
                        csv_field(&unit_label),
                        fmt_num(e.value / divisor),
                        fmt_num(e.ci_direct.0 / divisor),
                        fmt_num(e.ci_direct.1 / divisor),
                        e.direct_clamped,
                        fmt_num(e.ci_transformed.0 / divisor),
                        fmt_num(e.ci_transformed.1 / divisor),
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},,,,,,{}",
                        csv_field(&kind_label(table.kind)),
                        fmt_num(table.stress),
                        fmt_num(row.beta),
                        csv_field(&unit_label),
                        fmt_opt(row.value.map(|v| v / divisor)),
                        csv_field(row.error.as_deref().unwrap_or("unknown")),
                    );
                }
            }
        }
    }
    out
}

/// Metrics of the MSE study that can be pivoted into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseMetric {
    A0,
    A1,
    Mttf,
    Quantile,
    Reliability,
}

impl MseMetric {
    pub const ALL: [MseMetric; 5] = [
        MseMetric::A0,
        MseMetric::A1,
        MseMetric::Mttf,
        MseMetric::Quantile,
        MseMetric::Reliability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MseMetric::A0 => "mse_a0",
            MseMetric::A1 => "mse_a1",
            MseMetric::Mttf => "mse_mttf",
            MseMetric::Quantile => "mse_quantile",
            MseMetric::Reliability => "mse_reliability",
        }
    }

    fn pick(self, row: &crate::simulation::MseRow) -> f64 {
        match self {
            MseMetric::A0 => row.mse_a0,
            MseMetric::A1 => row.mse_a1,
            MseMetric::Mttf => row.mse_mttf,
            MseMetric::Quantile => row.mse_quantile,
            MseMetric::Reliability => row.mse_reliability,
        }
    }
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup();
    v
}

/// Matrix layout: one row per contamination level, one column per beta.
pub fn mse_matrix_csv(result: &MseStudyResult, metric: MseMetric) -> String {
    let betas = sorted_unique(result.rows.iter().map(|r| r.beta));
    let levels = sorted_unique(result.rows.iter().map(|r| r.contamination));
    let mut out = String::from("contamination");
    for b in &betas {
        let _ = write!(out, ",beta={}", fmt_num(*b));
    }
    out.push('\n');
    for &nu in &levels {
        let _ = write!(out, "{}", fmt_num(nu));
        for &b in &betas {
            let cell = result.row(nu, b).map(|r| metric.pick(r));
            let _ = write!(out, ",{}", fmt_opt(cell));
        }
        out.push('\n');
    }
    out
}

/// Plot-ready long format of the full MSE study.
pub fn mse_long_csv(result: &MseStudyResult) -> String {
    let mut out = String::from(
        "contamination,beta,mse_a0,mse_a1,mse_mttf,mse_quantile,mse_reliability,replicates_used,replicates_failed\n",
    );
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(r.contamination),
            fmt_num(r.beta),
            fmt_num(r.mse_a0),
            fmt_num(r.mse_a1),
            fmt_num(r.mse_mttf),
            fmt_num(r.mse_quantile),
            fmt_num(r.mse_reliability),
            r.replicates_used,
            r.replicates_failed,
        );
    }
    out
}

/// Metrics of the coverage study that can be pivoted into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMetric {
    CoverageA0,
    CoverageA1,
    WidthA0,
    WidthA1,
    MeanA0,
    MeanA1,
}

impl CoverageMetric {
    pub const ALL: [CoverageMetric; 6] = [
        CoverageMetric::CoverageA0,
        CoverageMetric::CoverageA1,
        CoverageMetric::WidthA0,
        CoverageMetric::WidthA1,
        CoverageMetric::MeanA0,
        CoverageMetric::MeanA1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoverageMetric::CoverageA0 => "coverage_a0",
            CoverageMetric::CoverageA1 => "coverage_a1",
            CoverageMetric::WidthA0 => "width_a0",
            CoverageMetric::WidthA1 => "width_a1",
            CoverageMetric::MeanA0 => "mean_a0",
            CoverageMetric::MeanA1 => "mean_a1",
        }
    }

    fn pick(self, row: &crate::simulation::CoverageRow) -> f64 {
        match self {
            CoverageMetric::CoverageA0 => row.coverage_a0,
            CoverageMetric::CoverageA1 => row.coverage_a1,
            CoverageMetric::WidthA0 => row.width_a0,
            CoverageMetric::WidthA1 => row.width_a1,
            CoverageMetric::MeanA0 => row.mean_a0,
            CoverageMetric::MeanA1 => row.mean_a1,
        }
    }
}

pub fn coverage_matrix_csv(result: &CoverageStudyResult, metric: CoverageMetric) -> String {
    let betas = sorted_unique(result.rows.iter().map(|r| r.beta));
    let levels = sorted_unique(result.rows.iter().map(|r| r.contamination));
    let mut out = String::from("contamination");
    for b in &betas {
        let _ = write!(out, ",beta={}", fmt_num(*b));
    }
    out.push('\n');
    for &nu in &levels {
        let _ = write!(out, "{}", fmt_num(nu));
        for &b in &betas {
            let cell = result.row(nu, b).map(|r| metric.pick(r));
            let _ = write!(out, ",{}", fmt_opt(cell));
        }
        out.push('\n');
    }
    out
}

pub fn coverage_long_csv(result: &CoverageStudyResult) -> String {
    let mut out = String::from(
        "contamination,beta,coverage_a0,width_a0,mean_a0,coverage_a1,width_a1,mean_a1,replicates_used,replicates_failed\n",
    );
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_num(r.contamination),
            fmt_num(r.beta),
            fmt_num(r.coverage_a0),
            fmt_num(r.width_a0),
            fmt_num(r.mean_a0),
            fmt_num(r.coverage_a1),
            fmt_num(r.width_a1),
            fmt_num(r.mean_a1),
            r.replicates_used,
            r.replicates_failed,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset;
    use crate::testutil::{components_data, components_profile};

    fn components_bundle() -> ReportBundle {
        build_fit_report(
            &components_data(),
            &components_profile(),
            &[0.0, 0.5],
            0.95,
            "seconds",
            dataset::wang_fei_notes(),
        )
        .unwrap()
    }

    #[test]
    fn fit_report_has_one_row_per_beta() {
        let bundle = components_bundle();
        assert_eq!(bundle.fits.len(), 2);
        assert_eq!(bundle.sample_size, 100);
        assert_eq!(bundle.censored, 50);
        assert!(bundle.fits.iter().all(|f| f.converged));
        assert!(bundle.fits.iter().all(|f| f.se_a0.is_some()));
        let mle = &bundle.fits[0];
        assert!(mle.ci_a0.unwrap().0 < mle.a0 && mle.a0 < mle.ci_a0.unwrap().1);
    }

    #[test]
    fn report_is_idempotent_and_hashed() {
        let a = components_bundle();
        let b = components_bundle();
        assert_eq!(a, b);
        assert_eq!(a.config_hash.len(), 16);
        let other = build_fit_report(
            &components_data(),
            &components_profile(),
            &[0.0],
            0.95,
            "seconds",
            vec![],
        )
        .unwrap();
        assert_ne!(a.config_hash, other.config_hash);
    }

    #[test]
    fn characteristics_attach_per_stress_and_kind() {
        let mut bundle = components_bundle();
        attach_characteristics(&mut bundle, &[25.0, 100.0, 150.0], 600.0, 0.9);
        assert_eq!(bundle.characteristics.len(), 9);
        assert!(bundle
            .characteristics
            .iter()
            .all(|t| t.rows.iter().all(|r| r.estimate.is_some())));
        let csv = characteristics_csv(&bundle, Units::Hours);
        assert!(csv.contains("mttf"));
        assert!(csv.contains("reliability(t=600)"));
        assert!(csv.contains("quantile(level=0.9)"));
        // 9 tables x 2 betas + header
        assert_eq!(csv.lines().count(), 19);
    }

    #[test]
    fn failed_cells_keep_their_point_value_without_aborting() {
        let mut bundle = components_bundle();
        // A mission time of zero makes every reliability estimate exactly 1,
        // which has no logit interval; the column must still read 1 and the
        // other tables must survive.
        attach_characteristics(&mut bundle, &[25.0], 0.0, 0.9);
        let reliability = bundle
            .characteristics
            .iter()
            .find(|t| matches!(t.kind, CharacteristicKind::Reliability { .. }))
            .unwrap();
        for row in &reliability.rows {
            assert!(row.estimate.is_none());
            assert_eq!(row.value, Some(1.0));
            assert!(row.error.as_deref().unwrap().contains("logit"));
        }
        let mttf = bundle
            .characteristics
            .iter()
            .find(|t| matches!(t.kind, CharacteristicKind::Mttf))
            .unwrap();
        assert!(mttf.rows.iter().all(|r| r.estimate.is_some()));
        let csv = characteristics_csv(&bundle, Units::Raw);
        assert!(csv.contains("logit"));
        assert!(csv.contains("reliability(t=0),25,0,probability,1,,,,,,"));
    }

    #[test]
    fn unit_conversion_applies_only_to_time_cells() {
        let mut bundle = components_bundle();
        attach_characteristics(&mut bundle, &[100.0], 600.0, 0.9);
        let raw = characteristics_csv(&bundle, Units::Raw);
        let hours = characteristics_csv(&bundle, Units::Hours);
        let pick = |csv: &str, prefix: &str| -> f64 {
            csv.lines()
                .find(|l| l.starts_with(prefix))
                .unwrap()
                .split(',')
                .nth(4)
                .unwrap()
                .parse()
                .unwrap()
        };
        let mttf_raw = pick(&raw, "mttf");
        let mttf_hours = pick(&hours, "mttf");
        assert!((mttf_raw / 3600.0 - mttf_hours).abs() < 1e-12);
        let rel_raw = pick(&raw, "reliability");
        let rel_hours = pick(&hours, "reliability");
        assert_eq!(rel_raw, rel_hours);
    }

    #[test]
    fn csv_quoting_handles_special_fields() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn matrix_csv_layout() {
        use crate::simulation::{MseRow, MseStudyResult};
        let rows = vec![
            MseRow {
                contamination: 0.0,
                beta: 0.0,
                mse_a0: 1.0,
                mse_a1: 2.0,
                mse_mttf: 0.0,
                mse_quantile: 0.0,
                mse_reliability: 0.0,
                replicates_used: 3,
                replicates_failed: 0,
            },
            MseRow {
                contamination: 0.0,
                beta: 1.0,
                mse_a0: 3.0,
                mse_a1: 4.0,
                mse_mttf: 0.0,
                mse_quantile: 0.0,
                mse_reliability: 0.0,
                replicates_used: 3,
                replicates_failed: 0,
            },
        ];
        let result = MseStudyResult { rows };
        let csv = mse_matrix_csv(&result, MseMetric::A0);
        assert_eq!(csv, "contamination,beta=0,beta=1\n0,1,3\n");
        let long = mse_long_csv(&result);
        assert_eq!(long.lines().count(), 3);
    }
}
