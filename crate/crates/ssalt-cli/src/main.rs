//! `ssalt`: fitting, reporting and Monte Carlo studies for simple
//! step-stress accelerated life tests with exponential lifetimes.
//!
//! Exit codes: 0 success, 2 input error, 3 estimate does not exist (a stage
//! without failures), 4 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssalt::dataset::{self, DatasetError, DatasetFile};
use ssalt::estimator::FitError;
use ssalt::report::{self, ReportBundle, ReportError, Units};
use ssalt::simulation::{self, StudyConfig};
use ssalt::studyfile::{self, StudyFileError};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ssalt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model over a grid of tuning parameters and report estimates
    /// with sandwich confidence intervals.
    Fit(FitArgs),
    /// Compute reliability, quantile and MTTF tables from a fit report.
    Characteristics(CharacteristicsArgs),
    /// Draw one synthetic experiment from a study configuration and write it
    /// as a dataset file.
    Simulate(SimulateArgs),
    /// Monte Carlo mean-squared-error study over contamination levels.
    MseStudy(StudyArgs),
    /// Monte Carlo confidence-interval coverage study.
    CoverageStudy(StudyArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Dataset file to fit; omit with --embedded.
    dataset: Option<PathBuf>,
    /// Use the built-in electronic-components dataset.
    #[arg(long, conflicts_with = "dataset")]
    embedded: bool,
    /// Tuning parameter; repeat for a grid (default 0 0.2 0.4 0.6 0.8 1).
    #[arg(long = "beta")]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Directory for fit.csv / fit.json.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Args)]
struct CharacteristicsArgs {
    /// fit.json produced by the fit command.
    fit_report: PathBuf,
    /// Stress level to evaluate at; repeat for several (default: x0, x1, x2
    /// of the fitted design).
    #[arg(long = "stress")]
    stresses: Vec<f64>,
    /// Mission time for the reliability table (raw data units).
    #[arg(long, default_value_t = 600.0)]
    mission_time: f64,
    /// Survival level for the quantile table.
    #[arg(long, default_value_t = 0.9)]
    quantile_level: f64,
    #[arg(long, value_enum, default_value_t = UnitsArg::Raw)]
    units: UnitsArg,
    /// Directory for characteristics.csv / characteristics.json.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study configuration (TOML).
    config: PathBuf,
    /// Where to write the dataset.
    #[arg(long, default_value = "dataset.csv")]
    output: PathBuf,
    /// Which contamination level of the config to sample under.
    #[arg(long, default_value_t = 0)]
    level_index: usize,
    /// Which replicate stream to draw.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration (TOML).
    config: PathBuf,
    /// Directory for the result CSV matrices and JSON.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Worker threads (default: all cores). Results are identical for any
    /// worker count.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitsArg {
    Raw,
    Minutes,
    Hours,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Units {
        match u {
            UnitsArg::Raw => Units::Raw,
            UnitsArg::Minutes => Units::Minutes,
            UnitsArg::Hours => Units::Hours,
        }
    }
}

enum CliError {
    Input(String),
    Nonexistence(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Nonexistence(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Nonexistence(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StudyFileError> for CliError {
    fn from(e: StudyFileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        if e.is_nonexistence() {
            CliError::Nonexistence(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::MissingStageFailures { .. } => CliError::Nonexistence(e.to_string()),
            FitError::InvalidConfig(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<simulation::StudyError> for CliError {
    fn from(e: simulation::StudyError) -> Self {
        match e {
            simulation::StudyError::InvalidConfig { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Characteristics(args) => cmd_characteristics(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::MseStudy(args) => cmd_mse_study(args),
        Command::CoverageStudy(args) => cmd_coverage_study(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_dataset(args: &FitArgs) -> Result<(DatasetFile, Vec<String>), CliError> {
    if args.embedded {
        Ok((dataset::wang_fei(), dataset::wang_fei_notes()))
    } else {
        let path = args.dataset.as_ref().ok_or_else(|| {
            CliError::Input("provide a dataset path or use --embedded".to_string())
        })?;
        let text = std::fs::read_to_string(path)?;
        Ok((DatasetFile::parse(&text)?, Vec::new()))
    }
}

fn default_betas() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let (ds, notes) = load_dataset(&args)?;
    let data = ds.experiment_data()?;
    let betas = if args.betas.is_empty() {
        default_betas()
    } else {
        args.betas.clone()
    };
    for &beta in &betas {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(CliError::Input(format!(
                "beta {beta} must be finite and non-negative"
            )));
        }
    }
    if !(args.confidence > 0.0 && args.confidence < 1.0) {
        return Err(CliError::Input(format!(
            "confidence {} must lie in (0, 1)",
            args.confidence
        )));
    }
    let bundle = report::build_fit_report(
        &data,
        &ds.meta.profile,
        &betas,
        args.confidence,
        &ds.meta.time_unit,
        notes,
    )?;

    std::fs::create_dir_all(&args.output)?;
    if args.format.wants_csv() {
        std::fs::write(args.output.join("fit.csv"), report::fit_csv(&bundle))?;
    }
    if args.format.wants_json() {
        std::fs::write(
            args.output.join("fit.json"),
            serde_json::to_string_pretty(&bundle)?,
        )?;
    }
    print!("{}", fit_table(&bundle));
    Ok(())
}

fn cmd_characteristics(args: CharacteristicsArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.fit_report)?;
    let mut bundle: ReportBundle = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.fit_report.display())))?;
    let stresses = if args.stresses.is_empty() {
        vec![
            bundle.profile.x0,
            bundle.profile.x1,
            bundle.profile.x2,
        ]
    } else {
        args.stresses.clone()
    };
    report::attach_characteristics(
        &mut bundle,
        &stresses,
        args.mission_time,
        args.quantile_level,
    );

    std::fs::create_dir_all(&args.output)?;
    let units: Units = args.units.into();
    if args.format.wants_csv() {
        std::fs::write(
            args.output.join("characteristics.csv"),
            report::characteristics_csv(&bundle, units),
        )?;
    }
    if args.format.wants_json() {
        std::fs::write(
            args.output.join("characteristics.json"),
            serde_json::to_string_pretty(&bundle)?,
        )?;
    }
    print!("{}", characteristics_table(&bundle, units));
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = read_study_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.level_index >= config.contamination_levels.len() {
        return Err(CliError::Input(format!(
            "level index {} out of range ({} levels configured)",
            args.level_index,
            config.contamination_levels.len()
        )));
    }
    let data = simulation::sample_study_replicate(&config, args.level_index, args.replicate)?;
    let ds = dataset::from_experiment(&data, config.profile, "raw");
    if let Some(dir) = args.output.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(&args.output, ds.to_string())?;
    println!(
        "wrote {} ({} units: {} stage-1, {} stage-2, {} censored)",
        args.output.display(),
        data.total_units(),
        data.n1(),
        data.n2(),
        data.censored()
    );
    Ok(())
}

fn read_study_config(path: &Path) -> Result<StudyConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(studyfile::parse_study_config(&text)?)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Input(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_mse_study(args: StudyArgs) -> Result<(), CliError> {
    let mut config = read_study_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let result = in_pool(args.jobs, || simulation::mse_study(&config))??;
    std::fs::create_dir_all(&args.output)?;
    for metric in report::MseMetric::ALL {
        std::fs::write(
            args.output.join(format!("{}.csv", metric.name())),
            report::mse_matrix_csv(&result, metric),
        )?;
    }
    std::fs::write(
        args.output.join("mse_long.csv"),
        report::mse_long_csv(&result),
    )?;
    std::fs::write(
        args.output.join("mse.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "config": config,
            "rows": result.rows,
        }))?,
    )?;
    print!("{}", report::mse_long_csv(&result));
    Ok(())
}

fn cmd_coverage_study(args: StudyArgs) -> Result<(), CliError> {
    let mut config = read_study_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let result = in_pool(args.jobs, || simulation::coverage_study(&config))??;
    std::fs::create_dir_all(&args.output)?;
    for metric in report::CoverageMetric::ALL {
        std::fs::write(
            args.output.join(format!("{}.csv", metric.name())),
            report::coverage_matrix_csv(&result, metric),
        )?;
    }
    std::fs::write(
        args.output.join("coverage_long.csv"),
        report::coverage_long_csv(&result),
    )?;
    std::fs::write(
        args.output.join("coverage.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "config": config,
            "rows": result.rows,
        }))?,
    )?;
    print!("{}", report::coverage_long_csv(&result));
    Ok(())
}

fn fit_table(bundle: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "fitted parameters ({} units: {} + {} failures, {} censored; {:.0}% CIs)",
        bundle.sample_size,
        bundle.n1,
        bundle.n2,
        bundle.censored,
        bundle.confidence * 100.0
    );
    let _ = writeln!(
        out,
        "{:>6}  {:>10} {:>24}  {:>10} {:>24}",
        "beta", "a0", "a0 CI", "a1", "a1 CI"
    );
    for fit in &bundle.fits {
        let ci = |ci: Option<(f64, f64)>| match ci {
            Some((lo, hi)) => format!("[{lo:.4}, {hi:.4}]"),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:>6}  {:>10.4} {:>24}  {:>10.5} {:>24}",
            fit.beta,
            fit.a0,
            ci(fit.ci_a0),
            fit.a1,
            ci(fit.ci_a1),
        );
    }
    for note in &bundle.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

fn characteristics_table(bundle: &ReportBundle, units: Units) -> String {
    let mut out = String::new();
    for table in &bundle.characteristics {
        let time_valued = !matches!(
            table.kind,
            ssalt::characteristics::CharacteristicKind::Reliability { .. }
        );
        let divisor = if time_valued { units.divisor() } else { 1.0 };
        let label = match table.kind {
            ssalt::characteristics::CharacteristicKind::Mttf => "mttf".to_string(),
            ssalt::characteristics::CharacteristicKind::Reliability { mission_time } => {
                format!("reliability at t={mission_time}")
            }
            ssalt::characteristics::CharacteristicKind::Quantile { level } => {
                format!("quantile at survival {level}")
            }
        };
        let unit_label = if time_valued {
            units.label(&bundle.time_unit)
        } else {
            "probability".to_string()
        };
        let _ = writeln!(out, "{label} @ stress {} ({unit_label})", table.stress);
        let _ = writeln!(
            out,
            "{:>6}  {:>12} {:>28} {:>28}",
            "beta", "estimate", "direct CI", "transformed CI"
        );
        for row in &table.rows {
            match &row.estimate {
                Some(e) => {
                    let clamp = if e.direct_clamped { " (clamped)" } else { "" };
                    let _ = writeln!(
                        out,
                        "{:>6}  {:>12.4} {:>28} {:>28}",
                        row.beta,
                        e.value / divisor,
                        format!(
                            "[{:.4}, {:.4}]{clamp}",
                            e.ci_direct.0 / divisor,
                            e.ci_direct.1 / divisor
                        ),
                        format!(
                            "[{:.4}, {:.4}]",
                            e.ci_transformed.0 / divisor,
                            e.ci_transformed.1 / divisor
                        ),
                    );
                }
                None => {
                    let value = row
                        .value
                        .map(|v| format!("{:.4}", v / divisor))
                        .unwrap_or_else(|| "-".to_string());
                    let _ = writeln!(
                        out,
                        "{:>6}  {:>12} {:>57}",
                        row.beta,
                        value,
                        format!("({})", row.error.as_deref().unwrap_or("no interval")),
                    );
                }
            }
        }
    }
    out
}
