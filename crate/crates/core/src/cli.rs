//! Command-line front end: `fit`, `forecast` and `simulate`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backtest::{
    fit_sample, forecast_rolling, FitReport, ForecastReport, ForecastSettings, DEFAULT_EWMA_LAMBDA,
    MIN_CALIBRATION_SIZE,
};
use crate::error::{Error, Result};
use crate::gof::{DistributionKind, GofConfig, CACHE_DIR_ENV, DEFAULT_LEVEL, DEFAULT_NULL_SEED};
use crate::market_data::{classify_maturity, load_rate_matrix, MaturityClass, RateMatrix, RateSeries};
use crate::models::{simulate_regimes, ModelKind, ModelParams, Regime};
use crate::rng::derive_seed;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ratefit", version, about = "Segmented Vasicek/CIR fitting and rolling forecasts of interest rates")]
pub struct Cli {
    /// Directory for cached Monte Carlo null tables (overrides RATEFIT_NULL_CACHE).
    #[arg(long, global = true)]
    pub null_cache: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Whole-sample segmented fit per maturity.
    Fit(RunArgs),
    /// Rolling next-week forecasts against an EWMA baseline.
    Forecast(RunArgs),
    /// Write a synthetic rate matrix.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Vasicek,
    Cir,
    Both,
}

impl ModelChoice {
    pub fn models(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Vasicek => vec![ModelKind::Vasicek],
            ModelChoice::Cir => vec![ModelKind::Cir],
            ModelChoice::Both => ModelKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    Normal,
    Ncx2,
    /// fit: both kinds, lower total error selected; forecast: normal for
    /// Vasicek, ncx2 for CIR.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Rate matrix CSV (`Date,<label>,...`).
    #[arg(long)]
    pub input: PathBuf,
    /// Maturity labels to process (repeat or comma-separate); `all` for every column.
    #[arg(long = "maturity", value_delimiter = ',', default_value = "all")]
    pub maturities: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub model: ModelChoice,
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: KindChoice,
    /// Significance level of the goodness-of-fit tests.
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    /// Initial (trailing) window size for forecasts.
    #[arg(long, default_value_t = 52)]
    pub m: usize,
    /// EWMA decay rate.
    #[arg(long, default_value_t = DEFAULT_EWMA_LAMBDA)]
    pub lambda: f64,
    /// Seed of the Monte Carlo null tables.
    #[arg(long, default_value_t = DEFAULT_NULL_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "ratefit-out")]
    #[serde(skip)]
    pub output: PathBuf,
    #[arg(long = "format", value_enum, value_delimiter = ',', default_value = "json,csv")]
    pub formats: Vec<Format>,
}

/// Validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub args: RunArgs,
    #[serde(skip)]
    pub gof: GofConfig,
}

impl RunConfig {
    pub fn new(args: RunArgs) -> Result<Self> {
        if !(args.level > 0.0 && args.level < 1.0) {
            return Err(Error::Usage(format!("--level must lie in (0, 1), got {}", args.level)));
        }
        if args.m < MIN_CALIBRATION_SIZE {
            return Err(Error::Usage(format!("--m must be at least {MIN_CALIBRATION_SIZE}, got {}", args.m)));
        }
        if !(args.lambda > 0.0 && args.lambda < 1.0) {
            return Err(Error::Usage(format!("--lambda must lie in (0, 1), got {}", args.lambda)));
        }
        if args.formats.is_empty() {
            return Err(Error::Usage("at least one output format is required".into()));
        }
        let gof = GofConfig {
            level: args.level,
            null_seed: args.seed,
        };
        Ok(Self { args, gof })
    }

    fn select(&self, matrix: &RateMatrix) -> Result<Vec<RateSeries>> {
        let all = self.args.maturities.iter().any(|m| m.eq_ignore_ascii_case("all"));
        let labels: Vec<String> = if all {
            matrix.maturities().to_vec()
        } else {
            self.args.maturities.clone()
        };
        labels
            .iter()
            .map(|l| match matrix.series_for(l) {
                Err(Error::UnknownMaturity(m)) => Err(Error::Usage(format!("unknown maturity {m:?}"))),
                other => other,
            })
            .collect()
    }

    fn wants(&self, f: Format) -> bool {
        self.args.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "cir")]
    pub model: SimModel,
    #[arg(long, default_value_t = 0.05)]
    pub kappa: f64,
    #[arg(long, default_value_t = 3.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Initial rate (defaults to theta).
    #[arg(long)]
    pub r0: Option<f64>,
    /// Number of weekly observations per maturity.
    #[arg(long, default_value_t = 308)]
    pub n: usize,
    /// Maturity labels of the synthetic columns.
    #[arg(long = "label", value_delimiter = ',', default_value = "30Y")]
    pub labels: Vec<String>,
    /// Regime change `START:KAPPA:THETA:SIGMA`, in force from transition START on.
    #[arg(long = "regime", value_parser = parse_regime)]
    pub regimes: Vec<(usize, f64, f64, f64)>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Vasicek,
    Cir,
}

fn parse_regime(s: &str) -> std::result::Result<(usize, f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("expected START:KAPPA:THETA:SIGMA, got {s:?}"));
    }
    let start = parts[0].parse::<usize>().map_err(|e| format!("start: {e}"))?;
    let num = |i: usize| parts[i].parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok((start, num(1)?, num(2)?, num(3)?))
}

/// Entry point of the `ratefit` binary.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(dir) = &cli.null_cache {
        std::env::set_var(CACHE_DIR_ENV, dir);
    }
    let outcome = match cli.command {
        Command::Fit(args) => RunConfig::new(args).and_then(|c| cmd_fit(&c)),
        Command::Forecast(args) => RunConfig::new(args).and_then(|c| cmd_forecast(&c)),
        Command::Simulate(args) => cmd_simulate(&args).map(|path| {
            println!("{}", path.display());
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("ratefit: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ratefit: {e}");
            ExitCode::from(1)
        }
    }
}

/// One failed (maturity, model, kind) job.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub maturity: String,
    pub model: ModelKind,
    pub kind: Option<DistributionKind>,
    pub error: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    report_type: &'a str,
    report: &'a T,
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, report_type: &str, report: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope {
        schema_version: SCHEMA_VERSION,
        report_type,
        report,
    })?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs `job` for every item on a small worker pool, returning results in
/// input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], job: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = job(&items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

fn dataset_of(label: &str) -> &'static str {
    match classify_maturity(label) {
        Ok(MaturityClass::MoneyMarket) => "money_market",
        Ok(MaturityClass::Term) => "term",
        Err(_) => "unclassified",
    }
}

fn write_manifest(dir: &Path, failures: &[Failure]) -> Result<()> {
    write_json(&dir.join("errors.json"), "error_manifest", &failures)
}

fn prepare(config: &RunConfig) -> Result<Vec<RateSeries>> {
    let matrix = load_rate_matrix(&config.args.input)?;
    let series = config.select(&matrix)?;
    fs::create_dir_all(&config.args.output)?;
    write_json(&config.args.output.join("run_config.json"), "run_config", config)?;
    Ok(series)
}

#[derive(Debug, Clone, Serialize)]
struct FitSummaryRow {
    maturity: String,
    dataset: &'static str,
    model: ModelKind,
    kind: DistributionKind,
    selected: bool,
    groups: usize,
    segments: usize,
    n_covered: usize,
    total_rmse: f64,
    weighted_mean_rmse: f64,
}

/// `fit`: one report per (maturity, model, kind) plus `fit_summary.csv` and
/// `errors.json`. Returns whether every job succeeded.
pub fn cmd_fit(config: &RunConfig) -> Result<bool> {
    let series = prepare(config)?;
    let kinds = match config.args.kind {
        KindChoice::Normal => vec![DistributionKind::Normal],
        KindChoice::Ncx2 => vec![DistributionKind::Ncx2],
        KindChoice::Auto => vec![DistributionKind::Normal, DistributionKind::Ncx2],
    };
    let mut jobs = Vec::new();
    for s in &series {
        for model in config.args.model.models() {
            for kind in &kinds {
                jobs.push((s, model, *kind));
            }
        }
    }
    let results = parallel_map(&jobs, |(s, model, kind)| fit_sample(s, *kind, *model, &config.gof));
    let dir = &config.args.output;
    let mut failures = Vec::new();
    let mut rows: Vec<FitSummaryRow> = Vec::new();
    for ((s, model, kind), res) in jobs.iter().zip(results) {
        match res {
            Ok(report) => {
                let stem = format!("fit_{}_{}_{}", file_stem(&s.maturity), model, kind);
                write_fit(dir, &stem, &report, config)?;
                rows.push(FitSummaryRow {
                    maturity: s.maturity.clone(),
                    dataset: dataset_of(&s.maturity),
                    model: *model,
                    kind: *kind,
                    selected: true,
                    groups: report.partition.groups.len(),
                    segments: report.per_group.len(),
                    n_covered: report.n_covered,
                    total_rmse: report.total_rmse,
                    weighted_mean_rmse: report.weighted_mean_rmse,
                });
            }
            Err(e) => failures.push(Failure {
                maturity: s.maturity.clone(),
                model: *model,
                kind: Some(*kind),
                error: e.to_string(),
            }),
        }
    }
    if config.args.kind == KindChoice::Auto {
        // keep the lower total error per (maturity, model)
        for i in 0..rows.len() {
            let better = rows.iter().any(|o| {
                o.maturity == rows[i].maturity
                    && o.model == rows[i].model
                    && o.kind != rows[i].kind
                    && (o.total_rmse < rows[i].total_rmse
                        || (o.total_rmse == rows[i].total_rmse && o.kind == DistributionKind::Normal))
            });
            rows[i].selected = !better;
        }
    }
    let mut w = csv::Writer::from_path(dir.join("fit_summary.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_manifest(dir, &failures)?;
    print_fit_table(&rows);
    report_failures(&failures);
    Ok(failures.is_empty())
}

fn write_fit(dir: &Path, stem: &str, report: &FitReport, config: &RunConfig) -> Result<()> {
    if config.wants(Format::Json) {
        write_json(&dir.join(format!("{stem}.json")), "fit_report", report)?;
    }
    if config.wants(Format::Csv) {
        report.write_csv(fs::File::create(dir.join(format!("{stem}.csv")))?)?;
    }
    Ok(())
}

fn print_fit_table(rows: &[FitSummaryRow]) {
    println!("{:<10} {:<8} {:<7} {:>7} {:>9} {:>12}", "maturity", "model", "kind", "groups", "segments", "total_rmse");
    for r in rows.iter().filter(|r| r.selected) {
        println!(
            "{:<10} {:<8} {:<7} {:>7} {:>9} {:>12.6}",
            r.maturity,
            r.model.to_string(),
            r.kind.to_string(),
            r.groups,
            r.segments,
            r.total_rmse
        );
    }
}

fn report_failures(failures: &[Failure]) {
    for f in failures {
        eprintln!("ratefit: {} / {} failed: {}", f.maturity, f.model, f.error);
    }
}

/// Kind used for a forecast run.
pub fn forecast_kind(choice: KindChoice, model: ModelKind) -> DistributionKind {
    match (choice, model) {
        (KindChoice::Normal, _) => DistributionKind::Normal,
        (KindChoice::Ncx2, _) => DistributionKind::Ncx2,
        (KindChoice::Auto, ModelKind::Vasicek) => DistributionKind::Normal,
        (KindChoice::Auto, ModelKind::Cir) => DistributionKind::Ncx2,
    }
}

#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    maturity: String,
    dataset: &'static str,
    /// First row of the term dataset, where the split line is drawn.
    split_boundary: bool,
    rmse_vasicek: Option<f64>,
    rmse_cir: Option<f64>,
    rmse_ewma: Option<f64>,
    forecasts: usize,
}

/// `forecast`: one report per (maturity, model), `forecast_comparison.csv`
/// with model and EWMA errors per maturity, and `errors.json`.
pub fn cmd_forecast(config: &RunConfig) -> Result<bool> {
    let mut series = prepare(config)?;
    if let Some(s) = series.iter().find(|s| s.len() <= config.args.m) {
        return Err(Error::Usage(format!(
            "--m {} is not smaller than the length {} of maturity {}",
            config.args.m,
            s.len(),
            s.maturity
        )));
    }
    // money market first, so the split is a single boundary
    series.sort_by_key(|s| match classify_maturity(&s.maturity) {
        Ok(MaturityClass::MoneyMarket) => 0,
        Ok(MaturityClass::Term) => 1,
        Err(_) => 2,
    });
    let settings = ForecastSettings::new(config.args.m, config.args.lambda);
    let mut jobs = Vec::new();
    for s in &series {
        for model in config.args.model.models() {
            jobs.push((s, model));
        }
    }
    let results = parallel_map(&jobs, |(s, model)| {
        forecast_rolling(s, forecast_kind(config.args.kind, *model), *model, &settings, &config.gof)
    });
    let dir = &config.args.output;
    let mut failures = Vec::new();
    let mut rows: Vec<ComparisonRow> = Vec::new();
    let mut seen_term = false;
    for s in &series {
        let dataset = dataset_of(&s.maturity);
        let boundary = dataset == "term" && !seen_term;
        seen_term |= dataset == "term";
        rows.push(ComparisonRow {
            maturity: s.maturity.clone(),
            dataset,
            split_boundary: boundary,
            rmse_vasicek: None,
            rmse_cir: None,
            rmse_ewma: None,
            forecasts: 0,
        });
    }
    for ((s, model), res) in jobs.iter().zip(results) {
        let row = rows.iter_mut().find(|r| r.maturity == s.maturity).expect("row per maturity");
        match res {
            Ok(report) => {
                let stem = format!("forecast_{}_{}", file_stem(&s.maturity), model);
                write_forecast(dir, &stem, &report, config)?;
                match model {
                    ModelKind::Vasicek => row.rmse_vasicek = Some(report.rmse_model),
                    ModelKind::Cir => row.rmse_cir = Some(report.rmse_model),
                }
                row.rmse_ewma = Some(report.rmse_ewma);
                row.forecasts = report.records.len();
            }
            Err(e) => failures.push(Failure {
                maturity: s.maturity.clone(),
                model: *model,
                kind: Some(forecast_kind(config.args.kind, *model)),
                error: e.to_string(),
            }),
        }
    }
    let mut w = csv::Writer::from_path(dir.join("forecast_comparison.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_manifest(dir, &failures)?;
    println!("{:<10} {:<13} {:>12} {:>12} {:>12}", "maturity", "dataset", "rmse_vasicek", "rmse_cir", "rmse_ewma");
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    for r in &rows {
        if r.split_boundary {
            println!("{}", "-".repeat(63));
        }
        println!(
            "{:<10} {:<13} {:>12} {:>12} {:>12}",
            r.maturity,
            r.dataset,
            cell(r.rmse_vasicek),
            cell(r.rmse_cir),
            cell(r.rmse_ewma)
        );
    }
    report_failures(&failures);
    Ok(failures.is_empty())
}

fn write_forecast(dir: &Path, stem: &str, report: &ForecastReport, config: &RunConfig) -> Result<()> {
    if config.wants(Format::Json) {
        write_json(&dir.join(format!("{stem}.json")), "forecast_report", report)?;
    }
    if config.wants(Format::Csv) {
        report.write_csv(fs::File::create(dir.join(format!("{stem}.csv")))?)?;
    }
    Ok(())
}

/// `simulate`: writes a synthetic rate matrix and returns its path.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<PathBuf> {
    let kind = match args.model {
        SimModel::Vasicek => ModelKind::Vasicek,
        SimModel::Cir => ModelKind::Cir,
    };
    if args.n < 2 {
        return Err(Error::Usage(format!("--n must be at least 2, got {}", args.n)));
    }
    if args.labels.is_empty() {
        return Err(Error::Usage("at least one --label is required".into()));
    }
    let usage = |e: Error| Error::Usage(e.to_string());
    let base = ModelParams::new(kind, args.kappa, args.theta, args.sigma).map_err(usage)?;
    let mut regimes = vec![Regime { start: 0, params: base }];
    for &(start, kappa, theta, sigma) in &args.regimes {
        regimes.push(Regime {
            start,
            params: ModelParams::new(kind, kappa, theta, sigma).map_err(usage)?,
        });
    }
    regimes.sort_by_key(|r| r.start);
    let r0 = args.r0.unwrap_or(args.theta);
    let series = args
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let path = simulate_regimes(&regimes, r0, args.n - 1, derive_seed(args.seed, j as u64)).map_err(usage)?;
            Ok(RateSeries::from_rates(label.clone(), &path))
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = RateMatrix::from_series(&series).map_err(usage)?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    matrix.write_csv(&args.output)?;
    Ok(args.output.clone())
}
