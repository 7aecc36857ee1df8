//! Command-line interface: dataset fitting, pseudo-value export, asymptotic
//! variance reports, and simulation campaigns.
//!
//! Exit codes: 0 on success, 1 on data or positivity errors, 2 on usage and
//! file-format errors. Diagnostics go to stderr, results to stdout.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipcw::data::{
    read_csv_dataset, write_csv_with_column, CsvDataset, OutcomeKind, OutcomeSpec, StrataSource,
    Stratifier,
};
use ipcw::error::Error;
use ipcw::glm::{fit, AChoice, Approach, FitOptions, Link, ModelSpec};
use ipcw::oracle::{phi_differences, sigma_report, ExampleParams};
use ipcw::simulate::{
    paper_grid, run_campaign, write_figure_csv, write_summaries_csv, CampaignSummary,
    ScenarioConfig,
};
use ipcw::variance::{sandwich, wald_ci};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ipcw", version, about = "Weighted regression for right-censored outcomes")]
struct Cli {
    /// Base seed for simulation subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulate/pseudo (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format where both are supported.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one estimating approach to a CSV dataset.
    Fit(FitArgs),
    /// Append jack-knife pseudo-observations to a CSV dataset.
    Pseudo(PseudoArgs),
    /// Closed-form asymptotic variance report for the two-group example.
    Asymptotics(AsymptoticsArgs),
    /// Run seeded simulation campaigns and write summary tables.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproachArg {
    Ind,
    Out,
    Pse,
    Uncensored,
}

impl From<ApproachArg> for Approach {
    fn from(value: ApproachArg) -> Self {
        match value {
            ApproachArg::Ind => Approach::Individual,
            ApproachArg::Out => Approach::Outcome,
            ApproachArg::Pse => Approach::Pseudo,
            ApproachArg::Uncensored => Approach::Uncensored,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Identity,
    Exp,
    Logit,
}

impl From<LinkArg> for Link {
    fn from(value: LinkArg) -> Self {
        match value {
            LinkArg::Identity => Link::Identity,
            LinkArg::Exp => Link::Exponential,
            LinkArg::Logit => Link::Logistic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AArg {
    Covariate,
    Gaussian,
}

impl From<AArg> for AChoice {
    fn from(value: AArg) -> Self {
        match value {
            AArg::Covariate => AChoice::Covariate,
            AArg::Gaussian => AChoice::GaussianScore,
        }
    }
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input dataset (columns: time, status, covariates, optional z).
    #[arg(long)]
    csv: PathBuf,
    /// Outcome horizon t.
    #[arg(long = "time-point")]
    time_point: f64,
    /// Outcome definition.
    #[arg(long, default_value = "survival")]
    outcome: String,
    /// Take stratum labels from the named integer column (usually `z`).
    #[arg(long = "strata-col", conflicts_with = "strata_k")]
    strata_col: Option<String>,
    /// Stratify by binning a unit-interval covariate into k bins.
    #[arg(long = "strata-k")]
    strata_k: Option<usize>,
    /// 1-based covariate column (after the intercept) to bin with --strata-k.
    #[arg(long = "strata-x", default_value_t = 1, requires = "strata_k")]
    strata_x: usize,
    /// Do not prepend an intercept column to the design.
    #[arg(long = "no-intercept")]
    no_intercept: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    approach: ApproachArg,
    #[arg(long, value_enum, default_value_t = LinkArg::Identity)]
    link: LinkArg,
    /// Score weight function A.
    #[arg(long = "a", value_enum, default_value_t = AArg::Covariate)]
    a_choice: AArg,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    /// Write the fitted censoring curves as JSON.
    #[arg(long = "dump-censoring")]
    dump_censoring: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct PseudoArgs {
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct AsymptoticsArgs {
    /// Failure slope of the X = 1 group.
    #[arg(long)]
    p: f64,
    /// Failure slope of the X = 0 group.
    #[arg(long)]
    q: f64,
    /// Point-mass censoring time.
    #[arg(long)]
    s: f64,
    /// Contrast: b1 = slope (0,1), b0 = intercept (1,0).
    #[arg(long, default_value = "b1")]
    contrast: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario family (1, 2, or 3); runs its full default grid unless
    /// --config provides explicit cells.
    #[arg(long)]
    scenario: Option<u8>,
    /// JSON cell configuration (one object or an array of objects).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replications per cell (overrides config).
    #[arg(long)]
    reps: Option<usize>,
    /// Summary CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write long-format per-configuration rows for plotting.
    #[arg(long = "figure-data")]
    figure_data: Option<PathBuf>,
}

fn parse_outcome(text: &str, horizon: f64) -> Result<OutcomeSpec, Error> {
    let kind = match text {
        "survival" => OutcomeKind::SurvivalIndicator,
        "restricted" => OutcomeKind::RestrictedTime,
        other => {
            if let Some(cause) = other.strip_prefix("cause:") {
                OutcomeKind::CauseFailureIndicator(cause.parse().map_err(|_| {
                    Error::InvalidInput(format!("bad cause index in outcome `{other}`"))
                })?)
            } else if let Some(cause) = other.strip_prefix("lost:") {
                OutcomeKind::TimeLostToCause(cause.parse().map_err(|_| {
                    Error::InvalidInput(format!("bad cause index in outcome `{other}`"))
                })?)
            } else {
                return Err(Error::InvalidInput(format!(
                    "unknown outcome `{other}` (survival, cause:J, restricted, lost:J)"
                )));
            }
        }
    };
    OutcomeSpec::new(kind, horizon)
}

fn load_dataset(args: &DataArgs) -> Result<CsvDataset, Error> {
    let outcome = parse_outcome(&args.outcome, args.time_point)?;
    let strata = if let Some(name) = &args.strata_col {
        StrataSource::Column(name.clone())
    } else if let Some(k) = args.strata_k {
        if args.strata_x == 0 {
            return Err(Error::InvalidInput("--strata-x is 1-based".into()));
        }
        let covariate = if args.no_intercept {
            args.strata_x - 1
        } else {
            args.strata_x
        };
        StrataSource::Rule(Stratifier::UnitIntervalBins { covariate, bins: k })
    } else {
        StrataSource::None
    };
    let file = File::open(&args.csv)?;
    let mut parsed = read_csv_dataset(file, outcome, strata)?;
    if !args.no_intercept {
        let records = parsed
            .dataset
            .records()
            .iter()
            .map(|r| {
                let mut covariates = Vec::with_capacity(r.covariates.len() + 1);
                covariates.push(1.0);
                covariates.extend_from_slice(&r.covariates);
                ipcw::data::ObservedRecord {
                    covariates,
                    ..r.clone()
                }
            })
            .collect();
        parsed.dataset = ipcw::data::Dataset::new(
            records,
            parsed.dataset.outcome(),
            parsed.dataset.stratum_count(),
        )?;
    }
    Ok(parsed)
}

#[derive(Serialize)]
struct FitReport {
    approach: &'static str,
    link: Link,
    a_choice: AChoice,
    time_point: f64,
    n: usize,
    p: usize,
    beta: Vec<f64>,
    se: Vec<f64>,
    ci95: Vec<(f64, f64)>,
    cov: Vec<Vec<f64>>,
    converged: bool,
    iterations: usize,
    score_norm: f64,
}

fn run_fit(args: &FitArgs, format: Format) -> Result<(), Error> {
    let parsed = load_dataset(&args.data)?;
    let dataset = &parsed.dataset;
    if let Some(path) = &args.dump_censoring {
        let censoring = ipcw::fit_censoring(dataset)?;
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(file, censoring.curves())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let model = ModelSpec::new(args.link.into(), args.a_choice.into(), dataset.covariate_dim())?;
    let options = FitOptions {
        max_iter: args.max_iter,
        ..FitOptions::default()
    };
    let approach: Approach = args.approach.into();
    let result = fit(approach, dataset, &model, &options)?;
    let estimate = sandwich(&result)?;
    let ci95 = wald_ci(&result, &estimate, 0.95);
    let p = model.p;
    let report = FitReport {
        approach: approach.label(),
        link: model.link,
        a_choice: model.a_choice,
        time_point: args.data.time_point,
        n: dataset.len(),
        p,
        beta: result.beta.clone(),
        se: estimate.se_beta.clone(),
        ci95: ci95.clone(),
        cov: (0..p)
            .map(|r| (0..p).map(|c| estimate.covariance[(r, c)]).collect())
            .collect(),
        converged: result.converged,
        iterations: result.iterations,
        score_norm: result.score_norm,
    };
    match format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?
            );
        }
        Format::Csv => {
            println!("coefficient,beta,se,ci_low,ci_high");
            for j in 0..p {
                println!(
                    "b{j},{},{},{},{}",
                    report.beta[j], report.se[j], report.ci95[j].0, report.ci95[j].1
                );
            }
        }
    }
    Ok(())
}

fn run_pseudo(args: &PseudoArgs) -> Result<(), Error> {
    let parsed = load_dataset(&args.data)?;
    let censoring = ipcw::fit_censoring(&parsed.dataset)?;
    let set = ipcw::pseudo_observations(&parsed.dataset, &censoring)?;
    match &args.out {
        Some(path) => {
            let file = BufWriter::new(File::create(path)?);
            write_csv_with_column(file, &parsed, "pseudo_y", &set.values)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_csv_with_column(stdout.lock(), &parsed, "pseudo_y", &set.values)?;
        }
    }
    Ok(())
}

fn run_asymptotics(args: &AsymptoticsArgs, format: Format) -> Result<(), Error> {
    let contrast = match args.contrast.as_str() {
        "b1" => [0.0, 1.0],
        "b0" => [1.0, 0.0],
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown contrast `{other}` (expected b1 or b0)"
            )))
        }
    };
    let params = ExampleParams::new(args.p, args.q, args.s, contrast)?;
    let report = sigma_report(&params);
    let differences = phi_differences(&params)?;
    match format {
        Format::Json => {
            let mut value = serde_json::to_value(&report)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            value["phi_differences"] = serde_json::to_value(differences)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&value).map_err(|e| Error::InvalidInput(e.to_string()))?
            );
        }
        Format::Csv => {
            println!("quantity,ind,out,pse");
            println!("phi,{},{},{}", report.phi.ind, report.phi.out, report.phi.pse);
            println!(
                "sigma,{},{},{}",
                report.sigma.ind, report.sigma.out, report.sigma.pse
            );
            println!(
                "sigma_prime,{},{},{}",
                report.sigma_prime.ind, report.sigma_prime.out, report.sigma_prime.pse
            );
        }
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs, seed: Option<u64>) -> Result<(), Error> {
    let mut configs: Vec<ScenarioConfig> = match (&args.config, args.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::InvalidInput(e.to_string()))?;
            if value.is_array() {
                serde_json::from_value(value).map_err(|e| Error::InvalidInput(e.to_string()))?
            } else {
                vec![serde_json::from_value(value)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?]
            }
        }
        (None, Some(scenario)) => paper_grid(
            scenario,
            args.reps.unwrap_or(1000),
            seed.unwrap_or(20_240_801),
        )?,
        (None, None) => {
            return Err(Error::InvalidInput(
                "simulate needs --scenario or --config".into(),
            ))
        }
    };
    for config in &mut configs {
        if let Some(reps) = args.reps {
            config.replications = reps;
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
    }

    let summaries: Vec<CampaignSummary> = configs
        .iter()
        .map(|config| {
            eprintln!("running {} ({} reps)", config.cell_label(), config.replications);
            run_campaign(config)
        })
        .collect::<Result<_, _>>()?;

    match &args.out {
        Some(path) => {
            let file = BufWriter::new(File::create(path)?);
            write_summaries_csv(file, &summaries)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_summaries_csv(stdout.lock(), &summaries)?;
        }
    }
    if let Some(path) = &args.figure_data {
        let file = BufWriter::new(File::create(path)?);
        write_figure_csv(file, &summaries)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Fit(args) => run_fit(args, cli.format),
        Command::Pseudo(args) => run_pseudo(args),
        Command::Asymptotics(args) => run_asymptotics(args, cli.format),
        Command::Simulate(args) => run_simulate(args, cli.seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            match error {
                Error::Csv { .. } | Error::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
