//! Command-line front end.
//!
//! `simulate` and `roc` run a configured Monte-Carlo experiment; `fit`,
//! `diagnose` and `prescreen` work on a CSV dataset. Each command writes a
//! CSV table to `--out` and a JSON manifest next to it. The exit status is
//! nonzero when any cell or row failed; partial results are still written.

pub mod commands;
pub mod config;
pub mod data;
pub mod experiment;
pub mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use self::config::{preset, ExperimentConfig, MethodSpec};
use self::report::{manifest_path, Manifest, Timing, Versions};
use crate::error::{Error, Result};
use crate::rng::DEFAULT_SEED;
use crate::simgen::generate;
use crate::transform::{QChoice, Tau, TransformSpec};
use crate::tuning::{Criterion, PenaltyKind};

#[derive(Debug, Parser)]
#[command(name = "prodreg", version, about = "Sparse regression with orthogonal-decomposition pre-processing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo support-recovery table for a configured grid.
    Simulate(ExperimentArgs),
    /// Mean ROC curves along the regularization path.
    Roc(ExperimentArgs),
    /// Fit and tune on a CSV dataset.
    Fit(FitArgs),
    /// Irrepresentable-condition and signal-strength diagnostics.
    Diagnose(DiagnoseArgs),
    /// Keep the predictors with the strongest marginal association.
    Prescreen(PrescreenArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed for all randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "PRODREG_THREADS", default_value_t = 1)]
    pub jobs: usize,
    /// Output CSV; the manifest goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Transforms, comma separated: none, licm, rgz, rgb, puffer, trim.
    #[arg(long, value_delimiter = ',')]
    pub transform: Vec<String>,
    /// Number of removed directions for licm/rgz/rgb: an integer or `auto`.
    #[arg(long)]
    pub q: Option<String>,
    /// Penalties, comma separated: lasso, scad, mcp, adalasso.
    #[arg(long, value_delimiter = ',')]
    pub penalty: Vec<String>,
    /// Tuning criteria, comma separated: cv, bic, gic.
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub methods: MethodArgs,
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: table1 … table7, figure1.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub methods: MethodArgs,
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column (default: the first column).
    #[arg(long)]
    pub response: Option<String>,
    /// Keep only this many predictors, ranked by marginal |t|, before fitting.
    #[arg(long)]
    pub prescreen: Option<usize>,
    /// Fit at this λ instead of tuning.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = crate::tuning::DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = crate::solver::DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub methods: MethodArgs,
    /// Input CSV; alternatively simulate one replicate of a config cell.
    #[arg(long, conflicts_with_all = ["config", "preset"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Grid cell of the config to simulate.
    #[arg(long, default_value_t = 0)]
    pub cell: usize,
    /// `truth` (simulated data) or a comma-separated list of columns.
    #[arg(long, default_value = "truth")]
    pub support: String,
    /// Noise level for the signal-strength bounds (default: the model's
    /// noise level for simulated data, 1 otherwise).
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrescreenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: Option<String>,
    /// Number of predictors to keep.
    #[arg(long)]
    pub keep: usize,
}

pub fn parse_q(text: &str) -> Result<QChoice> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(QChoice::Auto);
    }
    text.parse()
        .map(QChoice::Fixed)
        .map_err(|_| Error::arg(format!("--q expects an integer or `auto`, got `{text}`")))
}

pub fn parse_transform(name: &str, q: QChoice) -> Result<TransformSpec> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "none" | "lasso" => TransformSpec::None,
        "licm" => TransformSpec::Licm { q },
        "rgz" => TransformSpec::Rgz { q, seed: 0 },
        "rgb" => TransformSpec::Rgb { q, seed: 0 },
        "puffer" => TransformSpec::Puffer,
        "trim" => TransformSpec::Trim { tau: Tau::Median },
        other => return Err(Error::arg(format!("unknown transform `{other}`"))),
    })
}

fn with_q(spec: TransformSpec, q: QChoice) -> TransformSpec {
    match spec {
        TransformSpec::Licm { .. } => TransformSpec::Licm { q },
        TransformSpec::Rgz { seed, .. } => TransformSpec::Rgz { q, seed },
        TransformSpec::Rgb { seed, .. } => TransformSpec::Rgb { q, seed },
        other => other,
    }
}

fn distinct<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

impl MethodArgs {
    fn q(&self) -> Result<Option<QChoice>> {
        self.q.as_deref().map(parse_q).transpose()
    }

    fn transforms(&self) -> Result<Vec<TransformSpec>> {
        let q = self.q()?.unwrap_or_default();
        self.transform.iter().map(|t| parse_transform(t, q)).collect()
    }

    fn penalties(&self) -> Result<Vec<PenaltyKind>> {
        self.penalty.iter().map(|p| p.parse()).collect()
    }

    fn criteria(&self) -> Result<Vec<Criterion>> {
        self.criterion.iter().map(|c| c.parse()).collect()
    }

    /// Applies the overrides: methods become the product of the chosen (or
    /// configured) transforms and penalties.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let mut transforms = self.transforms()?;
        let mut penalties = self.penalties()?;
        if !transforms.is_empty() || !penalties.is_empty() || self.q.is_some() {
            if transforms.is_empty() {
                transforms = distinct(cfg.methods.iter().map(|m| m.transform));
            }
            if penalties.is_empty() {
                penalties = distinct(cfg.methods.iter().map(|m| m.penalty));
            }
            if penalties.is_empty() {
                penalties.push(PenaltyKind::Lasso);
            }
            if let Some(q) = self.q()? {
                transforms = transforms.into_iter().map(|t| with_q(t, q)).collect();
            }
            cfg.methods = transforms
                .iter()
                .flat_map(|&t| penalties.iter().map(move |&p| MethodSpec::new(t, p)))
                .collect();
        }
        let criteria = self.criteria()?;
        if !criteria.is_empty() {
            cfg.criteria = criteria;
        }
        Ok(())
    }
}

fn load_config(config: &Option<PathBuf>, preset_name: &Option<String>) -> Result<ExperimentConfig> {
    match (config, preset_name) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::Config("pass --config PATH or --preset NAME".into())),
    }
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(&args.config, &args.preset)?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    args.methods.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs<C: Serialize, S: Serialize>(
    command: &'static str,
    common: &Common,
    seed: u64,
    config: C,
    table: &report::Table,
    errors: Vec<String>,
    summary: S,
    started: Instant,
) -> Result<()> {
    table.save(&common.out)?;
    let manifest = Manifest {
        command,
        seed,
        versions: Versions::default(),
        config,
        outputs: vec![common.out.display().to_string()],
        errors,
        summary,
        timing: Timing {
            wall_time_seconds: started.elapsed().as_secs_f64(),
            jobs: common.jobs,
        },
    };
    manifest.save(&manifest_path(&common.out))
}

#[derive(Serialize)]
struct Counts {
    rows: usize,
    failed_rows: usize,
}

fn cmd_experiment(args: &ExperimentArgs, roc: bool) -> Result<bool> {
    let started = Instant::now();
    let cfg = experiment_config(args)?;
    let (table, errors) = if roc {
        let rows = experiment::with_jobs(args.common.jobs, || experiment::roc_rows(&cfg));
        let errors: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
        (experiment::roc_table(&cfg.name, &rows), errors)
    } else {
        let rows = experiment::with_jobs(args.common.jobs, || experiment::simulate_rows(&cfg));
        let errors = distinct_errors(rows.iter().filter_map(|r| r.error.clone()));
        (experiment::results_table(&cfg.name, &rows), errors)
    };
    let counts = Counts {
        rows: table.rows.len(),
        failed_rows: table.rows.iter().filter(|r| r.last().is_some_and(|s| s != "ok")).count(),
    };
    let ok = errors.is_empty();
    let command = if roc { "roc" } else { "simulate" };
    write_outputs(command, &args.common, cfg.seed, &cfg, &table, errors, counts, started)?;
    Ok(ok)
}

fn distinct_errors(errors: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in errors {
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

fn single<T: Copy>(items: Vec<T>, default: T, flag: &str) -> Result<T> {
    match items.len() {
        0 => Ok(default),
        1 => Ok(items[0]),
        _ => Err(Error::arg(format!("{flag} takes a single value here"))),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<bool> {
    let started = Instant::now();
    let data = data::load_dataset(&args.data, args.response.as_deref())?;
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let opts = commands::FitOptions {
        transform: single(args.methods.transforms()?, TransformSpec::None, "--transform")?,
        penalty: single(args.methods.penalties()?, PenaltyKind::Lasso, "--penalty")?,
        criterion: single(args.methods.criteria()?, Criterion::Bic, "--criterion")?,
        lambda: args.lambda,
        prescreen: args.prescreen,
        folds: args.folds,
        seed,
        path: crate::tuning::PathSettings {
            n_lambda: args.n_lambda,
            ratio: None,
        },
        solver: Default::default(),
    };
    let (table, summary) = experiment::with_jobs(args.common.jobs, || commands::run_fit(&data, &opts))?;
    #[derive(Serialize)]
    struct Echo<'a> {
        data: &'a Path,
        response: &'a str,
        options: &'a commands::FitOptions,
    }
    let echo = Echo {
        data: &args.data,
        response: &data.response_name,
        options: &opts,
    };
    write_outputs("fit", &args.common, seed, echo, &table, Vec::new(), summary, started)?;
    Ok(true)
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<bool> {
    let started = Instant::now();
    let seed = args.common.seed.unwrap_or(DEFAULT_SEED);
    let (source, data, truth, model_sigma) = match &args.data {
        Some(path) => (path.display().to_string(), data::load_dataset(path, args.response.as_deref())?, None, None),
        None => {
            let cfg = load_config(&args.config, &args.preset)?;
            let cell = cfg
                .grid
                .get(args.cell)
                .ok_or_else(|| Error::Config(format!("config has no grid cell {}", args.cell)))?;
            let inst = generate(cell.model, &cell.params(), seed)?;
            let source = format!("{}:cell{}", cfg.name, args.cell);
            let sigma = cell.model.noise_sd();
            (source, commands::dataset_from_instance(&inst), Some(inst.support_true), Some(sigma))
        }
    };
    let support = if args.support.eq_ignore_ascii_case("truth") {
        truth.ok_or_else(|| Error::arg("`--support truth` needs simulated data; list the columns instead"))?
    } else {
        commands::parse_support(&args.support, &data)?
    };
    let mut transforms = args.methods.transforms()?;
    if transforms.is_empty() {
        let q = args.methods.q()?.unwrap_or_default();
        transforms = ["none", "licm", "rgz", "rgb"].iter().map(|t| parse_transform(t, q)).collect::<Result<_>>()?;
    }
    let sigma = args.sigma.or(model_sigma).unwrap_or(1.0);
    let (table, failures) = experiment::with_jobs(args.common.jobs, || {
        commands::run_diagnose(&source, &data, &support, &transforms, sigma, seed)
    });
    #[derive(Serialize)]
    struct Echo<'a> {
        source: &'a str,
        support: Vec<&'a str>,
        transforms: &'a [TransformSpec],
        sigma: f64,
    }
    let echo = Echo {
        source: &source,
        support: support.iter().map(|&j| data.predictor_names[j].as_str()).collect(),
        transforms: &transforms,
        sigma,
    };
    let errors: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| r.last().filter(|s| s.starts_with("error")).cloned())
        .collect();
    let counts = Counts {
        rows: table.rows.len(),
        failed_rows: failures,
    };
    write_outputs("diagnose", &args.common, seed, echo, &table, errors, counts, started)?;
    Ok(failures == 0)
}

fn cmd_prescreen(args: &PrescreenArgs) -> Result<bool> {
    let started = Instant::now();
    let data = data::load_dataset(&args.data, args.response.as_deref())?;
    let (reduced, ranking) = commands::run_prescreen(&data, args.keep)?;
    data::save_dataset(&args.common.out, &reduced)?;
    #[derive(Serialize)]
    struct Echo<'a> {
        data: &'a Path,
        response: &'a str,
        keep: usize,
    }
    let manifest = Manifest {
        command: "prescreen",
        seed: args.common.seed.unwrap_or(DEFAULT_SEED),
        versions: Versions::default(),
        config: Echo {
            data: &args.data,
            response: &data.response_name,
            keep: args.keep,
        },
        outputs: vec![args.common.out.display().to_string()],
        errors: Vec::new(),
        summary: ranking,
        timing: Timing {
            wall_time_seconds: started.elapsed().as_secs_f64(),
            jobs: args.common.jobs,
        },
    };
    manifest.save(&manifest_path(&args.common.out))?;
    Ok(true)
}

/// Runs a parsed command. `Ok(false)` means outputs were written but some
/// cell failed.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate(a) => cmd_experiment(a, false),
        Command::Roc(a) => cmd_experiment(a, true),
        Command::Fit(a) => cmd_fit(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Prescreen(a) => cmd_prescreen(a),
    }
}

/// Entry point of the `prodreg` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("prodreg: {e}");
            ExitCode::from(2)
        }
    }
}
