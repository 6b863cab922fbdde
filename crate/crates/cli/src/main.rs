//! `impartial` command-line tool.
//!
//! Exit codes: 0 on success, 1 for I/O or data errors, 2 for usage or
//! contract errors (bad flags, schema problems, variant/mode mismatches).

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use impartial::decomposition::DecompositionMode;
use impartial::estimators::EstimatorVariant;
use impartial::harness::Method;
use impartial::metrics::ImpartialityMode;

#[derive(Parser, Debug)]
#[command(name = "impartial", version, about = "Impartial regression estimates and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the joint model; print coefficients and write predictions.
    Fit(FitArgs),
    /// Score predictions: DS, impartiality score, RMSE, group means.
    Audit(AuditArgs),
    /// Per-row decomposition of the full-model fitted values.
    Decompose(DecomposeArgs),
    /// Make external predictions impartial by treating them as suspect.
    Correct(CorrectArgs),
    /// Bias-injection k-fold experiment.
    Validate(ValidateArgs),
    /// Write a synthetic data set and its schema.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Schema file declaring column roles.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value = "full", value_parser = parse_variant)]
    variant: EstimatorVariant,
    /// Predictions CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the coefficient table as CSV.
    #[arg(long)]
    coef_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    input: Input,
    /// CSV of predictions to audit, row-aligned with the data.
    #[arg(long, conflicts_with = "variant")]
    predictions: Option<PathBuf>,
    /// Fit this variant in-sample and audit its predictions.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<EstimatorVariant>,
    /// Impartiality type for the IS (feo or seo).
    #[arg(long, value_parser = parse_is_mode)]
    mode: Option<ImpartialityMode>,
    #[command(flatten)]
    groups: GroupPair,
    /// Metrics CSV; the text report always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GroupPair {
    /// Group whose mean prediction is the minuend of DS.
    #[arg(long, requires = "negative")]
    positive: Option<String>,
    /// Group whose mean prediction is subtracted in DS.
    #[arg(long, requires = "positive")]
    negative: Option<String>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value = "total", value_parser = parse_decomposition)]
    mode: DecompositionMode,
    /// Components CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Which roles the non-sensitive covariates take during correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleView {
    /// As declared in the schema.
    Declared,
    /// All legitimate.
    Feo,
    /// All suspect.
    Seo,
}

#[derive(Args, Debug)]
struct CorrectArgs {
    #[command(flatten)]
    input: Input,
    /// External predictions CSV, row-aligned with the data.
    #[arg(long, required_unless_present = "trees")]
    predictions: Option<PathBuf>,
    /// Use out-of-bag predictions of this many bagged trees as the black box.
    #[arg(long, conflicts_with = "predictions")]
    trees: Option<usize>,
    #[arg(long, value_enum, default_value = "declared")]
    mode: RoleView,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corrected predictions CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Simple,
    Dag,
    Wine,
}

#[derive(Args, Debug)]
struct DagOptions {
    /// DAG without direct s -> y or w -> y effects.
    #[arg(long)]
    fair: bool,
    #[arg(long, default_value_t = 1)]
    ps: usize,
    #[arg(long, default_value_t = 2)]
    px: usize,
    #[arg(long, default_value_t = 1)]
    pw: usize,
    /// Rows to generate (dag only).
    #[arg(long, default_value_t = 2000)]
    rows: usize,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, requires = "schema", required_unless_present = "simulate")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    schema: Option<PathBuf>,
    /// Run on generated data instead of a CSV.
    #[arg(long, value_enum, conflicts_with = "data")]
    simulate: Option<Generator>,
    #[command(flatten)]
    dag: DagOptions,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Group whose responses are shifted; defaults to the last group label.
    #[arg(long)]
    bias_group: Option<String>,
    #[arg(long, default_value_t = 0.7)]
    bias_frac: f64,
    #[arg(long, default_value_t = 1.0)]
    bias_shift: f64,
    /// Comma-separated methods (ols, feo, seo, total, calders, marginal,
    /// trees, feo-trees, seo-trees).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// Use the bagged-tree line-up instead of the linear one.
    #[arg(long, conflicts_with = "methods")]
    black_box: bool,
    /// Experiment CSV; the text table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(value_enum)]
    generator: Generator,
    #[command(flatten)]
    dag: DagOptions,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Schema file to write; defaults to the data path with a `.schema`
    /// extension.
    #[arg(long)]
    schema: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<EstimatorVariant, String> {
    s.parse().map_err(|e: impartial::Error| e.to_string())
}

fn parse_is_mode(s: &str) -> Result<ImpartialityMode, String> {
    s.parse().map_err(|e: impartial::Error| e.to_string())
}

fn parse_decomposition(s: &str) -> Result<DecompositionMode, String> {
    s.parse().map_err(|e: impartial::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: impartial::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Audit(a) => commands::audit(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Correct(a) => commands::correct(a),
        Command::Validate(a) => commands::validate(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
