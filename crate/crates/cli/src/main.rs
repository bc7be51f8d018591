mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rfne_core::eval::SweepParam;
use rfne_core::pipeline::{DataFormat, SplitMode};
use rfne_core::TextFeatureMode;

/// Popularity regression with a random forest and residual refinement.
#[derive(Debug, Parser)]
#[command(name = "rfne", version)]
pub struct Cli {
    /// Plain `key = value` file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Split a dataset, train a model, report test metrics.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Write predictions for every record as `id,prediction` CSV.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Score a trained model on a labeled dataset.
    #[command(args_override_self = true)]
    Evaluate(EvaluateArgs),
    /// Print the base forest's normalized feature importances.
    #[command(args_override_self = true)]
    Importance(ImportanceArgs),
    /// Train one model per grid value of `k` or `ty`.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Post count and mean label per title length.
    #[command(args_override_self = true)]
    TextLength(TextLengthArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of users whose posts receive a heavy-tailed multiplier.
    #[arg(long, default_value_t = 0.05)]
    pub tail_frac: f64,
    /// Log-space spread of the multiplier.
    #[arg(long, default_value_t = 0.5)]
    pub tail_scale: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DataFormat>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `tsv` or `jsonl`; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DataFormat>,
    /// File of `schema_name = file_column` lines for renamed headers.
    #[arg(long, value_name = "PATH")]
    pub column_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// `random` (Set-A) or `time` (Set-B).
    #[arg(long, default_value = "random", value_parser = parse_split)]
    pub split: SplitMode,
    /// Test-set size; defaults to about 1.8% of the dataset.
    #[arg(long)]
    pub test_count: Option<usize>,
    /// Seed for the random split and for training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Starting point for the settings below: default, accurate, thresholded or fast.
    #[arg(long, default_value = "default")]
    pub preset: String,
    /// Number of refinement stages.
    #[arg(long)]
    pub k: Option<usize>,
    /// Extreme-residual threshold as a fraction of the largest residual.
    #[arg(long)]
    pub ty: Option<f64>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub boost_rounds: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
    /// `textlen` or `wordcount` for the title and tag features.
    #[arg(long, default_value = "textlen", value_parser = parse_text_mode)]
    pub text_mode: TextFeatureMode,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Write the configuration and training trace as JSON.
    #[arg(long, value_name = "PATH")]
    pub summary_out: Option<PathBuf>,
    /// Also report a least-squares linear model on the same split.
    #[arg(long)]
    pub linear_baseline: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the metrics as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `k` or `ty`.
    #[arg(long, value_parser = parse_sweep_param)]
    pub param: SweepParam,
    /// Comma-separated values; defaults to 0..=6 for k and the standard thresholds for ty.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a whitespace-separated table for plotting.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TextLengthArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "textlen", value_parser = parse_text_mode)]
    pub text_mode: TextFeatureMode,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    s.parse().map_err(|e: rfne_core::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<SplitMode, String> {
    s.parse().map_err(|e: rfne_core::Error| e.to_string())
}

fn parse_text_mode(s: &str) -> Result<TextFeatureMode, String> {
    s.parse().map_err(|e: rfne_core::Error| e.to_string())
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: rfne_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                commands::EXIT_USAGE
            } else {
                0
            });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}
