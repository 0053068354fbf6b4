#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::failure::Failure;

/// Biomechanical checks for 21-joint hand poses.
#[derive(Parser, Debug)]
#[command(name = "handbmc", version)]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a limit file from a pose corpus.
    FitLimits(FitArgs),
    /// Report the constraint losses of every pose as JSON lines.
    Evaluate(EvaluateArgs),
    /// Check that every pose is well formed and non-degenerate.
    Validate(ValidateArgs),
    /// Move every pose onto the feasible set.
    Project(ProjectArgs),
    /// Recover the scale-normalized root depth of 2.5D samples.
    SolveDepth(SolveDepthArgs),
    /// Compare tape gradients with central differences on random poses.
    GradCheck(GradCheckArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, value_name = "FILE")]
    pub poses: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Lower tail probability of the fitted intervals.
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Skip degenerate samples with a warning instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long, default_value = "m")]
    pub length_unit: String,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub poses: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub limits: Option<PathBuf>,
    /// JSON file of loss weights.
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// Replace terms of degenerate poses by a constant penalty.
    #[arg(long)]
    pub lenient: bool,
    /// Include the 21x3 gradient in every line.
    #[arg(long)]
    pub gradient: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub poses: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long, value_name = "FILE")]
    pub poses: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub limits: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Weight of the squared distance to the input pose.
    #[arg(long)]
    pub anchor: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveDepthArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// `fx,fy,cx,cy` or the nine row-major entries of K.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub camera: Option<Vec<f64>>,
    /// Joint pair whose distance fixes the scale, as `a,b`.
    #[arg(long, value_delimiter = ',')]
    pub reference: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct GradCheckArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Central-difference step.
    #[arg(long)]
    pub step: Option<f64>,
    /// Largest accepted relative error.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Corrupt the analytic gradient (negative control for the checker).
    #[arg(long, hide = true)]
    pub inject_gradient_bug: bool,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::FitLimits(a) => commands::fit_limits(a, &config),
        Command::Evaluate(a) => commands::evaluate(a, &config),
        Command::Validate(a) => commands::validate(a),
        Command::Project(a) => commands::project(a, &config),
        Command::SolveDepth(a) => commands::solve_depth(a, &config),
        Command::GradCheck(a) => commands::grad_check(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { failure::EXIT_INPUT } else { failure::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
