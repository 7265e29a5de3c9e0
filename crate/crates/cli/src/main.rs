//! `isolab` command-line front end.
//!
//! Exit status: 0 when every asserted property holds, 1 on a property
//! failure (the failing report path is printed), 2 on invalid input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "isolab",
    version,
    about = "Numerical experiments for isoperimetric inequalities with density |x|^p"
)]
struct Cli {
    /// Directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; defaults to json.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Svg,
    Md,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Svg => "svg",
            Format::Md => "md",
        }
    }
}

#[derive(Debug, Subcommand, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Centered-ball equality sweep.
    BallCheck(BallCheckArgs),
    /// Inequality reports over families and a p grid.
    Sweep(SweepArgs),
    /// Decay study of the counterexample family.
    Counterexample(CounterexampleArgs),
    /// Translated-ball variations and the classification table.
    Variation(VariationArgs),
    /// Euler-Lagrange curves: integrate one start or shoot for closed orbits.
    Ode(OdeArgs),
    /// Step-by-step proof-chain validation.
    Chain(ChainArgs),
    /// One-dimensional inequality for a union of intervals.
    Onedim(OnedimArgs),
    /// Run a JSON config `{"command", "params", "format", "out"}`.
    #[serde(skip)]
    Run { config: PathBuf },
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BallCheckArgs {
    /// Dimensions.
    #[arg(long, required = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// start stop count
    #[arg(long, num_args = 3, allow_negative_numbers = true, required = true)]
    pub p_range: Vec<f64>,
    /// Radii; defaults to 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub r: Vec<f64>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, required = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// start stop count
    #[arg(long, num_args = 3, allow_negative_numbers = true, required = true)]
    pub p_range: Vec<f64>,
    /// Families to sweep; defaults to all three.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub families: Vec<String>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 3)]
    #[serde(default = "three")]
    pub n: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Strictly decreasing list, at least three values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
}

fn three() -> usize {
    3
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VariationArgs {
    #[arg(long, required = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub p: Vec<f64>,
    /// start stop count; alternative to --p.
    #[arg(long, num_args = 3, allow_negative_numbers = true)]
    #[serde(default)]
    pub p_range: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub r: Vec<f64>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeMode {
    Integrate,
    Shoot,
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OdeArgs {
    #[arg(value_enum)]
    pub mode: OdeMode,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Start point (d, 0) on the positive axis.
    #[arg(long)]
    pub d: f64,
    /// Generalized curvature; defaults to the circle value.
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// lo hi count for shooting.
    #[arg(long, num_args = 3, allow_negative_numbers = true)]
    #[serde(default)]
    pub k_range: Vec<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Theorem9,
    Interpolation,
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ChainArgs {
    #[arg(value_enum)]
    pub kind: ChainKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// JSON file with a full domain description; overrides the shape flags.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// constant, perturbed or random-trig; defaults to random-trig.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub axis: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OnedimArgs {
    /// Intervals `a:b` separated by commas; endpoints may be decimals or fractions.
    #[arg(long, allow_hyphen_values = true)]
    pub intervals: String,
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
}

/// Config file form of a run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    command: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

fn load_config(path: &PathBuf) -> anyhow::Result<(Command, Option<Format>, Option<PathBuf>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if cfg.command == "run" {
        bail!("a config cannot invoke `run`");
    }
    let cmd: Command = serde_json::from_value(serde_json::json!({
        "command": cfg.command,
        "params": cfg.params,
    }))
    .with_context(|| format!("invalid params in {}", path.display()))?;
    Ok((cmd, cfg.format, cfg.out))
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(val) = std::env::var("ISOLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = val
        .trim()
        .parse()
        .ok()
        .filter(|t| *t >= 1)
        .with_context(|| format!("ISOLAB_THREADS must be a positive integer, got {val:?}"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prepared = configure_threads().and_then(|_| match cli.command {
        Command::Run { config } => {
            let (cmd, format, out) = load_config(&config)?;
            Ok((cmd, cli.format.or(format), cli.out.or(out)))
        }
        cmd => Ok((cmd, cli.format, cli.out)),
    });
    let result = prepared.and_then(|(cmd, format, out)| {
        let out = out.unwrap_or_else(|| PathBuf::from("isolab-out"));
        commands::run(&cmd, format.unwrap_or(Format::Json), &out)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("report: {}", outcome.path.display());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("property failure: see {}", outcome.path.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
