//! `ggm` — generalized Gaussian entropy-model experiments from the shell.
//!
//! Every command writes its data outputs plus a `<out>.manifest.json`
//! sidecar recording the exact invocation, so runs can be reproduced
//! byte for byte. Exit codes: 0 ok, 2 flag error, 3 input format error,
//! 4 numeric non-convergence, 5 stream corruption.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod commands;
mod manifest;

#[derive(Parser)]
#[command(
    name = "ggm",
    version,
    about = "Generalized Gaussian entropy modeling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ROI latent file (foreground/background mix).
    Synth(SynthArgs),
    /// Fit one model family to a latent file by maximum likelihood.
    Fit(FitArgs),
    /// Fit several families and compare NLL, KL, and coded bits/sample.
    Compare(CompareArgs),
    /// Quantize a latent file and range-code it into a bitstream.
    Encode(EncodeArgs),
    /// Decode a bitstream back to symbols (verifies checksum and count).
    Decode(DecodeArgs),
    /// Sweep the train/test rate mismatch over a scale grid.
    Mismatch(MismatchArgs),
    /// Check CDF gradients against global finite differences per step size.
    Gradcheck(GradcheckArgs),
    /// Tabulate pdf/cdf curves over a value grid for parameter sets.
    Pdfplot(PdfplotArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long = "roi-fraction", default_value_t = 0.3)]
    roi_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Foreground scale and shape.
    #[arg(long = "roi-alpha", default_value_t = 2.0)]
    roi_alpha: f64,
    #[arg(long = "roi-beta", default_value_t = 1.0)]
    roi_beta: f64,
    /// Background scale and shape.
    #[arg(long = "bg-alpha", default_value_t = 0.15)]
    bg_alpha: f64,
    #[arg(long = "bg-beta", default_value_t = 2.0)]
    bg_beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ggm,
    Gaussian,
    Laplace,
    Logistic,
    Gmm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MuModeArg {
    Median,
    Mean,
    Gradient,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Continuous,
    Discrete,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ggm)]
    family: FamilyArg,
    /// Mixture component count when --family gmm.
    #[arg(long = "gmm-k", default_value_t = 3)]
    gmm_k: usize,
    #[arg(long = "max-steps", default_value_t = 2000)]
    max_steps: usize,
    #[arg(long = "learning-rate", default_value_t = 1e-2)]
    learning_rate: f64,
    #[arg(long = "mu-mode", value_enum, default_value_t = MuModeArg::Median)]
    mu_mode: MuModeArg,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Continuous)]
    objective: ObjectiveArg,
    /// Histogram bins for the KL score.
    #[arg(long, default_value_t = 201)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fitted parameters (JSON) destination.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV row (family, params, NLL, KL).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated family list.
    #[arg(long, default_value = "ggm,gaussian,laplace,logistic,gmm")]
    family: String,
    #[arg(long = "gmm-k", default_value_t = 3)]
    gmm_k: usize,
    #[arg(long, default_value_t = 201)]
    bins: usize,
    #[arg(long = "s-min", default_value_t = -255, allow_negative_numbers = true)]
    s_min: i32,
    #[arg(long = "s-max", default_value_t = 255)]
    s_max: i32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Model parameters JSON (as written by `fit`); alternative to the
    /// explicit --family/--mu/--alpha/--beta flags.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ggm)]
    family: FamilyArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long = "s-min", default_value_t = -255, allow_negative_numbers = true)]
    s_min: i32,
    #[arg(long = "s-max", default_value_t = 255)]
    s_max: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundMode {
    None,
    Fixed,
    Dynamic,
}

#[derive(Args)]
struct MismatchArgs {
    /// Comma-separated scale grid, e.g. 0.03,0.08,0.3.
    #[arg(long, default_value = "0.01,0.03,0.05,0.08,0.11,0.2,0.3,0.5,1.0")]
    grid: String,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    zeta: f64,
    /// Scale lower bound applied before the sweep: none, fixed (0.11), or
    /// dynamic (ζ·β).
    #[arg(long, value_enum, default_value_t = BoundMode::None)]
    bound: BoundMode,
    #[arg(long, default_value_t = 200_000)]
    n: usize,
    #[arg(long = "n-noise", default_value_t = 16)]
    n_noise: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of random (y, μ, α, β) tuples.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated finite-difference step sizes.
    #[arg(long = "eps-fd", default_value = "1e-3,1e-5,1e-7")]
    eps_fd: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PdfplotArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    /// Comma-separated scale values.
    #[arg(long, default_value = "0.5,1,2")]
    alpha: String,
    /// Comma-separated shape values.
    #[arg(long, default_value = "0.5,1,2,4")]
    beta: String,
    /// Value grid start:stop:step.
    #[arg(long, default_value = "-6:6:0.05", allow_hyphen_values = true)]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a, &argv, started),
        Command::Fit(a) => commands::fit(a, &argv, started),
        Command::Compare(a) => commands::compare(a, &argv, started),
        Command::Encode(a) => commands::encode(a, &argv, started),
        Command::Decode(a) => commands::decode(a, &argv, started),
        Command::Mismatch(a) => commands::mismatch(a, &argv, started),
        Command::Gradcheck(a) => commands::gradcheck(a, &argv, started),
        Command::Pdfplot(a) => commands::pdfplot(a, &argv, started),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error: code={} kind={} msg={:?}",
                e.code(),
                e.kind(),
                e.to_string()
            );
            ExitCode::from(e.code())
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|f| f.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
