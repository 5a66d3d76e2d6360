//! Command-line front end for the Fenchel-Young variational inference
//! toolkit: prediction-map diagnostics, the mixture benchmark, entropic-index
//! sweeps, toy VAE training, and deformed-Gaussian tabulation.
//!
//! Exit codes: 0 on success, 1 on numeric failure, 2 on usage errors.

mod cmd_betagauss;
mod cmd_entmax;
mod cmd_gmm;
mod cmd_sweep;
mod cmd_vae;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "fyvi",
    version,
    about = "Fenchel-Young variational inference toolkit",
    propagate_version = true
)]
struct Cli {
    /// Master seed; identical invocations with the same seed are
    /// bit-for-bit reproducible.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for commands that write files (created if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Optional settings file of `key=value` lines; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a regularized prediction map on scores
    Entmax(EntmaxArgs),
    /// Run the mixture benchmark; write metrics, checkpoints, and plots
    Gmm(GmmArgs),
    /// Sweep the entropic index over the benchmark; write metrics and plots
    Sweep(SweepArgs),
    /// Train the toy variational autoencoder
    Vae(VaeArgs),
    /// Tabulate a deformed-Gaussian density and distribution function
    Betagauss(BetagaussArgs),
}

#[derive(Args)]
struct EntmaxArgs {
    /// Entropic index (a real > 0), or `hard` for the argmax map
    #[arg(long)]
    rho: Option<String>,

    /// Comma-separated scores to map
    #[arg(long, allow_hyphen_values = true)]
    scores: Option<String>,

    /// Draw N random score vectors of length K instead of --scores
    #[arg(long, num_args = 2, value_names = ["N", "K"])]
    random: Option<Vec<usize>>,

    /// Comma-separated target distribution; prints its loss at the scores
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,

    /// Compare analytic score gradients against central differences
    #[arg(long)]
    check_gradients: bool,
}

#[derive(Args)]
struct GmmArgs {
    /// Restrict to one method: std, sparse, or hard (default: all three)
    #[arg(long)]
    method: Option<String>,

    /// Entropic index override for the chosen method
    #[arg(long)]
    rho: Option<f64>,

    /// Number of benchmark instances, seeded master, master+1, ...
    #[arg(long)]
    seeds: Option<u64>,

    /// Fit iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated entropic indices (default: the standard grid)
    #[arg(long)]
    rhos: Option<String>,

    /// Number of benchmark instances, seeded master, master+1, ...
    #[arg(long)]
    seeds: Option<u64>,

    /// Fit iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct VaeArgs {
    /// Posterior entropic index (1, 1.5, or 2)
    #[arg(long)]
    rho: Option<f64>,

    /// Observation entropic index (1 dense, 2 sparse)
    #[arg(long)]
    rho_obs: Option<f64>,

    /// Regularizer weight
    #[arg(long)]
    beta: Option<f64>,

    /// Data source: `synthetic` or `idx`
    #[arg(long)]
    data: Option<String>,

    /// IDX image file (with --data idx)
    #[arg(long)]
    images: Option<PathBuf>,

    /// IDX label file (with --data idx)
    #[arg(long)]
    labels_file: Option<PathBuf>,

    /// Number of training images
    #[arg(long)]
    limit: Option<usize>,

    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct BetagaussArgs {
    /// Entropic index of the family member
    #[arg(long)]
    rho: Option<f64>,

    /// Location parameter
    #[arg(long, allow_negative_numbers = true)]
    loc: Option<f64>,

    /// Scale parameter (> 0)
    #[arg(long, allow_negative_numbers = true)]
    scale: Option<f64>,

    /// Number of tabulation knots (≥ 2)
    #[arg(long)]
    knots: Option<usize>,
}

/// A bad flag or settings value: reported on stderr with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

/// Shared, already-merged invocation context.
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub config_path: Option<PathBuf>,
    pub settings: Settings,
}

impl Context {
    fn new(cli: &Cli) -> anyhow::Result<Context> {
        let settings = Settings::load(cli.config.as_deref())?;
        let seed = settings.resolve(cli.seed, "seed", 0)?;
        let out = match &cli.out {
            Some(dir) => dir.clone(),
            None => settings
                .resolve_opt::<PathBuf>(None, "out")?
                .unwrap_or_else(|| PathBuf::from("runs")),
        };
        Ok(Context {
            seed,
            out,
            config_path: cli.config.clone(),
            settings,
        })
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let context = Context::new(&cli)?;
    match &cli.command {
        Command::Entmax(args) => cmd_entmax::run(&context, args),
        Command::Gmm(args) => cmd_gmm::run(&context, args),
        Command::Sweep(args) => cmd_sweep::run(&context, args),
        Command::Vae(args) => cmd_vae::run(&context, args),
        Command::Betagauss(args) => cmd_betagauss::run(&context, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
