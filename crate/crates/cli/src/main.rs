mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 success, 1 failed invariant check, 2 usage, 3 I/O,
/// 4 numerical abort.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<chartae::Error> for CliError {
    fn from(e: chartae::Error) -> Self {
        use chartae::Error as E;
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e @ (E::Io(_) | E::Json(_) | E::Format(_)) => CliError::Io(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "chartae", version, about = "Chart autoencoders for denoising manifold data")]
pub struct Cli {
    /// TOML file with run settings; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Start from batch 512, learning rate 3e-6, weight decay 0.3.
    #[arg(long, global = true)]
    pub paper_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ManifoldArgs {
    /// sphere or torus.
    #[arg(long)]
    pub manifold: Option<String>,
    /// Sphere radius.
    #[arg(long = "r", alias = "radius")]
    pub radius: Option<f64>,
    /// Torus core radius.
    #[arg(long)]
    pub major: Option<f64>,
    /// Torus tube radius.
    #[arg(long)]
    pub minor: Option<f64>,
    /// Ambient dimension D.
    #[arg(long = "dim", alias = "D")]
    pub dim: Option<usize>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct NoiseArgs {
    /// clean, normal, general or gaussian.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct TrainArgs {
    #[arg(long = "batch", alias = "batch-size")]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub wd: Option<f64>,
    /// Epoch count; clears the step floor unless --steps is also given.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Minimum number of optimizer steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Number of charts C.
    #[arg(long)]
    pub charts: Option<usize>,
    /// Hidden width of every network.
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a paired clean/noisy dataset.
    Generate {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the pairs as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train a chart autoencoder on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss per epoch as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Fit the oracle atlas codes instead of the reconstruction loss; the
        /// chart count follows the atlas.
        #[arg(long)]
        distill: bool,
        #[command(flatten)]
        manifold: ManifoldArgs,
        /// Tube half-width covered by the distillation atlas.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Squared test error of a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Decode with the highest-weight chart only.
        #[arg(long)]
        hard: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment sweep.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Check the geometric and atlas invariants numerically.
    OracleCheck {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long)]
        q: Option<f64>,
        /// Tube half-width for the atlas checks.
        #[arg(long)]
        atlas_q: Option<f64>,
        /// Check a saved atlas instead of building one.
        #[arg(long)]
        atlas: Option<PathBuf>,
        /// Save the atlas that was checked.
        #[arg(long)]
        save_atlas: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SweepKind {
    /// Error against training-set size, with the log-log slope.
    N(SweepArgs),
    /// Error against noise level for each noise kind.
    Noise(SweepArgs),
    /// Error against ambient dimension.
    #[command(name = "D")]
    D(SweepArgs),
    /// Error against chart count.
    Charts(SweepArgs),
}

impl SweepKind {
    pub fn split(&self) -> (&'static str, &SweepArgs) {
        match self {
            SweepKind::N(a) => ("n", a),
            SweepKind::Noise(a) => ("noise", a),
            SweepKind::D(a) => ("D", a),
            SweepKind::Charts(a) => ("charts", a),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Training-set sizes for the n sweep.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Training-set size for the other sweeps.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub chart_counts: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the noise-free reference run.
    #[arg(long)]
    pub no_reference: bool,
    #[arg(long)]
    pub hard: bool,
    /// Directory for the CSV and JSON outputs.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chartae: {e}");
            ExitCode::from(e.code())
        }
    }
}
