use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use smfft_core::SupportParams;

use crate::error::CliError;

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "SMFFT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Recover the sparse spectrum of a signal.
    Transform,
    /// Recover and compare against a dense transform (N ≤ 2^20).
    Verify,
    /// Sweep the grid size at fixed sparsity.
    BenchN,
    /// Sweep the sparsity at fixed grid size.
    BenchR,
    /// Run the built-in property suites.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Sparse FFT for signals with nonnegative sparse spectra.
#[derive(Debug, Clone, Parser)]
#[command(name = "smfft", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandKind,
    /// Signal description (JSON). Without it a random signal is generated.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Grid points per axis (for bench-n: the largest axis swept).
    #[arg(long)]
    pub m: Option<u64>,
    /// Number of dimensions.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Sparsity bound (defaults to 50, or the support size of --signal).
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 2)]
    pub rho: u64,
    /// Target failure probability.
    #[arg(long, default_value_t = 1e-4)]
    pub p: f64,
    /// Noise level (defaults to 1e-2, or the noise level of --signal).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long = "delta-ratio", default_value_t = 3.0)]
    pub delta_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Output format (csv for sweeps, json otherwise, by default).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Swap in a broken modular inverse to check that the self-test notices.
    #[arg(long, hide = true)]
    pub break_mod_inverse: bool,
}

/// Axis size used when `--m` is absent: `verify` stays under the dense
/// limit, `bench-n` sweeps up to N = 2^45 and `bench-r` sits at N ≈ 10^8.
pub fn default_axis(command: CommandKind) -> u64 {
    match command {
        CommandKind::Verify => 64,
        CommandKind::BenchN => 1 << 15,
        CommandKind::BenchR => 464,
        CommandKind::Transform | CommandKind::Selftest => 128,
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub signal_path: Option<PathBuf>,
    pub axis_size: u64,
    pub dims: usize,
    /// `r_bound` is only a default here; a signal file may override it.
    pub params: SupportParams,
    pub r_given: bool,
    pub eta_given: bool,
    pub seed: u64,
    pub trials: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub break_mod_inverse: bool,
}

impl RunConfig {
    /// Resolves defaults; `env_seed` is the value of [`SEED_ENV`], if set.
    pub fn from_cli(cli: Cli, env_seed: Option<String>) -> Result<Self, CliError> {
        let seed = match env_seed {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
            None => cli.seed,
        };
        if cli.trials == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        let format = cli.format.unwrap_or(match cli.command {
            CommandKind::BenchN | CommandKind::BenchR => Format::Csv,
            _ => Format::Json,
        });
        let params = SupportParams {
            r_bound: cli.r.unwrap_or(50),
            alpha: cli.alpha,
            delta: cli.delta,
            rho: cli.rho,
            p_fail: cli.p,
            mu: cli.mu,
            delta_ratio: cli.delta_ratio,
            eta: cli.eta.unwrap_or(1e-2),
        };
        params.validate()?;
        Ok(Self {
            command: cli.command,
            signal_path: cli.signal,
            axis_size: cli.m.unwrap_or_else(|| default_axis(cli.command)),
            dims: cli.d,
            params,
            r_given: cli.r.is_some(),
            eta_given: cli.eta.is_some(),
            seed,
            trials: cli.trials,
            output: cli.out,
            format,
            break_mod_inverse: cli.break_mod_inverse,
        })
    }

    /// Parses `args` (including the program name) and reads the seed
    /// override from the environment.
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_cli(cli, std::env::var(SEED_ENV).ok())
    }
}
