use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "oscent", version, about = "Entanglement of disordered harmonic oscillator lattices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "oscent-out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true, env = "OSCENT_THREADS")]
    pub threads: Option<usize>,
    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated Rényi orders, each in (0, 1].
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Option<Vec<f64>>,
    /// Correlator-bound exponent in (0, 1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Decay-fit exponent in (0, 1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Replaces every tolerance of `verify`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Ground-state Rényi entropies, von Neumann entropy and logarithmic negativity.
    GroundEntropy(SingleOpts),
    /// Half-Rényi bounds for single-excitation eigenstates.
    ExcitedEntropy(ExcitedOpts),
    /// Bound for the uniform mixture of single-excitation states.
    EnsembleBound(SingleOpts),
    /// Correlator table, correlator bound and pooled decay fit.
    Correlators(SingleOpts),
    /// Disorder Monte Carlo over all realizations and regions of the config.
    Scan,
    /// Checks the closed-form identities against independent quadrature.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SingleOpts {
    /// Disorder realization to evaluate (ignored for custom matrices).
    #[arg(long, default_value_t = 0)]
    pub realization: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ExcitedOpts {
    #[command(flatten)]
    pub single: SingleOpts,
    /// Only these excitation indices (0-based, comma-separated); default follows the config, or all.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Skip the formula-versus-brute-force rows.
    #[arg(long)]
    pub skip_bruteforce: bool,
}
