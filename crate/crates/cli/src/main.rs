//! `circsplit`: run signings, sweeps and checks, writing JSON/CSV reports.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "circsplit", version, about = "Spectrally balanced generator signings for circulant graphs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// RNG seed; falls back to CIRC_SPLIT_SEED, then 0.
    #[arg(long, global = true, env = "CIRC_SPLIT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Spectral verification mode; defaults to exact unless n > 10^6·k.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, global = true, default_value_t = 32)]
    pub oversample: u32,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub quad_tol: f64,
    #[arg(long, global = true)]
    pub restart_cap: Option<usize>,
    /// Record wall-clock seconds in reports (makes them non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Grid,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigArg {
    /// Constants scaled for k up to a few thousand.
    Desk,
    /// The asymptotic constants; signs everything +1 below k ≈ 20000.
    Asymptotic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Cartesian,
    Tensor,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyArg {
    /// Greedy family with gap 4·log6 K.
    Conformant,
    /// Greedy family with the gap given by --gap.
    Greedy,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sign the progression generators a + s·b, s = 1..k, on Z_n.
    Partition {
        #[arg(long, default_value_t = 0)]
        a: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
        #[arg(long)]
        k: usize,
        /// Group order; default is the smallest prime above 20kb + ak.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_enum, default_value_t = ConfigArg::Desk)]
        config: ConfigArg,
    },
    /// Partition over a list of k and seeds, one CSV row per run.
    Sweep {
        #[arg(long, default_value_t = 0)]
        a: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        /// Runs per k, with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// `prime20`, `4k+1` or `fixed:N`.
        #[arg(long, default_value = "prime20")]
        n_rule: String,
        #[arg(long, value_enum, default_value_t = ConfigArg::Desk)]
        config: ConfigArg,
    },
    /// Smallest worst-case cosine sum over all sign classes of a lacunary family.
    Lowerbound {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = FamilyArg::Conformant)]
        family: FamilyArg,
        #[arg(long, default_value_t = 4.0)]
        gap: f64,
        /// Grid points per period of the fastest generator.
        #[arg(long, default_value_t = 64)]
        density: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Skip the exhaustive grid search and only sample.
        #[arg(long)]
        sampled_only: bool,
    },
    /// Closed-form moments against quadrature on a lacunary family.
    Moments {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: u64,
        /// Family gap; defaults to p so the closed form applies.
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long, default_value_t = 8)]
        signings: usize,
    },
    /// Edge effective resistances of a circulant, or their n → ∞ limits.
    Er {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        gens: Vec<i64>,
        /// Compute the limit as n → ∞ instead of a finite graph.
        #[arg(long)]
        limit: bool,
    },
    /// Sign a Cartesian or tensor product of cycle powers factor by factor.
    Product {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
    },
    /// Re-derive every ratio in a report from its embedded signing.
    Verify {
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
