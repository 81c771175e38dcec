//! `gbll` — batch front-end for the GBLL toolkit.
//!
//! Exit codes: 0 success, 2 schema/usage error, 3 resource-cap breach,
//! 4 soundness violation.

mod commands;
mod instance;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    ResourceCap(String),
    #[error("{0}")]
    Unsound(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::ResourceCap(_) => 3,
            CliError::Unsound(_) => 4,
        }
    }
}

impl From<gbll_core::Error> for CliError {
    fn from(e: gbll_core::Error) -> Self {
        match e {
            gbll_core::Error::EnumerationCap { .. } => CliError::ResourceCap(e.to_string()),
            other => CliError::Schema(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gbll",
    version,
    about = "Brascamp-Lieb-like best constants, smoothing, and CR-generation converse bounds",
    after_help = "All randomized computations take an explicit --seed (default 0); \
                  outputs are deterministic. --threads is accepted for compatibility; \
                  the current implementation computes serially."
)]
struct Cli {
    /// Worker threads (accepted for compatibility; computation is serial).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Best constant d of a discrete instance, with d* and an optional smoothed value
    Gbll {
        file: PathBuf,
        /// Also compute the δ-smooth constant at this E1 radius
        #[arg(long)]
        delta: Option<f64>,
        /// Compute on the n-fold product instance (values report per letter)
        #[arg(long, default_value_t = 1)]
        tensor_n: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print entropic quantities in bits instead of nats
        #[arg(long)]
        bits: bool,
        /// Auxiliary cardinality cap for d* (default |X| + 1)
        #[arg(long)]
        u_cap: Option<usize>,
    },
    /// Mutual-information constant d* with a cap-sensitivity report
    Dstar {
        file: PathBuf,
        #[arg(long)]
        u_cap: Option<usize>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bits: bool,
    },
    /// δ-smooth constant (optionally a finite-n rate curve)
    Smooth {
        file: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        tensor_n: usize,
        /// Emit the per-letter curve for n = 1..=N instead
        #[arg(long, value_name = "N")]
        curve: Option<usize>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bits: bool,
        /// Allow smoothing measures above Q (never helps; reported)
        #[arg(long)]
        allow_inflation: bool,
    },
    /// Rate-region sweep: CSV of c_1..c_m, dstar, R_max
    Region {
        file: PathBuf,
        /// Weight grid, axes joined by 'x', each start:stop:count
        #[arg(long)]
        c_grid: Option<String>,
        /// Fixed message rates R_j (comma list; default zeros)
        #[arg(long)]
        rj: Option<String>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gaussian constants: F(Σ), C, d*, V
    Gaussian {
        file: PathBuf,
        /// Report F((1+ε)Σ) − F(Σ) for each ε in the comma list
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        bits: bool,
    },
    /// Certify a CR scheme against the omniscient-helper converse bound
    Certify {
        file: PathBuf,
        /// Also certify a smoothed instantiation at this E1 radius
        #[arg(long)]
        delta: Option<f64>,
        /// Weights c_j (comma list; default 2 for every terminal)
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build and exactly evaluate a CR scheme
    Simulate {
        file: PathBuf,
        /// Mix decoder rows with random tables at this weight
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Second-order converse ingredients: V, Wigner CDF, final bound
    SecondOrder {
        file: PathBuf,
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wigner matrix dimension (default: source dimension)
        #[arg(long)]
        wigner_dim: Option<usize>,
    },
    /// Quick internal consistency checks
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gbll {
            file,
            delta,
            tensor_n,
            restarts,
            seed,
            bits,
            u_cap,
        } => commands::cmd_gbll(&file, delta, tensor_n, restarts, seed, bits, u_cap),
        Command::Dstar {
            file,
            u_cap,
            restarts,
            seed,
            bits,
        } => commands::cmd_dstar(&file, u_cap, restarts, seed, bits),
        Command::Smooth {
            file,
            delta,
            tensor_n,
            curve,
            restarts,
            seed,
            bits,
            allow_inflation,
        } => commands::cmd_smooth(
            &file,
            delta,
            tensor_n,
            curve,
            restarts,
            seed,
            bits,
            allow_inflation,
        ),
        Command::Region {
            file,
            c_grid,
            rj,
            restarts,
            seed,
        } => commands::cmd_region(&file, c_grid.as_deref(), rj.as_deref(), restarts, seed),
        Command::Gaussian { file, eps, bits } => {
            commands::cmd_gaussian(&file, eps.as_deref(), bits)
        }
        Command::Certify {
            file,
            delta,
            weights,
            restarts,
            seed,
        } => commands::cmd_certify(&file, delta, weights.as_deref(), restarts, seed),
        Command::Simulate {
            file,
            perturb,
            seed,
        } => commands::cmd_simulate(&file, perturb, seed),
        Command::SecondOrder {
            file,
            d1,
            d2,
            samples,
            seed,
            wigner_dim,
        } => commands::cmd_second_order(&file, d1, d2, samples, seed, wigner_dim),
        Command::Selftest { seed } => commands::cmd_selftest(seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
