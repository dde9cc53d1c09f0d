use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parea_cli::*;
use parea_core::{Parallelism, Window};

/// Drifted anisotropic least-gradient solver and checkers.
///
/// Exit status: 0 certified or passing, 2 completed without that verdict,
/// 1 input error. The thread count follows RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(name = "parea", version)]
struct Cli {
    /// Seed of randomized estimates.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run every kernel on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and certify; writes u.csv, N.csv, certificate.json, gap_history.csv.
    Solve {
        problem: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Certify a given primal/dual pair.
    Certify {
        problem: PathBuf,
        u: PathBuf,
        n: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Super-level sets, perimeters and local minimality verdicts.
    Levelsets {
        problem: PathBuf,
        u: PathBuf,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Window as i0,j0,w,h.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        window: Option<Vec<usize>>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Barrier check at every boundary cell.
    Barrier {
        problem: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive quantized minimization on tiny grids.
    Oracle {
        problem: PathBuf,
        /// Comma-separated increasing levels.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        levels: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        seed: cli.seed,
        par: if cli.sequential { Parallelism::Sequential } else { Parallelism::default() },
    };
    let r = match &cli.cmd {
        Cmd::Solve { problem, out } => cmd_solve(problem, out, &opts),
        Cmd::Certify { problem, u, n, out } => cmd_certify(problem, u, n, out.as_deref(), &opts),
        Cmd::Levelsets { problem, u, lambdas, window, out } => {
            let w = window.as_ref().map(|w| Window::new(w[0], w[1], w[2], w[3]));
            cmd_levelsets(problem, u, lambdas, w, out, &opts)
        }
        Cmd::Barrier { problem, radius, out } => cmd_barrier(problem, *radius, out.as_deref(), &opts),
        Cmd::Oracle { problem, levels, out } => cmd_oracle(problem, levels, out.as_deref(), &opts),
    };
    if let Err(e) = &r {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&r))
}
