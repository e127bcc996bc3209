use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use githeight::{cmd_decompose, cmd_dual, cmd_dual_constant, cmd_height, cmd_stability, cmd_verify, Flags, EXIT_ERROR};

/// GIT heights of zero-cycles and hyperplane arrangements over Q.
///
/// Exit codes: 0 success, 1 I/O or parse error, 2 unstable input, 3 verification failure.
#[derive(Parser)]
#[command(name = "githeight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Monte Carlo samples [default: 1000000]
    #[arg(long, global = true)]
    mc_samples: Option<u64>,
    /// Random seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Minimizer residual tolerance [default: 1e-8]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Finite-place search depth [default: 3]
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Emit JSON
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide (semi)stability
    Stability { path: PathBuf, #[command(flatten)] common: Common },
    /// Global height interval with per-place terms
    Height { path: PathBuf, #[command(flatten)] common: Common },
    /// Basis decomposition of a semistable cycle
    Decompose { path: PathBuf, #[command(flatten)] common: Common },
    /// Hyperplane form and height of the dual arrangement
    Dual { path: PathBuf, #[command(flatten)] common: Common },
    /// Duality constant for P^N
    DualConstant { n: usize, #[command(flatten)] common: Common },
    /// Run the theorem suite over a seeded family
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn flags(&self) -> Flags {
        Flags { mc_samples: self.mc_samples, seed: self.seed, tol: self.tol, depth: self.depth, json: self.json }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Stability { path, common } => cmd_stability(path, &common.flags()),
        Command::Height { path, common } => cmd_height(path, &common.flags()),
        Command::Decompose { path, common } => cmd_decompose(path, &common.flags()),
        Command::Dual { path, common } => cmd_dual(path, &common.flags()),
        Command::DualConstant { n, common } => cmd_dual_constant(*n, &common.flags()),
        Command::Verify { suite, common } => cmd_verify(suite, &common.flags()),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
