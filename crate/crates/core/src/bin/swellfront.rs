use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swellfront::convergence::StudyMode;
use swellfront::harness::{self, RunOptions};
use swellfront::SolverKind;

/// Simulate and audit a one-dimensional swelling free-boundary problem.
///
/// Exit codes: 0 ok, 1 verification/comparison/sweep failure, 2 usage or
/// config error, 3 assumption violated, 4 solver error, 5 run directory
/// tampered or incomplete. SWELLFRONT_SEED is reserved and ignored.
#[derive(Parser)]
#[command(name = "swellfront", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "frontfix", value_parser = parse_solver)]
        solver: SolverKind,
        /// Profile snapshot stride in steps (overrides the config).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stride: Option<u64>,
        /// Run even if the instance violates a standing assumption.
        #[arg(long)]
        allow_invalid: bool,
    },
    /// Check a run directory's hashes and audit its result.
    Verify {
        /// Run directory; may also be given as --out.
        run_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both solvers and compare their fronts and final profiles.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        allow_invalid: bool,
    },
    /// Run every cell of a parameter sweep.
    Sweep {
        /// Sweep specification file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximal number of concurrent runs (overrides the spec).
        #[arg(long)]
        width: Option<usize>,
    },
    /// Grid-refinement study; prints or writes a CSV table.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value = "self", value_parser = parse_mode)]
        mode: StudyMode,
        /// CSV output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_invalid: bool,
    },
    /// Write plot-ready CSV files for a run directory.
    Plotdata {
        run_dir: PathBuf,
        /// Output directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: swellfront::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<StudyMode, String> {
    s.parse().map_err(|e: swellfront::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = match cli.command {
        Command::Run {
            config,
            out: dir,
            solver,
            stride,
            allow_invalid,
        } => {
            let opts = RunOptions {
                solver,
                stride: stride.map(|s| s as usize),
                allow_invalid,
            };
            harness::cmd_run(&config, &dir, &opts, &mut out, &mut err)
        }
        Command::Verify { run_dir, out: dir } => match run_dir.or(dir) {
            Some(d) => harness::cmd_verify(&d, &mut out, &mut err),
            None => {
                eprintln!("error: verify needs a run directory");
                harness::exit::USAGE
            }
        },
        Command::Compare {
            config,
            allow_invalid,
        } => harness::cmd_compare(&config, allow_invalid, &mut out, &mut err),
        Command::Sweep {
            config,
            out: dir,
            width,
        } => harness::cmd_sweep(&config, &dir, width, &mut out, &mut err),
        Command::Convergence {
            config,
            levels,
            mode,
            out: csv,
            allow_invalid,
        } => harness::cmd_convergence(
            &config,
            levels,
            mode,
            csv.as_deref(),
            allow_invalid,
            &mut out,
            &mut err,
        ),
        Command::Plotdata { run_dir, out: dir } => {
            harness::cmd_plotdata(&run_dir, dir.as_deref(), &mut out, &mut err)
        }
    };
    ExitCode::from(code as u8)
}
