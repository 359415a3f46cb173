//! `srs` binary: parse arguments, hand off to the library, map errors to
//! exit codes (0 success, 1 failed run or failed checks, 2 usage).

use clap::{Parser, Subcommand};

use srs_cli::{cmd_evolve, cmd_scan, cmd_sweep, cmd_verify, AppError, CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "srs",
    version,
    about = "Stimulated Raman scattering of a photon stream on a chain of two-level atoms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the medium through a photon stream and record per-photon data
    Evolve(CommonArgs),
    /// Run a named verification suite and report each check
    Verify(CommonArgs),
    /// Scan a parameter list, optionally fitting a scaling law
    Scan(CommonArgs),
    /// Dump the branch amplitudes of a single photon pass
    Sweep(CommonArgs),
}

fn dispatch(command: &Command) -> Result<i32, AppError> {
    let args = match command {
        Command::Evolve(a) | Command::Verify(a) | Command::Scan(a) | Command::Sweep(a) => a,
    };
    let cfg = RunConfig::resolve(args)?;
    if let Some(threads) = cfg.threads {
        if threads > 0 {
            // Ignore the error when a pool is already set (repeated calls in
            // one process); outputs do not depend on the pool size.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    match command {
        Command::Evolve(_) => cmd_evolve(&cfg),
        Command::Verify(_) => cmd_verify(&cfg),
        Command::Scan(_) => cmd_scan(&cfg),
        Command::Sweep(_) => cmd_sweep(&cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli.command) {
        Ok(code) => code,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(AppError::Compute(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}
