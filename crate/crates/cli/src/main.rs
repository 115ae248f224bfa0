use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zonopt::query::{write_result, PreparedQuery};
use zonopt::selftest::{run_selftest, DEFAULT_SEED};

/// Certified optimization over the outputs of ReLU networks.
#[derive(Parser)]
#[command(name = "zonopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one query and write the result JSON.
    Solve {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print `iter,lower,upper,gap,queue_size` at every gap check.
        #[arg(long)]
        trace: bool,
    },
    /// Solve the query on every cell of its grid block and write CSV rows.
    Sweep {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized self-checks.
    Selftest {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn solve(query: PathBuf, out: PathBuf, trace: bool) -> zonopt::Result<i32> {
    let prepared = PreparedQuery::load(&query)?;
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let result = prepared.run(&mut |line| {
        if trace {
            // A closed stdout should not abort the solve.
            let _ = writeln!(lock, "{line}");
        }
    })?;
    fs::write(&out, write_result(&result)? + "\n")?;
    Ok(result.exit_code())
}

fn sweep(query: PathBuf, out: PathBuf) -> zonopt::Result<i32> {
    let prepared = PreparedQuery::load(&query)?;
    let summary = prepared.sweep(&out)?;
    eprintln!(
        "sweep: {} solved, {} failed, {} already present",
        summary.solved, summary.failed, summary.skipped
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { query, out, trace } => solve(query, out, trace),
        Command::Sweep { query, out } => sweep(query, out),
        Command::Selftest { seed } => {
            let report = run_selftest(seed);
            println!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
