mod commands;
mod emit;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

/// Construct, enumerate and search Balanced Tanner Units.
#[derive(Debug, Parser)]
#[command(name = "btu", version, about)]
pub struct Cli {
    /// Write a run manifest that `btu replay` can reproduce.
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Alist,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Micro,
    Labels,
    Orders,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Counting,
    Girth,
    Bounds,
    Iso,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Alpha,
    Alpha1,
    Pipeline,
    Implicit,
    Hierarchy,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: usize,
    /// Partition family such as `2,2:4`; required by alpha1 and pipeline.
    #[arg(long)]
    betas: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Alpha)]
    mode: Mode,
    #[arg(long)]
    max_candidates: Option<u64>,
    /// Wall-clock limit; runs stopped by it are not reproducible.
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long, env = "BTU_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Write per-family rows (implicit mode) as CSV.
    #[arg(long, value_name = "FILE")]
    census: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the partitions of m with every part at least 2.
    Partitions {
        #[arg(long)]
        m: u32,
    },
    /// Optimal partition family for (m, r), or for explicit (k, r, b).
    OptimalParams {
        #[arg(long, required_unless_present = "k")]
        m: Option<u32>,
        #[arg(long)]
        r: usize,
        #[arg(long, requires = "b", conflicts_with = "m")]
        k: Option<u32>,
        #[arg(long, requires = "k")]
        b: Option<u32>,
    },
    /// The canonical (m, 2) BTU for a partition.
    Psi {
        #[arg(long)]
        beta: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run one stage of the micro-partition pipeline between two partitions.
    Enumerate {
        #[arg(long, value_enum)]
        stage: Stage,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Restrict to one micro-partition (0-based index in enumeration order).
        #[arg(long)]
        micro: Option<usize>,
    },
    /// Girth and cycle report of a BTU (JSON) or a matrix (alist).
    Girth {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Also run the exhaustive cycle oracle and fail on disagreement.
        #[arg(long)]
        oracle: bool,
    },
    /// Search for a girth-maximum BTU.
    Search(SearchArgs),
    /// Convert a BTU to alist, DOT or JSON.
    Export {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check the library against the brute-force oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// Re-run a recorded manifest and check the output is unchanged.
    Replay { manifest: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let started = Instant::now();
    let manifest_path = cli.manifest.clone();
    match commands::run(cli.command) {
        Ok(out) => {
            print!("{}", out.text);
            if let Some(path) = manifest_path {
                let m = manifest::RunManifest::record(&argv[1..], &out, started.elapsed());
                if let Err(e) = m.write(&path) {
                    return fail(e);
                }
            }
            ExitCode::from(out.exit_code)
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {}", e.message);
    ExitCode::from(e.code)
}
