//! Command-line front end: run a JSON experiment config and emit figure-ready
//! data files plus a manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use satin_sim::cli::{self, OutputFormat, Overrides};
use satin_sim::Error;

#[derive(Parser, Debug)]
#[command(
    name = "satin",
    about = "Collective-spin twist/untwist echo metrology simulator",
    version
)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: SATIN_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for tabular files.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        workers: args.workers,
        out_dir: args.out,
        format: args.format,
    };
    match cli::run(&args.config, &overrides) {
        Ok(summary) => {
            for p in &summary.outputs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", summary.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                Error::NoSolution(_) => 3,
                Error::Numeric(_) => 4,
                Error::Io(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}
