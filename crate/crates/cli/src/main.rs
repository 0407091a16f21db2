//! Command-line driver: heat invariants, expansion coefficients, cached spectra and
//! end-to-end verification reports.

mod cache;
mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Format, Which};
use config::RunConfig;
use error::Result;

#[derive(Parser)]
#[command(name = "oscitrace", version, about = "Heat invariants and trace identities for the perturbed harmonic oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the local heat invariants a_0..a_J.
    Invariants {
        #[arg(long, default_value_t = 4)]
        max_order: usize,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
    },
    /// Compute I_j, b_j and c_j and write coeffs.json.
    Coeffs(RunArgs),
    /// Compute (or load from cache) the spectrum and write spectrum.json.
    Spectrum(RunArgs),
    /// Run the selected checks and write verify.json plus CSV streams.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let cfg = RunConfig::load(&self.config)?;
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Invariants { max_order, format } => {
            let text = commands::invariants(max_order, format)?;
            std::io::stdout().write_all(text.as_bytes()).ok();
            Ok(true)
        }
        Command::Coeffs(args) => {
            let (cfg, out) = args.load()?;
            commands::coeffs(&cfg, &out)?;
            Ok(true)
        }
        Command::Spectrum(args) => {
            let (cfg, out) = args.load()?;
            commands::spectrum(&cfg, &out)?;
            Ok(true)
        }
        Command::Verify { run, which } => {
            let (cfg, out) = run.load()?;
            let ok = commands::verify(&cfg, which, &out)?;
            eprintln!("report written to {}", Path::new(&out).join("verify.json").display());
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
