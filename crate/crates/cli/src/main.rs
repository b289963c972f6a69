use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lhfi_cli::{dd_table, fit_from_file, simulate, FitOverrides, Preset};

/// Latent health factor index: fit, simulate and derive distance downstream.
#[derive(Parser, Debug)]
#[command(name = "lhfi", version, about)]
#[command(after_help = "Log verbosity is read from LHFI_LOG (error, warn, info, debug, trace).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and write summary, health, DIC, BGR and trace tables
    Fit {
        /// Flat JSON run configuration
        #[arg(long)]
        config: PathBuf,
        /// One of model1..model5; replaces the configured model structure
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the configuration
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset from a JSON design
    Simulate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print each site's distance downstream along the west-east anchor line
    Dd {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        west: u32,
        #[arg(long)]
        east: u32,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LHFI_LOG", "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit { config, preset, seed, out } => {
            fit_from_file(&config, &FitOverrides { preset, seed, out }).map(|o| {
                println!("{}", o.out_dir.display());
            })
        }
        Command::Simulate { design, out } => simulate(&design, &out).map(|_| println!("{}", out.display())),
        Command::Dd { geometry, west, east } => dd_table(&geometry, west, east).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
