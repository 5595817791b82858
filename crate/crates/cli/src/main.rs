//! `simop` -- spectra, groups and mild solutions of the periodic transport
//! operator with a reflection-coupled potential, driven by a JSON config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "simop",
    about = "Block-diagonalizes the periodic transport operator with an involution and reports spectra, evolution and diagnostics",
    version
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the similarity pipeline and write the spectrum reports.
    Spectrum,
    /// Solve the mixed problem at the configured times.
    Evolve,
    /// Compare the method against the dense oracle and the closed-form
    /// reference; exit 0 only if every tolerance holds.
    Validate,
    /// Sweep the equiconvergence gap and the expansion tail bound.
    Diagnose,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Validate => "validate",
            Command::Diagnose => "diagnose",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config <path> is required".into()))?;
    let config = RunConfig::load(config_path)?;
    let base_dir = config_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let resolved = commands::resolve_defaults(&config, cli.command.name());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&resolved, &base_dir, &cli.out),
        Command::Evolve => commands::cmd_evolve(&resolved, &base_dir, &cli.out),
        Command::Validate => commands::cmd_validate(&resolved, &base_dir, &cli.out),
        Command::Diagnose => commands::cmd_diagnose(&resolved, &base_dir, &cli.out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Machine-readable failure body on stdout, prose on stderr.
            println!("{}", err.json_body());
            eprintln!("error: {err}");
            let _ = std::fs::create_dir_all(&cli.out)
                .and_then(|_| std::fs::write(cli.out.join("error.json"), err.json_body()));
            ExitCode::from(err.exit_code as u8)
        }
    }
}
