use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ccsb_cli::compare::{self, Metric};
use ccsb_cli::config::RunConfig;
use ccsb_cli::run::{execute_with_workers, output_dir, write_outputs, RunStatus};
use ccsb_cli::{presets, CliError, CliResult};
use ccsb_core::hamiltonians::build_tables;
use ccsb_core::propagator::Checkpoint;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ccsb", version, about = "Coupled coherent states for indistinguishable bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, propagate and record a configuration (or run an exact reference).
    Run {
        /// Configuration file, or a metadata.json from an earlier run.
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $CCSB_OUTPUT_ROOT/<name> or runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Continue from a checkpoint written by the same configuration.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Compare the observables of two runs column by column.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long, value_enum, default_value = "chi")]
        metric: Metric,
        /// Restrict to these columns (comma separated).
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
        /// Report file (default: compare-<metric>.csv beside run_a).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the one- and two-body matrix-element tables as JSON.
    Tables {
        #[arg(long, value_enum)]
        app: TableApp,
        #[arg(long)]
        omega: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableApp {
    /// Even levels 0, 2, …, 2Ω.
    App1,
    /// All levels 0, …, Ω.
    App2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> CliResult<u8> {
    match command {
        Command::Run { config, preset, seed, out, workers, resume } => {
            let mut config = match (config, preset) {
                (Some(path), None) => RunConfig::read(&path)?,
                (None, Some(name)) => presets::load(&name)?,
                _ => return Err(CliError::Config("give either a config file or --preset".into())),
            };
            if let Some(s) = seed {
                config.sampling.seed = s;
            }
            if let Some(o) = out {
                config.run.output = Some(o);
            }
            config.validate()?;
            let dir = output_dir(&config);
            let resume = resume.map(|p| Checkpoint::read(&p)).transpose()?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let started = Instant::now();
            let mut outcome = execute_with_workers(&config, Some(&dir), resume, workers)?;
            outcome.metadata["workers"] = workers.into();
            outcome.metadata["wall_seconds"] = started.elapsed().as_secs_f64().into();
            write_outputs(&outcome, &dir)?;
            match &outcome.status {
                RunStatus::Completed => println!("{}: completed, outputs in {}", config.hash(), dir.display()),
                RunStatus::NormGuard { t, norm, initial } => {
                    eprintln!(
                        "error: norm guard tripped at t = {t} (norm {norm} vs initial {initial}); the basis is likely overcompressed. Partial outputs in {}",
                        dir.display()
                    )
                }
            }
            Ok(outcome.exit_code())
        }
        Command::Compare { run_a, run_b, metric, columns, out } => {
            let a = compare::load(&run_a)?;
            let b = compare::load(&run_b)?;
            let report = compare::compare(&a, &b, metric, columns.as_deref())?;
            for (name, v) in &report.values {
                println!("{name}\t{}\t{v:e}", metric.name());
            }
            let path = out.unwrap_or_else(|| {
                let base = compare::observables_path(&run_a);
                base.with_file_name(format!("compare-{}.csv", metric.name()))
            });
            report.to_series()?.write_csv_file(&path)?;
            Ok(0)
        }
        Command::Tables { app, omega, out } => {
            let tables = build_tables(omega, matches!(app, TableApp::App1))?;
            let text = serde_json::to_string_pretty(&tables.to_dump()).expect("tables serialize");
            match out {
                Some(path) => std::fs::write(&path, text + "\n")
                    .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            Ok(0)
        }
    }
}
