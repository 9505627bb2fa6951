use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use casimir_lab_cli::{
    analyze, example_config, report, simulate, thread_cap, with_threads, AnalyzeOverrides, CliError,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "casimir-lab",
    version,
    about = "Simulate and analyze differential critical-field campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a campaign dataset (sweep CSVs plus manifest.json).
    Simulate {
        /// TOML run configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Master seed, overriding `[noise] seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Estimate shifts, fit parabolas and extract the film–cavity gap.
    Analyze {
        /// Dataset directory written by `simulate`.
        in_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Lower |H| bound for the high-field fits (mT).
        #[arg(long = "fit-threshold-mT")]
        fit_threshold_mt: Option<f64>,
        /// Fit δt = a·H² + b·H instead of a·H².
        #[arg(long)]
        include_linear: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Write plot-ready CSVs from an analysis directory.
    Report {
        /// Directory written by `analyze`.
        in_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Print a configuration file holding every default.
    ExampleConfig {
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = thread_cap()?;
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            quiet,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.noise.seed = s;
            }
            let summary = with_threads(threads, || simulate(&cfg, &out))?;
            if !quiet {
                println!("{summary}");
                println!("dataset: {}", out.display());
            }
        }
        Command::Analyze {
            in_dir,
            out,
            fit_threshold_mt,
            include_linear,
            quiet,
        } => {
            let overrides = AnalyzeOverrides {
                fit_threshold_mt,
                include_linear,
            };
            let result = with_threads(threads, || analyze(&in_dir, &out, overrides))?;
            if !quiet {
                print!("{}", result.summary);
            }
        }
        Command::Report { in_dir, out, quiet } => {
            let files = with_threads(threads, || report(&in_dir, &out))?;
            if !quiet {
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
        }
        Command::ExampleConfig { out } => {
            let text = example_config();
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("casimir-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
