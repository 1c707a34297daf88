use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dirac_cli::{parse_config, run, OutputFormat, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Integrate a built-in discrete mechanical system and write its trajectory.
#[derive(Debug, Parser)]
#[command(name = "ddirac", version)]
struct Args {
    /// TOML run description.
    config: PathBuf,
    /// Trajectory destination (overrides `output.path`; `-` for stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Trajectory format (overrides `output.format`).
    #[arg(short, long, value_enum)]
    format: Option<Format>,
    /// Number of steps (overrides `steps`).
    #[arg(short = 'n', long)]
    steps: Option<usize>,
    /// Do not print the run summary.
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    if let Some(path) = args.output {
        config.output.path = (path.as_os_str() != "-").then_some(path);
    }
    if let Some(f) = args.format {
        config.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if let Some(n) = args.steps {
        config.steps = n;
    }

    // Keep stdout clean for the trajectory when no file is given.
    let summary_to_stderr = config.output.path.is_none();
    let report = |s: &dirac_cli::RunSummary| {
        if args.quiet {
            return;
        }
        if summary_to_stderr {
            eprintln!("{s}");
        } else {
            println!("{s}");
        }
    };

    match run(&config) {
        Ok(summary) => {
            report(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let RunError::Step { summary, .. } = &e {
                report(summary);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
