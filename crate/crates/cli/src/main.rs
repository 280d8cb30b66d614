use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jargon_cli::{cmd_augment, cmd_compare, cmd_evaluate, cmd_report, CellSelector, CliError};
use jargon_core::report::Metric;

#[derive(Parser)]
#[command(name = "jargon", version, about = "Evaluate LLM extraction of patient-important medical jargon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated evaluation grid described by a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Annotate discharge notes with a teacher model and write training sets.
    Augment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the results table of a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
        /// Show 95% confidence half-widths next to each mean.
        #[arg(long)]
        ci: bool,
    },
    /// Paired t-test of one cell's fold scores between two runs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "f1")]
        metric: String,
        /// STYLE,SHOTS,K, e.g. `structured,few,5`.
        #[arg(long)]
        cell: String,
        /// Model name, required when a run holds several models.
        #[arg(long)]
        model: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate { config } => {
            let out = cmd_evaluate(&config)?;
            println!(
                "wrote {} cells to {} ({} network requests)",
                out.report.cells.len(),
                out.run_dir.display(),
                out.network_calls
            );
        }
        Command::Augment { config } => {
            let out = cmd_augment(&config)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!(
                "{} accepted, {} unparseable, {} network requests",
                out.accepted, out.parse_failures, out.network_calls
            );
        }
        Command::Report { run, format, ci } => print!("{}", cmd_report(&run, &format, ci)?),
        Command::Compare {
            a,
            b,
            metric,
            cell,
            model,
        } => {
            let metric: Metric = metric.parse().map_err(CliError::Config)?;
            let cell: CellSelector = cell.parse()?;
            println!("{}", cmd_compare(&a, &b, metric, cell, model.as_deref())?.line());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
