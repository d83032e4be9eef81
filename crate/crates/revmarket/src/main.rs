use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use revmarket::commands::{cmd_blackbox, cmd_predict, cmd_report, render_report, RECORDS_FILE};
use revmarket::config::REFERENCE;
use revmarket::{CliError, Overrides, RunConfig};
use revmarket_core::GameVariant;

#[derive(Parser)]
#[command(
    name = "revmarket",
    version,
    about = "Fit agent-based market games to price series and predict daily direction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Walk-forward predictions for every configured variant, then a report.
    Predict(RunArgs),
    /// Plant a hidden game, generate its series and try to recover it.
    Blackbox(RunArgs),
    /// Rebuild report.json and report.txt from a records file.
    Report(ReportArgs),
    /// Print the annotated default configuration.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all CPUs).
    #[arg(long)]
    workers: Option<usize>,
    /// Continue from existing output (default).
    #[arg(long, overrides_with = "no_resume")]
    resume: bool,
    /// Discard existing records and start over.
    #[arg(long)]
    no_resume: bool,
    /// Restrict to these variants (repeatable).
    #[arg(long = "variant", value_name = "NAME")]
    variants: Vec<GameVariant>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Records file; defaults to the one in the configured output directory.
    #[arg(long)]
    records: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(
            &self.config,
            &Overrides {
                seed: self.seed,
                workers: self.workers,
                variants: self.variants.clone(),
            },
        )
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Predict(args) => {
            let cfg = args.load()?;
            let summary = cmd_predict(&cfg, !args.no_resume)?;
            println!(
                "{} days computed, {} already on disk; records in {}",
                summary.computed,
                summary.skipped,
                summary.records.display()
            );
            print!("{}", render_report(&summary.report));
        }
        Command::Blackbox(args) => {
            let cfg = args.load()?;
            for card in cmd_blackbox(&cfg, !args.no_resume)? {
                println!(
                    "fitness {:.4} (random percentile {:.4}), holdout accuracy {:.2} ({}/{}, p={:.4})",
                    card.best_fitness,
                    card.random_percentile,
                    card.holdout_accuracy,
                    card.holdout_successes,
                    card.holdout_days,
                    card.holdout_p_value
                );
            }
        }
        Command::Report(args) => {
            let cfg = RunConfig::load(&args.config, &Overrides::default())?;
            let records = args
                .records
                .unwrap_or_else(|| cfg.output.join(RECORDS_FILE));
            print!("{}", render_report(&cmd_report(&cfg, &records)?));
        }
        Command::Defaults => print!("{REFERENCE}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
