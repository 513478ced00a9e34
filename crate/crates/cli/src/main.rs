use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kahler_toric_cli::checks::{plan, run, RunOptions};
use kahler_toric_cli::config::{CheckName, ConfigError, SuiteConfig};
use kahler_toric_cli::eval::{evaluate, Format, What};
use kahler_toric_cli::listing::{descriptors, text_line};
use kahler_toric_cli::report::to_json;
use kahler_toric_cli::DEFAULT_SUITE;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "kahler-toric", version, about = "Dually flat and Kähler toric checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Families in the catalog.
    Families {
        #[command(subcommand)]
        action: FamiliesAction,
    },
    /// Run a check suite.
    Check {
        /// Suite file (TOML). The built-in default suite otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only checks with this name.
        #[arg(long)]
        only: Option<String>,
        /// Base seed; check `i` without its own seed uses `seed + i`.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Zero `runtime_ms` so reports are byte-identical between runs.
        #[arg(long)]
        deterministic: bool,
    },
    /// Tabulate a potential, metric, momentum map or lift on a grid.
    Eval {
        #[arg(long, value_enum)]
        what: What,
        /// Family, potential, target geometry or lift spec.
        #[arg(long)]
        target: String,
        /// `start:stop:count` or comma lists, one axis per `;`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum FamiliesAction {
    List {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        family: Option<String>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> ConfigError {
    ConfigError(format!("{}: {e}", path.display()))
}

fn dispatch(command: Command) -> Result<ExitCode, ConfigError> {
    match command {
        Command::Families { action: FamiliesAction::List { json, family } } => {
            let list = descriptors(family.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&list).expect("descriptors serialize"));
            } else {
                for d in &list {
                    println!("{}", text_line(d));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config, only, seed, json, deterministic } => {
            let text = match &config {
                Some(path) => fs::read_to_string(path).map_err(|e| io_err(path, e))?,
                None => DEFAULT_SUITE.to_string(),
            };
            let suite = SuiteConfig::parse(&text)?;
            let only = only.as_deref().map(CheckName::parse).transpose()?;
            let planned = plan(&suite, &RunOptions { seed, only, deterministic })?;
            let reports = run(&planned, deterministic);
            for r in &reports {
                println!("{}", r.summary_line());
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            println!("{} reports, {} failed", reports.len(), failed);
            if let Some(path) = &json {
                fs::write(path, to_json(&reports)).map_err(|e| io_err(path, e))?;
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
        }
        Command::Eval { what, target, grid, out, format } => {
            let table = evaluate(what, &target, &grid)?;
            let bad = table.failed_rows();
            if bad > 0 {
                eprintln!("warning: {bad} grid points outside the domain");
            }
            match &out {
                Some(path) => {
                    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
                    table.write(file, format).map_err(|e| io_err(path, e))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    table.write(&mut lock, format).map_err(|e| ConfigError(e.to_string()))?;
                    lock.flush().map_err(|e| ConfigError(e.to_string()))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
