//! `orgutil`: derive organizational utilities from member specifications,
//! analyze their risk preferences, and solve the market/contracting models
//! built on top of them.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure.

mod commands;
mod figures;
mod report;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use commands::GridSpec;
use figures::{FigureId, FigureSpec};
use report::RunReport;
use table::Table;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid input (exit code 2).
    Input(String),
    /// A solver or evaluation failed numerically (exit code 3).
    Numerical(String),
}

impl CliError {
    fn input(msg: String) -> Self {
        CliError::Input(msg)
    }

    fn numerical(msg: String) -> Self {
        CliError::Numerical(msg)
    }

    fn from_games(e: orgutil_core::games::GamesError) -> Self {
        use orgutil_core::games::GamesError::*;
        match e {
            InvalidConfig(_) | DerivedUtilityNotScalar { .. } | QuantityOutOfBounds { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "orgutil", version, about = "Organizational utility toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a structure file into organizational and member curves
    Derive {
        /// Aggregation structure JSON
        #[arg(long)]
        input: PathBuf,
        /// Output file (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Evaluation grid MIN:MAX:POINTS
        #[arg(long, default_value = "-10:10:2001", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Evaluate a lottery under the organizational utility of a structure
    Risk {
        /// Aggregation structure JSON
        #[arg(long)]
        input: PathBuf,
        /// Lottery JSON
        #[arg(long)]
        lottery: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Solve a market or contracting scenario for every structure pairing
    Games {
        /// Scenario JSON with a "game" discriminator
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Annealing seed override
        #[arg(long, env = "ORGUTIL_SEED")]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Rebuild a bundled figure dataset
    Figures {
        /// Figure id (see --figure help for the list); uses the bundled spec
        #[arg(long, value_parser = FigureId::ALL.map(|f| f.name()))]
        figure: Option<String>,
        /// Figure spec JSON overriding the bundled one
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (overrides the spec's output_path)
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, env = "ORGUTIL_SEED")]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn write_payload(output: Option<&Path>, payload: &str) -> Result<Vec<String>, CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, payload)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            Ok(vec![path.display().to_string()])
        }
        None => {
            print!("{payload}");
            Ok(vec!["<stdout>".into()])
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let started = Instant::now();
    match command {
        Command::Derive { input, output, grid, format } => {
            let grid = GridSpec::parse(&grid)?;
            let tree = commands::load_tree(&input)?;
            let table = commands::run_derive(&tree, grid)?;
            let outputs = write_payload(output.as_deref(), &render(&table, format))?;
            RunReport {
                command: "derive",
                version: env!("CARGO_PKG_VERSION"),
                seed: None,
                inputs: json!({
                    "structure": input.display().to_string(),
                    "grid": { "min": grid.min, "max": grid.max, "points": grid.points },
                }),
                outputs,
                tolerances: json!({}),
                wall_ms: started.elapsed().as_millis(),
            }
            .emit();
        }
        Command::Risk { input, lottery, output, format } => {
            let tree = commands::load_tree(&input)?;
            let bet = commands::load_lottery(&lottery)?;
            let doc = commands::run_risk(&tree, &bet)?;
            let payload = match format {
                Format::Json => format!("{:#}\n", doc),
                Format::Csv => risk_csv(&doc),
            };
            let outputs = write_payload(output.as_deref(), &payload)?;
            RunReport {
                command: "risk",
                version: env!("CARGO_PKG_VERSION"),
                seed: None,
                inputs: json!({
                    "structure": input.display().to_string(),
                    "lottery": lottery.display().to_string(),
                }),
                outputs,
                tolerances: doc.get("tolerances").cloned().unwrap_or(json!({})),
                wall_ms: started.elapsed().as_millis(),
            }
            .emit();
        }
        Command::Games { input, output, seed, format } => {
            let run = commands::run_games(&input, seed)?;
            let outputs = write_payload(output.as_deref(), &render(&run.table, format))?;
            RunReport {
                command: "games",
                version: env!("CARGO_PKG_VERSION"),
                seed: run.seed,
                inputs: json!({ "scenario": input.display().to_string(), "game": run.game }),
                outputs,
                tolerances: json!({ "participation_slack": 1e-6, "foc_residual": 1e-6 }),
                wall_ms: started.elapsed().as_millis(),
            }
            .emit();
        }
        Command::Figures { figure, input, output, seed, format } => {
            let spec = match (&figure, &input) {
                (_, Some(path)) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::input(format!("cannot read {}: {e}", path.display()))
                    })?;
                    FigureSpec::parse(&text)?
                }
                (Some(name), None) => FigureSpec::parse(FigureId::from_name(name)?.bundled_spec())?,
                (None, None) => {
                    return Err(CliError::input("pass --figure <id> or --input <spec.json>".into()))
                }
            };
            let table = figures::generate(&spec, seed)?;
            let target = output
                .clone()
                .unwrap_or_else(|| PathBuf::from(spec.default_output()));
            let outputs = write_payload(Some(&target), &render(&table, format))?;
            RunReport {
                command: "figures",
                version: env!("CARGO_PKG_VERSION"),
                seed,
                inputs: json!({
                    "figure": spec.figure_id.name(),
                    "grid": spec.grid,
                }),
                outputs,
                tolerances: json!({}),
                wall_ms: started.elapsed().as_millis(),
            }
            .emit();
        }
    }
    Ok(())
}

fn risk_csv(doc: &serde_json::Value) -> String {
    let fields = [
        "expected_utility",
        "certainty_equivalent",
        "certainty_equivalent_reason",
        "acceptance_probability",
        "min_winning_probability",
        "min_winning_probability_reason",
    ];
    let header = fields.join(",");
    let row: Vec<String> = fields
        .iter()
        .map(|f| match doc.get(*f) {
            Some(serde_json::Value::Number(n)) => format!("{n}"),
            Some(serde_json::Value::String(s)) => s.clone(),
            _ => String::new(),
        })
        .collect();
    format!("{header}\n{}\n", row.join(","))
}
