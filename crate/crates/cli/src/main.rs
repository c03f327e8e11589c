//! Batch front end: load scenario files, run verification suites across the
//! engine, and emit deterministic reports.
//!
//! Exit codes: 0 on pass, 1 on a check failure, 2 on usage or schema errors.

mod commands;
mod report;
mod scenario;

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Report;

#[derive(Parser)]
#[command(name = "fintt", version, about = "exact finite models of dependent type expressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scenario file
    Verify {
        /// path to a scenario JSON file
        path: String,
        /// seed for randomized sampling suites (recorded in the report)
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Polynomial signatures
    #[command(subcommand)]
    Poly(PolyCommand),
    /// Presheaf-level constructions
    #[command(subcommand)]
    Presheaf(PresheafCommand),
    /// Universes of small sets
    #[command(subcommand)]
    Universe(UniverseCommand),
    /// The equivalence classifier
    #[command(subcommand)]
    Equiv(EquivCommand),
    /// The type-expression front end
    #[command(subcommand)]
    Tt(TtCommand),
}

#[derive(Subcommand)]
enum PolyCommand {
    /// Compose two canonical signatures and compare extensions
    Compose {
        /// fiber sizes of the outer signature, comma separated
        #[arg(long, value_delimiter = ',')]
        p: Vec<u64>,
        /// fiber sizes of the inner signature, comma separated
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
        /// argument sizes to compare at
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        sizes: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum PresheafCommand {
    /// Sieve classifier of an index category
    Omega {
        /// terminal | arrow | composable-pair | path to JSON
        #[arg(long, default_value = "arrow")]
        category: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum UniverseCommand {
    /// Nerve construction of the universe of small sets
    Nerve {
        #[arg(long, default_value = "arrow")]
        category: String,
        /// universe size (2 or 3)
        #[arg(long, default_value_t = 2)]
        kappa: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum EquivCommand {
    /// Fiber sizes of the equivalence classifier over the cardinal model
    Fibers {
        /// largest type to include
        #[arg(long, default_value_t = 5)]
        max: u64,
        /// carrier bound
        #[arg(long, default_value_t = 16)]
        bound: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum TtCommand {
    /// Evaluate a closed type expression (argument or stdin)
    Eval {
        /// the expression; read from stdin when omitted
        expr: Option<String>,
        /// carrier bound for the cardinal model
        #[arg(long, default_value_t = 1 << 16)]
        bound: u64,
        /// print the full environment table instead of the cardinality
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn emit_value(value: &serde_json::Value, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).unwrap()),
        Format::Text => println!("{}", render_text(value, 0)),
    }
}

fn render_text(value: &serde_json::Value, indent: usize) -> String {
    let pad = "  ".repeat(indent);
    match value {
        serde_json::Value::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                    format!("{pad}{k}:\n{}", render_text(v, indent + 1))
                }
                _ => format!("{pad}{k}: {v}"),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        serde_json::Value::Array(items) => items
            .iter()
            .map(|v| match v {
                serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                    format!("{pad}-\n{}", render_text(v, indent + 1))
                }
                _ => format!("{pad}- {v}"),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        other => format!("{pad}{other}"),
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { path, seed, common } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read scenario {path:?}: {e}"))?;
            let scenario = scenario::load_scenario(&text).map_err(|e| e.to_string())?;
            let report: Report =
                scenario::run_scenario(&scenario, seed).map_err(|e| e.to_string())?;
            match common.format {
                Format::Text => print!("{}", report.emit_text()),
                Format::Json => println!("{}", report.emit_json()),
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Poly(PolyCommand::Compose { p, q, sizes, common }) => {
            let value = commands::poly_compose(&p, &q, &sizes).map_err(|e| e.to_string())?;
            emit_value(&value, common.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::Presheaf(PresheafCommand::Omega { category, common }) => {
            let cat = commands::resolve_category(&category).map_err(|e| e.to_string())?;
            let value = commands::presheaf_omega(&cat).map_err(|e| e.to_string())?;
            emit_value(&value, common.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::Universe(UniverseCommand::Nerve {
            category,
            kappa,
            common,
        }) => {
            let cat = commands::resolve_category(&category).map_err(|e| e.to_string())?;
            let value = commands::universe_nerve(&cat, kappa).map_err(|e| e.to_string())?;
            emit_value(&value, common.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::Equiv(EquivCommand::Fibers { max, bound, common }) => {
            let value = commands::equiv_fibers(bound, max).map_err(|e| e.to_string())?;
            emit_value(&value, common.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::Tt(TtCommand::Eval {
            expr,
            bound,
            table,
            common,
        }) => {
            let source = match expr {
                Some(e) => e,
                None => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| format!("cannot read stdin: {e}"))?;
                    buf
                }
            };
            let value =
                commands::tt_eval(source.trim(), bound, table).map_err(|e| e.to_string())?;
            emit_value(&value, common.format);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
