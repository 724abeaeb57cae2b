//! `bkflow <command> --config <path> [--out <dir>] [--seed <u64>] [--override key=value ...]`
//!
//! Writes `<out>/<command>.json` (and `<command>.csv` unless `csv` is
//! false). Exit status: 0 pass, 1 contract failure, 2 indeterminate or
//! numerical rejection, 64 configuration error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bkflow_core::xi::Verdict;
use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use commands::Table;
use config::{Command, ConfigError, ExperimentConfig};

const SCHEMA_VERSION: u32 = 1;
const EXIT_CONFIG: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "bkflow", version, about = "Spectral shift, index and spectral flow experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "bkflow-out")]
    out: PathBuf,
    /// Replaces the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` with a dotted key into the config, e.g. `params.lambda=0.4`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    version: Value,
    config: &'a ExperimentConfig,
    verdict: &'a Verdict,
    data: Value,
}

fn exit_status(v: &Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Indeterminate(_) => 2,
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), ConfigError> {
    let io = |e: csv::Error| ConfigError(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<Verdict, ConfigError> {
    let cfg = config::load(&cli.config, cli.command, cli.seed, &cli.overrides)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| ConfigError(format!("cannot create {}: {e}", cli.out.display())))?;
    let (verdict, data, table) = match commands::run(&cfg, cli.command) {
        Ok(o) => (o.verdict, o.data, o.table),
        Err(e) => (
            Verdict::Indeterminate(format!("numerical rejection: {e}")),
            json!({"error": e.to_string()}),
            None,
        ),
    };
    let report = Report {
        version: json!({"schema": SCHEMA_VERSION, "bkflow": env!("CARGO_PKG_VERSION")}),
        config: &cfg,
        verdict: &verdict,
        data,
    };
    let name = cli.command.name();
    let json_path = cli.out.join(format!("{name}.json"));
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&json_path, body)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", json_path.display())))?;
    if cfg.csv {
        if let Some(t) = table {
            write_csv(&cli.out.join(format!("{name}.csv")), &t)?;
        }
    }
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(v) => {
            let line = match &v {
                Verdict::Pass => "pass".to_string(),
                Verdict::Fail => "fail".to_string(),
                Verdict::Indeterminate(r) => format!("indeterminate: {r}"),
            };
            println!("{}: {line}", cli.command.name());
            ExitCode::from(exit_status(&v))
        }
        Err(e) => {
            eprintln!("bkflow: config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
