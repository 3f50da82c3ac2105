//! `panocanon` — batch command-line surface over the panorama toolkit.
//!
//! Every subcommand is a thin adapter around one library operation: it
//! parses flags (angles in degrees), converts once at this boundary, calls
//! the library, and writes the library's output verbatim. Identical flags
//! and inputs therefore produce bit-identical outputs.
//!
//! Flags may also be supplied through `--config FILE`, a JSON object whose
//! keys are the long flag names without the leading dashes (for example
//! `{"pitch-deg": 10.0}`). Explicit command-line flags override config-file
//! values. Exit codes: 0 success, 1 file/format problems, 2 configuration
//! problems (including flag and config-file validation), 3 numeric or
//! degenerate-input conditions.

mod args;
mod ops;

use std::ffi::OsString;
use std::fs;

use clap::Parser;

use panocanon::{Error, Result};

use args::{Cli, Command, MetricsCommand};

fn main() {
    let argv = match expand_config_argv(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    // Clap exits with code 2 on flag-validation errors and 0 for help.
    let cli = Cli::parse_from(argv);
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Project(a) => ops::project(a),
        Command::Render(a) => ops::render(a),
        Command::Canonicalize(a) => ops::canonicalize(a),
        Command::Roll(a) => ops::roll(a),
        Command::GtFlow(a) => ops::gt_flow(a),
        Command::Level(a) => ops::level(a),
        Command::WarpCanonical(a) => ops::warp_canonical(a),
        Command::SampleDataset(a) => ops::sample_dataset(a),
        Command::TrainToy(a) => ops::train_toy(a),
        Command::SampleToy(a) => ops::sample_toy(a),
        Command::CheckEquivariance(a) => ops::check_equivariance(a),
        Command::Metrics { command } => match command {
            MetricsCommand::Seam(a) => ops::metrics_seam(a),
            MetricsCommand::Psnr(a) => ops::metrics_psnr(a),
            MetricsCommand::FlowEpe(a) => ops::metrics_flow_epe(a),
            MetricsCommand::RotationError(a) => ops::metrics_rotation_error(a),
        },
    }
}

/// Turns a `--config FILE` JSON object into synthetic flag tokens inserted
/// after the subcommand chain and before the user's explicit flags, so the
/// later (explicit) occurrence of any repeated flag wins.
fn expand_config_argv(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config file {path}: {e}")))?;
    let serde_json::Value::Object(map) = value else {
        return Err(Error::Config(format!(
            "config file {path}: top level must be a JSON object"
        )));
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, val) in &map {
        if key == "config" {
            return Err(Error::Config(format!(
                "config file {path}: a config file cannot name another config file"
            )));
        }
        let rendered = match val {
            serde_json::Value::Null => continue,
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(items) => {
                let mut parts = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        serde_json::Value::Number(n) => parts.push(n.to_string()),
                        serde_json::Value::String(s) => parts.push(s.clone()),
                        other => {
                            return Err(Error::Config(format!(
                                "config file {path}: key {key}: unsupported list element {other}"
                            )))
                        }
                    }
                }
                parts.join(",")
            }
            serde_json::Value::Object(_) => {
                return Err(Error::Config(format!(
                    "config file {path}: key {key}: nested objects are not flags"
                )))
            }
        };
        injected.push(format!("--{key}").into());
        injected.push(rendered.into());
    }
    // The subcommand chain is the run of non-flag tokens after the program
    // name; insertion happens right where the first flag would start.
    let insert_at = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, t)| t.to_string_lossy().starts_with('-'))
        .map_or(argv.len(), |(i, _)| i);
    let mut out = argv;
    out.splice(insert_at..insert_at, injected);
    Ok(out)
}

/// Extracts the `--config` value without a full parse (clap sees the flag
/// again later and simply records it).
fn config_path(argv: &[OsString]) -> Option<String> {
    let mut iter = argv.iter().skip(1);
    while let Some(tok) = iter.next() {
        let tok = tok.to_string_lossy();
        if tok == "--config" {
            return iter.next().map(|v| v.to_string_lossy().into_owned());
        }
        if let Some(rest) = tok.strip_prefix("--config=") {
            return Some(rest.to_owned());
        }
    }
    None
}
