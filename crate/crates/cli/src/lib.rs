//! `qfi-lab`: runs configured experiments and figure presets, writing CSV series,
//! a JSON manifest and a plain-text log.

pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod runner;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{parse_toml, provenance, resolve, ExperimentConfig, Resolved, Source};
use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QFI_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "qfi-lab-out";

/// Paths of the artifacts of one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub csv: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub log: PathBuf,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_toml(&text)
}

/// Explicit directory, else the config's `output.dir`, else the environment
/// default, else `qfi-lab-out` in the working directory.
pub fn output_dir(explicit: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(d) = explicit {
        return d.to_path_buf();
    }
    if let Some(d) = config.output.as_ref().and_then(|o| o.dir.as_ref()) {
        return PathBuf::from(d);
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Parses and resolves a config file without running it.
pub fn validate_file(path: &Path) -> Result<Value> {
    let raw = load_config(path)?;
    let resolved = resolve(&raw)?;
    Ok(json!({
        "valid": true,
        "kind": raw.kind,
        "config": resolved.config,
        "provenance": provenance(&raw, &resolved.config, |_| Source::ConfigFile),
    }))
}

pub fn run_file(path: &Path, out: Option<&Path>) -> Result<Artifacts> {
    let raw = load_config(path)?;
    let resolved = resolve(&raw)?;
    let sources = provenance(&raw, &resolved.config, |_| Source::ConfigFile);
    let dir = output_dir(out, &raw);
    let header = json!({ "command": "run" });
    execute(&resolved, sources, header, &dir)
}

pub fn reproduce(figure: &str, seed: u64, out: Option<&Path>) -> Result<Artifacts> {
    let preset = figures::preset(figure, seed)?;
    let mut raw = preset.config;
    raw.output = Some(config::OutputConfig {
        dir: None,
        stem: Some(format!("fig-{}", preset.id)),
    });
    let resolved = resolve(&raw)?;
    let from_figure = preset.from_figure;
    let sources = provenance(&raw, &resolved.config, |key| {
        if key == "seed" {
            Source::CommandLine
        } else if from_figure.contains(&key) {
            Source::FromFigure
        } else {
            Source::DesignDefault
        }
    });
    let dir = output_dir(out, &raw);
    let header = json!({
        "command": "reproduce",
        "figure": { "id": preset.id, "description": preset.description },
    });
    execute(&resolved, sources, header, &dir)
}

fn execute(
    resolved: &Resolved,
    sources: std::collections::BTreeMap<String, Source>,
    header: Value,
    dir: &Path,
) -> Result<Artifacts> {
    let cfg = &resolved.config;
    let stem = cfg.stem();
    let report = runner::execute(&resolved.plan)?;

    let mut log = vec![
        format!("qfi-lab {}", env!("CARGO_PKG_VERSION")),
        format!("kind: {}", cfg.kind.name()),
        format!("seed: {}", cfg.seed),
    ];
    log.extend(report.log.iter().cloned());

    let mut csv = Vec::new();
    let mut files = Vec::new();
    for table in &report.tables {
        let name = output::csv_name(&stem, table);
        csv.push(output::write_file(dir, &name, &output::render_csv(table))?);
        files.push(output::file_entry(&name, table));
        log.push(format!("wrote {name} ({} rows)", table.rows.len()));
    }
    let manifest_name = format!("{stem}.manifest.json");
    let log_name = format!("{stem}.log");
    log.push(format!("wrote {manifest_name}"));

    let mut manifest = json!({
        "tool": "qfi-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config": cfg,
        "provenance": sources,
        "summary": report.summary,
        "files": files,
        "log": log_name,
        "units": {
            "angle": "rad",
            "time": "us",
            "angular_frequency": "rad/us",
            "frequency": "MHz",
        },
    });
    if let (Value::Object(m), Value::Object(h)) = (&mut manifest, header) {
        m.extend(h);
    }
    let manifest_path = output::write_file(dir, &manifest_name, &output::render_json(&manifest))?;
    let log_path = output::write_file(dir, &log_name, &output::render_log(&log))?;
    Ok(Artifacts {
        dir: dir.to_path_buf(),
        csv,
        manifest: manifest_path,
        log: log_path,
    })
}
