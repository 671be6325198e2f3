use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndpo_core::FringePattern;
use serde::Serialize;

use crate::config::{Format, OutputSpec};
use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: round-trips every f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC 4180 quoting for free-text fields.
pub fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

pub fn fringe_csv(pattern: &FringePattern) -> String {
    let mut out = String::from("phi,rate,log_rate,normalized\n");
    for i in 0..pattern.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(pattern.phi_grid[i]),
            num(pattern.rates[i]),
            num(pattern.log_rates[i]),
            num(pattern.normalized[i])
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// A command's result: the table itself plus a JSON description of how it
/// was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv: String,
    pub sidecar: serde_json::Value,
}

impl Artifacts {
    /// Everything as one JSON document (`--format json`).
    pub fn combined_json(&self, rows: serde_json::Value) -> String {
        let mut doc = self.sidecar.clone();
        if let serde_json::Value::Object(map) = &mut doc {
            map.insert("rows".into(), rows);
        }
        to_json(&doc)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// CSV to `path` with the sidecar next to it at `path.json`, or CSV to
/// stdout when no path is given. With `Format::Json` a single JSON document
/// (sidecar plus `rows`) replaces both.
pub fn emit(artifacts: &Artifacts, rows: impl FnOnce() -> serde_json::Value, spec: &OutputSpec) -> Result<()> {
    match (spec.format, &spec.path) {
        (Format::Csv, Some(path)) => {
            write_file(path, &artifacts.csv)?;
            write_file(&sidecar_path(path), &to_json(&artifacts.sidecar))
        }
        (Format::Csv, None) => write_stdout(&artifacts.csv),
        (Format::Json, Some(path)) => write_file(path, &artifacts.combined_json(rows())),
        (Format::Json, None) => write_stdout(&artifacts.combined_json(rows())),
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

pub fn write_stdout(content: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(content.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

/// Parses the CSV written by this crate back into columns of floats.
pub fn parse_numeric_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(str::to_owned).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}
