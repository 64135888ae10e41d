//! CSV and manifest writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Writes `t,<column>` followed by one row per sample, full precision.
pub fn emit_series<W: Write>(w: &mut W, column: &str, series: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "t,{column}")?;
    for &(t, v) in series {
        writeln!(w, "{t:.16e},{v:.16e}")?;
    }
    Ok(())
}

/// Formats an optional float for a CSV cell; missing values stay empty.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn write_series(path: &Path, column: &str, series: &[(f64, f64)]) -> Result<(), CliError> {
    write_file(path, |w| emit_series(w, column, series))
}

/// Default manifest path next to the CSV: `out.csv` -> `out.manifest.json`.
pub fn default_manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Sibling series file for one bath size of a scaling run.
pub fn scaling_series_path(out: &Path, n: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scaling".into());
    out.with_file_name(format!("{stem}.n{n}.csv"))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub parameters: Map<String, Value>,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: Map<String, Value>,
    pub command_line: String,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }
}

/// Serializes a parameter struct, dropping unset fields.
pub fn parameter_map<T: Serialize>(params: &T) -> Map<String, Value> {
    match serde_json::to_value(params) {
        Ok(Value::Object(map)) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// A shell command line that reruns with the same parameters.
pub fn command_line(subcommand: &str, parameters: &Map<String, Value>, out: &Path) -> String {
    let mut parts = vec!["spinbath".to_string(), subcommand.to_string()];
    for (key, value) in parameters {
        parts.push(format!("--{key}"));
        parts.push(match value {
            Value::String(s) => shell_quote(s),
            other => other.to_string(),
        });
    }
    parts.push("--out".into());
    parts.push(shell_quote(&out.to_string_lossy()));
    parts.join(" ")
}

fn shell_quote(s: &str) -> String {
    if !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./,=+".contains(c))
    {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}
