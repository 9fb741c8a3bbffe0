use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Format;

/// A finished run: the report, its named checks and an optional table used
/// for CSV output.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub checks: Vec<(String, bool)>,
    pub table: Option<Table>,
}

#[derive(Debug)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Outcome {
    pub fn new<R: Serialize>(report: &R) -> Result<Self, CliError> {
        let report = serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self {
            report,
            checks: Vec::new(),
            table: None,
        })
    }

    pub fn check(mut self, name: &str, ok: bool) -> Self {
        self.checks.push((name.to_string(), ok));
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn envelope(&self, command: &str) -> Value {
        let checks: Map<String, Value> = self
            .checks
            .iter()
            .map(|(n, ok)| (n.clone(), Value::Bool(*ok)))
            .collect();
        json!({
            "command": command,
            "pass": self.pass(),
            "checks": checks,
            "report": self.report,
        })
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
    Assertion(Vec<String>),
}

impl CliError {
    /// Prints the JSON error record and returns the matching exit code.
    pub fn report(self) -> ExitCode {
        let (kind, message, code) = match self {
            CliError::Usage(m) => ("usage", m, 2),
            CliError::Validation(m) => ("validation", m, 2),
            CliError::Io(m) => ("io", m, 2),
            CliError::Assertion(failed) => ("assertion", format!("failed checks: {}", failed.join(", ")), 1),
        };
        let record = json!({ "error": { "kind": kind, "message": message.trim_end() } });
        eprintln!("{record}");
        ExitCode::from(code)
    }
}

impl From<largesieve::Error> for CliError {
    fn from(e: largesieve::Error) -> Self {
        match e {
            largesieve::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn render(command: &str, outcome: &Outcome, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&outcome.envelope(command)).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            match &outcome.table {
                Some(t) => {
                    w.write_record(&t.headers)?;
                    for row in &t.rows {
                        w.write_record(row)?;
                    }
                }
                None => {
                    w.write_record(["key", "value"])?;
                    let mut flat = Vec::new();
                    flatten("", &outcome.envelope(command), &mut flat);
                    for (k, v) in flat {
                        w.write_record([k, v])?;
                    }
                }
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Dotted paths to every scalar leaf; arrays use their indices.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn emit(
    command: &str,
    outcome: &Outcome,
    format: Format,
    output: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = render(command, outcome, format)?;
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let target = match (output, out_dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => {
            fs::create_dir_all(dir)?;
            Some(dir.join(format!("{command}.{ext}")))
        }
        (None, None) => None,
    };
    match target {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let mut out = Vec::new();
        flatten("", &json!({"a": {"b": [1, "x"], "c": null}, "d": true}), &mut out);
        let keys: Vec<&str> = out.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["a.b.0", "a.b.1", "a.c", "d"]);
        assert_eq!(out[1].1, "x");
        assert_eq!(out[3].1, "true");
    }

    #[test]
    fn pass_requires_every_check() {
        let o = Outcome::new(&json!({})).unwrap().check("a", true);
        assert!(o.pass());
        let o = o.check("b", false);
        assert!(!o.pass());
        assert_eq!(o.failed_checks(), ["b"]);
    }
}
