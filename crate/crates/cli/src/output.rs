//! Report emission. CSV is a flattening of the JSON into `path,value` rows.

use std::fs;
use std::io::Write;

use serde_json::Value;

use crate::commands::Failure;
use crate::{Format, RunConfig};

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

pub fn emit(report: &Value, run: &RunConfig) -> Result<(), Failure> {
    let text = match run.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(io_failure)?;
            s.push('\n');
            s
        }
        Format::Csv => to_csv(report)?,
    };
    match &run.out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&join(k), x, rows)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

pub fn to_csv(report: &Value) -> Result<String, Failure> {
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "value"]).map_err(io_failure)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(io_failure)?;
    }
    String::from_utf8(w.into_inner().map_err(io_failure)?).map_err(io_failure)
}
