//! Report envelope and rendering.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, Resolved};
use crate::CliError;

pub const SCHEMA: &str = "antimean-report/1";

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    command: &'a str,
    config: &'a Resolved,
    result: Value,
}

/// Writes the report to `--out` or standard output. For `synth` without
/// `--out` the data file already went to standard output, so nothing is
/// printed.
pub fn emit(command: &str, cfg: &Resolved, result: Value) -> Result<(), CliError> {
    if result.is_null() {
        return Ok(());
    }
    let report = Report { schema: SCHEMA, command, config: cfg, result };
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
        Format::Table => render_table(command, &report.result),
    };
    let target = if command == "synth" { None } else { cfg.out.as_ref() };
    match target {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_table(command: &str, result: &Value) -> String {
    let mut out = format!("antimean {command}\n");
    render(&mut out, result, 0);
    out
}

fn number(v: &Value) -> Option<String> {
    let x = v.as_f64()?;
    Some(if v.is_u64() || v.is_i64() {
        format!("{x}")
    } else if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    })
}

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Number(_) => number(v),
        Value::Array(items) if items.iter().all(|i| i.is_number()) => {
            Some(format!("[{}]", items.iter().filter_map(number).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                if k == "pairwise" {
                    render_pairwise(out, item, depth);
                    continue;
                }
                match inline(item) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}{k}: {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{k}:");
                        render(out, item, depth + 1);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match inline(item) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}{s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}-");
                        render(out, item, depth + 1);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", inline(other).unwrap_or_default());
        }
    }
}

/// Pair → Reject/No grid.
fn render_pairwise(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    let Some(rows) = v.as_array() else {
        let _ = writeln!(out, "{pad}pairwise: -");
        return;
    };
    let _ = writeln!(out, "{pad}pairwise:");
    for r in rows {
        let pair = r["pair"].as_array().map(|p| p.iter().filter_map(number).collect::<Vec<_>>().join(",")).unwrap_or_default();
        let decision = r["decision"].as_str().unwrap_or("?");
        let detail = match (&r["statistic"], &r["error"]) {
            (Value::Number(_), _) => format!("statistic {}  p {}", number(&r["statistic"]).unwrap(), number(&r["p_value"]).unwrap_or_default()),
            (_, Value::String(e)) => e.clone(),
            _ => String::new(),
        };
        let _ = writeln!(out, "{pad}  ({pair})  {decision:<6}  {detail}");
    }
}
