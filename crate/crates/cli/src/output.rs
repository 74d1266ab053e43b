//! Table output in text, CSV or JSON.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use qmc_sphere::experiments::{write_csv, write_json, Envelope};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Writes `rows` as table `table`. CSV and text carry the seed in a leading
/// `#` line; JSON carries it in the envelope.
pub fn emit<T: Serialize>(format: Format, table: &str, seed: Option<u64>, rows: &[T]) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            let env = Envelope::new(table, seed, rows.iter().collect::<Vec<_>>());
            write_json(&env, &mut out)?;
        }
        Format::Csv => {
            if let Some(s) = seed {
                writeln!(out, "# table={table} seed={s}")?;
            }
            write_csv(rows, &mut out)?;
        }
        Format::Text => {
            let values: Vec<Value> = rows.iter().map(serde_json::to_value).collect::<Result<_, _>>()?;
            write!(out, "{}", render_text(table, seed, &values))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_text(table: &str, seed: Option<u64>, rows: &[Value]) -> String {
    let mut s = format!("# {table}");
    if let Some(seed) = seed {
        s += &format!(" seed={seed}");
    }
    s.push('\n');
    let Some(Value::Object(first)) = rows.first() else {
        return s;
    };
    let keys: Vec<&String> = first.keys().collect();
    if rows.len() == 1 {
        let w = keys.iter().map(|k| k.len()).max().unwrap_or(0);
        for k in &keys {
            s += &format!("{k:<w$}  {}\n", cell(&first[k.as_str()]));
        }
        return s;
    }
    let grid: Vec<Vec<String>> = rows
        .iter()
        .map(|r| keys.iter().map(|k| cell(&r[k.as_str()])).collect())
        .collect();
    let widths: Vec<usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| grid.iter().map(|r| r[i].len()).max().unwrap_or(0).max(k.len()))
        .collect();
    let line = |cells: Vec<&str>| {
        let mut l = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        l.truncate(l.trim_end().len());
        l + "\n"
    };
    s += &line(keys.iter().map(|k| k.as_str()).collect());
    for r in &grid {
        s += &line(r.iter().map(String::as_str).collect());
    }
    s
}
