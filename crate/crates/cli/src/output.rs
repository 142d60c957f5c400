//! Artifact writers. Everything written here is a pure function of the resolved
//! config and the report, so repeated runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::runner::{Cell, Table};

/// Seventeen significant digits: enough to round-trip any f64.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    let header: Vec<String> = table.headers.iter().map(|h| quote(h)).collect();
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Real(x) => format_real(*x),
                Cell::Int(n) => n.to_string(),
                Cell::Missing => String::new(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push_str("\r\n");
    }
    out
}

pub fn csv_name(stem: &str, table: &Table) -> String {
    if table.suffix.is_empty() {
        format!("{stem}.csv")
    } else {
        format!("{stem}-{}.csv", table.suffix)
    }
}

pub fn file_entry(name: &str, table: &Table) -> Value {
    json!({
        "path": name,
        "columns": table.headers,
        "rows": table.rows.len(),
    })
}

pub fn render_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serialises");
    s.push('\n');
    s
}

pub fn render_log(lines: &[String]) -> String {
    let mut out = String::new();
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_through_text() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            std::f64::consts::PI,
        ] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s.split('e').next().unwrap();
            let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn csv_quotes_and_leaves_gaps() {
        let t = Table {
            suffix: String::new(),
            headers: vec!["a_us".into(), "b,c".into()],
            rows: vec![vec![Cell::Int(3), Cell::Missing]],
        };
        assert_eq!(render_csv(&t), "a_us,\"b,c\"\r\n3,\r\n");
    }
}
