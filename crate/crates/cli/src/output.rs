use std::path::Path;

use serde_json::Value;

use crate::run::Row;

/// Nested keys joined with `.`; numbers keep their JSON spelling so both encodings agree.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn flatten_row(row: &Row) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in row {
        flatten(k, v, &mut out);
    }
    out
}

/// Rows with differing null structure share the header of the union of columns.
pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), Box<dyn std::error::Error>> {
    let flat: Vec<Vec<(String, String)>> = rows.iter().map(flatten_row).collect();
    let mut header: Vec<String> = Vec::new();
    for r in &flat {
        for (k, _) in r {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for r in &flat {
        let cells = header.iter().map(|h| r.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()));
        w.write_record(cells)?;
    }
    w.flush()?;
    Ok(())
}
