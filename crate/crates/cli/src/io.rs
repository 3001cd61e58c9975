//! Device lookup and CSV column input.

use std::path::Path;

use emech::device_file::{bundled_devices, load_devices};
use emech::DeviceRecordF64;

use crate::{CliError, CliResult};

pub fn device(table: Option<&Path>, id: &str) -> CliResult<DeviceRecordF64> {
    let all = match table {
        Some(p) => load_devices(p)?,
        None => bundled_devices(),
    };
    let ids: Vec<String> = all.iter().map(|d| d.id.clone()).collect();
    all.into_iter()
        .find(|d| d.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| CliError::Usage(format!("unknown device `{id}` (available: {})", ids.join(", "))))
}

/// Numeric columns of a CSV file with a header row. `#` starts a comment.
pub struct Columns {
    pub header: Vec<String>,
    pub cols: Vec<Vec<f64>>,
}

pub fn read_columns(path: &Path, min_cols: usize) -> CliResult<Columns> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_columns(&text, min_cols)
}

pub fn parse_columns(text: &str, min_cols: usize) -> CliResult<Columns> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < min_cols {
        return Err(CliError::Data(format!("expected at least {min_cols} columns, found {}", header.len())));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| CliError::Data(e.to_string()))?;
        for (k, col) in cols.iter_mut().enumerate() {
            let v = row
                .get(k)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| CliError::Data(format!("line {}: column `{}` is not a number", i + 2, header[k])))?;
            col.push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Ok(Columns { header, cols })
}
