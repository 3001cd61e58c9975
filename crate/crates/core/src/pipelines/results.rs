//! Results directory: inputs.json, CSV tables, SVG plots and report.json.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use super::plot::Plot;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct ResultsDir {
    root: PathBuf,
}

impl ResultsDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(Self { root: root.as_ref().to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        fs::write(&p, body)?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn write_inputs<T: Serialize>(&self, inputs: &T) -> Result<PathBuf> {
        self.write_json("inputs.json", inputs)
    }

    pub fn write_report<T: Serialize>(&self, report: &T) -> Result<PathBuf> {
        self.write_json("report.json", report)
    }

    /// Writes a table with a header row; values use the shortest round-trip formatting.
    pub fn write_table(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write(name, &String::from_utf8_lossy(&bytes))
    }

    pub fn write_text(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write(name, body)
    }

    pub fn write_plot(&self, name: &str, plot: &Plot) -> Result<PathBuf> {
        self.write(name, &plot.to_svg())
    }
}
