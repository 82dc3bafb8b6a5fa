//! Result files: one JSON summary per run, CSV tables and density files.
//! Nothing is written until the computation has finished.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qfisher::GridDensity;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Fixed-precision float formatting so reruns are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Default)]
pub struct Report {
    pub summary: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub tables: Vec<Table>,
    pub densities: Vec<(String, GridDensity)>,
    /// Checked inequalities that failed; a non-empty list means exit 2.
    pub violations: Vec<String>,
}

impl Report {
    pub fn set(&mut self, key: &str, value: impl serde::Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).expect("summary values serialize"));
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.tolerances.insert(key.into(), json!(value));
    }

    pub fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }
}

pub fn write(dir: &Path, command: &str, config_echo: Value, report: &Report) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &report.tables {
        let name = format!("{}.csv", t.name);
        fs::write(dir.join(&name), t.render())?;
        files.push(name);
    }
    for (stem, d) in &report.densities {
        let json_name = format!("{stem}.json");
        d.write_json(&dir.join(&json_name)).map_err(crate::error::at("grid"))?;
        let mut csv = Vec::new();
        d.write_csv(&mut csv).map_err(crate::error::at("grid"))?;
        let csv_name = format!("{stem}.csv");
        fs::write(dir.join(&csv_name), csv)?;
        files.push(json_name);
        files.push(csv_name);
    }
    let mut doc = Map::new();
    doc.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(command));
    doc.insert("config_echo".into(), config_echo);
    doc.insert("tolerances".into(), Value::Object(report.tolerances.clone()));
    for (k, v) in &report.summary {
        doc.insert(k.clone(), v.clone());
    }
    doc.insert("violations".into(), json!(report.violations));
    doc.insert("files".into(), json!(files));
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("summary serializes");
    fs::write(dir.join(format!("{command}.json")), text + "\n")?;
    Ok(())
}
