//! CSV tables, pass/fail rows and JSON manifests.

use crate::config::ExperimentConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Library modules whose version hashes go into every manifest.
const MODULES: [&str; 9] = ["harmonic", "weights", "czkit", "kreincore", "kreinsol", "remainder", "steklov", "linalg", "quad"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Within(a, b) => v >= a && v <= b,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b}"),
            Bound::Within(a, b) => write!(f, "in [{a}, {b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub parameters: String,
    pub observable: String,
    pub value: f64,
    pub tolerance: String,
    pub pass: bool,
}

impl ReportRow {
    pub fn check(experiment: &str, parameters: impl Into<String>, observable: &str, value: f64, bound: Bound) -> ReportRow {
        ReportRow {
            experiment: experiment.into(),
            parameters: parameters.into(),
            observable: observable.into(),
            value,
            tolerance: bound.to_string(),
            pass: bound.holds(value),
        }
    }

    /// A boolean observable, recorded as 1 or 0.
    pub fn flag(experiment: &str, parameters: impl Into<String>, observable: &str, ok: bool) -> ReportRow {
        ReportRow {
            experiment: experiment.into(),
            parameters: parameters.into(),
            observable: observable.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: "== 1".into(),
            pass: ok,
        }
    }
}

/// A plain table; every cell is already formatted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip float text; identical inputs give identical bytes.
pub fn cell(v: f64) -> String {
    format!("{v:e}")
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn from_rows(rows: &[ReportRow]) -> Table {
        let mut t = Table::new(&["experiment", "parameters", "observable", "value", "tolerance", "pass"]);
        for r in rows {
            t.push(vec![r.experiment.clone(), r.parameters.clone(), r.observable.clone(), cell(r.value), r.tolerance.clone(), r.pass.to_string()]);
        }
        t
    }
}

fn sha256(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// `∫_{|x| > Lambda} |w - 1|^p` from the weight's closed form.
    pub tail_bound: Option<f64>,
    pub module_hashes: Vec<(String, String)>,
    pub csv_sha256: String,
    pub summary: serde_json::Value,
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(experiment: &str, config: &ExperimentConfig, table: &Table, summary: serde_json::Value) -> Manifest {
        let tail_bound = config.weight().ok().map(|w| w.tail_bound(config.lambda, config.p));
        Manifest {
            experiment: experiment.into(),
            version: VERSION.into(),
            config: config.clone(),
            tail_bound,
            module_hashes: MODULES.iter().map(|m| (m.to_string(), sha256(&format!("krein-{VERSION}/{m}")))).collect(),
            csv_sha256: sha256(&table.to_csv()),
            summary,
            error: None,
        }
    }
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`, or the CSV to stdout when
/// `dir` is `None`.
pub fn emit(dir: Option<&str>, name: &str, table: &Table, manifest: &Manifest) -> std::io::Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            std::fs::write(Path::new(d).join(format!("{name}.csv")), table.to_csv())?;
            let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
            std::fs::write(Path::new(d).join(format!("{name}.json")), json)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(table.to_csv().as_bytes())?;
            out.flush()
        }
    }
}
