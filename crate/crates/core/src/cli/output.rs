//! CSV / JSON artifacts with an embedded config header.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::config::{Format, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BURNS_OUT_DIR";

/// One result, renderable either as a table or as a JSON document.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Top-level JSON fields (the config is added on render).
    pub doc: Map<String, Value>,
    /// Headline numbers repeated in the one-line summary.
    pub summary: Map<String, Value>,
}

impl Artifact {
    pub fn new(columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            doc: Map::new(),
            summary: Map::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &RunConfig) -> String {
        match config.format {
            Format::Csv => self.to_csv(config),
            Format::Json => self.to_json(config),
        }
    }

    fn to_csv(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        let meta = serde_json::to_string(config).expect("config serializes");
        writeln!(out, "# {meta}").unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    fn to_json(&self, config: &RunConfig) -> String {
        let mut doc = Map::new();
        doc.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        for (k, v) in &self.doc {
            doc.insert(k.clone(), v.clone());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("values are finite or null");
        s.push('\n');
        s
    }
}

pub fn cjson(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn fstr(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Resolved destination: `None` means stdout. A relative `--output` is
/// taken inside the default directory when one is set.
pub fn resolve_output(config: &RunConfig, out_dir: Option<&Path>) -> Option<PathBuf> {
    match (&config.output, out_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{}.{}", config.file_stem(), config.format.extension()))),
        (None, None) => None,
    }
}

pub fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
}

pub fn write_stdout(contents: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(contents.as_bytes())?;
    out.flush()
}
