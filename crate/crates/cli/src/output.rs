use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column-oriented result set written as CSV or as a JSON array of records.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn csv_body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().cloned())
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes command outputs into the configured directory, atomically.
pub struct Writer<'a> {
    cfg: &'a RunConfig,
    command: &'static str,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(cfg: &'a RunConfig, command: &'static str) -> Self {
        Self {
            cfg,
            command,
            written: Vec::new(),
        }
    }

    fn meta_line(&self) -> String {
        format!(
            "# catability {VERSION} command={} config={} seed={}\n",
            self.command,
            self.cfg.hash(),
            self.cfg.seed
        )
    }

    fn meta(&self) -> Value {
        json!({
            "version": VERSION,
            "command": self.command,
            "config": self.cfg.hash(),
            "seed": self.cfg.seed,
        })
    }

    /// Writes `stem.csv` or `stem.json` according to the output format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        match self.cfg.format {
            Format::Csv => self.csv(stem, table),
            Format::Json => self.json(stem, &table.records()),
        }
    }

    pub fn csv(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let text = format!("{}{}", self.meta_line(), table.csv_body());
        self.raw(&format!("{stem}.csv"), &text)
    }

    /// CSV produced elsewhere (header row included); the metadata line is prepended.
    pub fn csv_text(&mut self, stem: &str, body: &str) -> Result<PathBuf, CliError> {
        let text = format!("{}{body}", self.meta_line());
        self.raw(&format!("{stem}.csv"), &text)
    }

    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<PathBuf, CliError> {
        let doc = json!({ "meta": self.meta(), "result": value });
        let mut text = serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::validation(format!("serialization failed: {e}")))?;
        text.push('\n');
        self.raw(&format!("{stem}.json"), &text)
    }

    pub fn raw(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.cfg.out_dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.cfg.out_dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| CliError::io(e.error))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// JSON number, or null for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn text(s: impl ToString) -> Value {
    Value::String(s.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GlobalArgs;

    fn cfg(dir: &std::path::Path, format: Format) -> RunConfig {
        let args = GlobalArgs {
            out_dir: Some(dir.to_path_buf()),
            format: Some(format),
            ..Default::default()
        };
        RunConfig::resolve(&args, false).unwrap()
    }

    #[test]
    fn csv_has_metadata_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg(dir.path(), Format::Csv);
        let mut t = Table::new(&["eta", "xi", "sign"]);
        t.push(vec![num(0.9), num(0.25), text("-")]);
        t.push(vec![num(1.0), num(f64::NAN), text("+")]);
        let path = Writer::new(&cfg, "test").table("out", &t).unwrap();
        let body = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert!(lines[0].starts_with("# catability "));
        assert!(lines[0].contains("seed=0"));
        assert_eq!(lines[1], "eta,xi,sign");
        assert_eq!(lines[2], "0.9,0.25,-");
        assert_eq!(lines[3], "1.0,,+");
    }

    #[test]
    fn json_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg(dir.path(), Format::Json);
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), text("x")]);
        let path = Writer::new(&cfg, "test").table("out", &t).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["result"][0]["a"], json!(1.5));
        assert_eq!(v["meta"]["command"], json!("test"));
    }
}
