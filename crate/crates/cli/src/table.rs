//! Result tables and their CSV / JSON serialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    /// 17 significant digits round-trip every double.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Real(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub seed: Option<u64>,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("expected csv or json, got {other}")),
        }
    }
}

impl ResultTable {
    pub fn new(metadata: Metadata, columns: Vec<String>) -> Self {
        Self { metadata, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Abort on the first non-finite value, naming it.
    pub fn check_finite(&self) -> Result<(), CliError> {
        for (i, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Cell::Real(v) = cell {
                    if !v.is_finite() {
                        return Err(CliError::Numeric(format!("{} = {v} in row {}", self.columns[c], i + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self, format: Format) -> Result<Vec<u8>, CliError> {
        self.check_finite()?;
        match format {
            Format::Csv => {
                // Metadata leads as `#` lines; readers skip them with `comment(Some(b'#'))`.
                let m = &self.metadata;
                let mut head = format!("# command: {}\n# seed: ", m.command);
                head.push_str(&m.seed.map_or("none".to_string(), |s| s.to_string()));
                head.push_str(&format!("\n# version: {}\n", m.version));
                for note in &m.notes {
                    head.push_str(&format!("# note: {note}\n"));
                }
                let mut w = csv::Writer::from_writer(head.into_bytes());
                w.write_record(&self.columns).map_err(io_error)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render)).map_err(io_error)?;
                }
                w.into_inner().map_err(|e| CliError::Io(e.to_string()))
            }
            Format::Json => {
                let mut v = serde_json::to_vec_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
                v.push(b'\n');
                Ok(v)
            }
        }
    }

    /// Write to `out`, or stdout when absent.
    pub fn write(&self, out: Option<&Path>, format: Format) -> Result<(), CliError> {
        let bytes = self.to_bytes(format)?;
        match out {
            Some(p) => fs::write(p, bytes).map_err(|e| CliError::config("out", format!("{}: {e}", p.display()))),
            None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
        }
    }
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Run facts that vary between identical runs, kept beside the output.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub metadata: &'a Metadata,
    pub wall_time_seconds: f64,
    pub threads: usize,
}

pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let meta = Metadata { command: "schmidt kernel --n 2".into(), seed: None, version: "0", notes: vec![] };
        let mut t = ResultTable::new(meta, vec!["k".into(), "x".into()]);
        t.push(vec![Cell::Int(3), Cell::Real(0.1)]);
        t.push(vec![Cell::Int(-1), Cell::Real(1.0 / 3.0)]);
        t
    }

    #[test]
    fn csv_round_trips() {
        let bytes = table().to_bytes(Format::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# command: schmidt kernel --n 2\n# seed: none\n# version: 0\nk,x\n3,1.0000000000000001e-1\n"));
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn json_shape() {
        let v: serde_json::Value = serde_json::from_slice(&table().to_bytes(Format::Json).unwrap()).unwrap();
        assert_eq!(v["metadata"]["command"], "schmidt kernel --n 2");
        assert_eq!(v["rows"][1][1].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn non_finite_aborts() {
        let mut t = table();
        t.push(vec![Cell::Int(0), Cell::Real(f64::NAN)]);
        assert!(matches!(t.to_bytes(Format::Csv), Err(CliError::Numeric(m)) if m.contains("x = NaN in row 3")));
    }
}
