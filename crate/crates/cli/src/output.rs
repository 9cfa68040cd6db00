//! CSV tables with a header row and shortest round-trip float formatting.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            context: "csv".into(),
            source: std::io::Error::other(e.to_string()),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()?).map_err(CliError::io(format!("cannot write {}", path.display())))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Every entry of `m` as `i,j,value` rows.
pub fn matrix_table(m: &DMatrix<f64>) -> Table {
    let mut t = Table::new(&["i", "j", "value"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.push(vec![i.to_string(), j.to_string(), num(m[(i, j)])]);
        }
    }
    t
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("cannot create {}", dir.display())))?;
    Ok(dir.to_path_buf())
}
