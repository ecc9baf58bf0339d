use std::fs;
use std::path::{Path, PathBuf};

use hyperqubit::linalg::ComplexOperator;
use serde::Serialize;

use crate::error::CliError;

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_json(m: &ComplexOperator) -> MatrixJson {
    (0..m.dim()).map(|r| (0..m.dim()).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect()).collect()
}

/// Where results for one run go.
pub struct Sink {
    dir: PathBuf,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
        for row in rows {
            w.serialize(row).map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Serialize)]
pub struct MatrixRow<'a> {
    pub basis: &'a str,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

pub fn matrix_rows<'a>(basis: &'a str, m: &ComplexOperator) -> Vec<MatrixRow<'a>> {
    let n = m.dim();
    (0..n * n)
        .map(|i| {
            let (row, col) = (i / n, i % n);
            let z = m.get(row, col);
            MatrixRow { basis, row, col, re: z.re, im: z.im }
        })
        .collect()
}
