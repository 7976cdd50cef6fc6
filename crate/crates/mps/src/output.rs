//! CSV output: one header line, then records with floats in scientific
//! notation at 17 significant digits.

use std::fs::File;
use std::io;
use std::path::Path;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    inner: csv::Writer<File>,
}

impl Csv {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(header)?;
        Ok(Csv { inner })
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: impl IntoIterator<Item = S>) -> io::Result<()> {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes a matrix as CSV rows without a header.
pub fn matrix(path: &Path, m: &ndarray::Array2<f64>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| num(*v)))?;
    }
    w.flush()
}
