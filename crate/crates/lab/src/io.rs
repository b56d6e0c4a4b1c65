//! CSV artifacts and the JSON run summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nlkpp_core::{Domain, Trajectory};
use serde::Serialize;

use crate::LabError;

/// Schema tag written into every summary.
pub const SUMMARY_SCHEMA: &str = "nlkpp.summary/1";

fn create(path: &Path) -> Result<File, LabError> {
    File::create(path).map_err(|e| LabError::Io { path: path.to_owned(), source: e })
}

fn header(domain: &Domain, with_time: bool, value: &str) -> Vec<String> {
    let mut h = Vec::new();
    if with_time {
        h.push("t".to_string());
    }
    for name in ["x", "y"].iter().take(domain.dim()) {
        h.push(name.to_string());
    }
    h.push(value.to_string());
    h
}

fn coords(domain: &Domain, i: usize) -> impl Iterator<Item = String> {
    let p = domain.point(i);
    (0..domain.dim()).map(move |a| p[a].to_string())
}

/// Long format: one row `t, x[, y], u` per stored time and node.
pub fn write_trajectory(path: &Path, domain: &Domain, traj: &Trajectory) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    w.write_record(header(domain, true, "u"))?;
    for f in &traj.fields {
        for (i, v) in f.values.iter().enumerate() {
            let mut row = vec![f.t.to_string()];
            row.extend(coords(domain, i));
            row.push(v.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| LabError::Io { path: path.to_owned(), source: e })
}

/// One row `x[, y], value` per node.
pub fn write_field(path: &Path, domain: &Domain, name: &str, values: &[f64]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    w.write_record(header(domain, false, name))?;
    for (i, v) in values.iter().enumerate() {
        let mut row: Vec<String> = coords(domain, i).collect();
        row.push(v.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| LabError::Io { path: path.to_owned(), source: e })
}

/// Two-column table `name1, name2`.
pub fn write_series(path: &Path, names: [&str; 2], rows: impl IntoIterator<Item = (f64, f64)>) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    w.write_record(names)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush().map_err(|e| LabError::Io { path: path.to_owned(), source: e })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| LabError::Io { path: path.to_owned(), source: e })
}
