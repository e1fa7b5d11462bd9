//! `.sten` tensor files and assignment CSVs.
//!
//! A `.sten` file holds the order `d` on the first line, the `d` mode sizes
//! on the second, then exactly `∏ n_j` whitespace-separated values in
//! column-major order.

use std::fmt::Write as _;
use std::path::Path;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub fn parse_sten(text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines();
    let d: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty tensor file".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("first line must be the tensor order".into()))?;
    let shape: Vec<usize> = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dimension line".into()))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad dimension '{s}'"))))
        .collect::<Result<_>>()?;
    if shape.len() != d {
        return Err(Error::Parse(format!("order {d} but {} dimensions", shape.len())));
    }
    let data: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad value '{s}'"))))
        .collect::<Result<_>>()?;
    let expected: usize = shape.iter().product();
    if data.len() != expected {
        return Err(Error::Parse(format!("expected {expected} values, found {}", data.len())));
    }
    DenseTensor::new(shape, data)
}

/// Values with 17 significant digits, one per line.
pub fn format_sten(t: &DenseTensor) -> String {
    let mut out = String::with_capacity(24 * t.len() + 32);
    let _ = writeln!(out, "{}", t.order());
    let dims: Vec<String> = t.shape().iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "{}", dims.join(" "));
    for v in t.data() {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

pub fn read_sten(path: &Path) -> Result<DenseTensor> {
    parse_sten(&std::fs::read_to_string(path)?)
}

pub fn write_sten(path: &Path, t: &DenseTensor) -> Result<()> {
    std::fs::write(path, format_sten(t))?;
    Ok(())
}

/// Every `*.sten` file in `dir`, in file-name order.
pub fn read_sample_dir(dir: &Path) -> Result<Vec<DenseTensor>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "sten"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no .sten files in {}", dir.display())));
    }
    paths.iter().map(|p| read_sten(p)).collect()
}

/// Samples from a directory of equal-shape files, or from one stacked file
/// whose last mode indexes samples.
pub fn read_samples(path: &Path) -> Result<Vec<DenseTensor>> {
    if path.is_dir() {
        return read_sample_dir(path);
    }
    let t = read_sten(path)?;
    let n = *t.shape().last().expect("order at least 1");
    (0..n).map(|i| t.last_mode_slice(i)).collect()
}

/// CSV `sample_index,label`, both 1-based.
pub fn write_assignment<W: std::io::Write>(w: W, a: &ClusterAssignment) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["sample_index", "label"])?;
    for (i, l) in a.labels().iter().enumerate() {
        csv.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_assignment_csv(path: &Path, a: &ClusterAssignment) -> Result<()> {
    write_assignment(std::fs::File::create(path)?, a)
}
