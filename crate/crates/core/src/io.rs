//! Plain-text serialization: a matrix file format for operators, and CSV
//! and JSON helpers for tables and reports.
//!
//! Matrix files start with one header line
//! `# D=<dim> basis=<tag> label=<label>` followed by `D` rows, each holding
//! `D` complex entries written as `re im` pairs separated by spaces.
//! Floats use Rust's shortest round-trip formatting, so reading a file back
//! reproduces the matrix bit for bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::{c64, Mat};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{BasisTag, Operator};

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Renders an operator in the matrix file format.
pub fn matrix_to_string(op: &Operator) -> String {
    let d = op.dim();
    let mut out = String::with_capacity(d * d * 48 + 64);
    let _ = writeln!(out, "# D={d} basis={} label={}", op.basis, op.label.replace('\n', " "));
    for i in 0..d {
        for j in 0..d {
            let z = op.mat[(i, j)];
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{} {}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, op: &Operator) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(matrix_to_string(op).as_bytes())?;
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, BasisTag, String)> {
    let rest = match line.strip_prefix("# D=") {
        Some(r) => r,
        None => return format_err(format!("bad matrix header: {line:?}")),
    };
    let (d, rest) = rest
        .split_once(" basis=")
        .ok_or_else(|| Error::Format(format!("header lacks basis tag: {line:?}")))?;
    let (tag, label) = rest
        .split_once(" label=")
        .ok_or_else(|| Error::Format(format!("header lacks label: {line:?}")))?;
    let d: usize = d.parse().map_err(|_| Error::Format(format!("bad dimension {d:?}")))?;
    let tag: BasisTag = tag.parse()?;
    Ok((d, tag, label.to_string()))
}

/// Parses the matrix file format.
pub fn read_matrix_from(reader: impl Read) -> Result<Operator> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return format_err("empty matrix file"),
    };
    let (d, tag, label) = parse_header(header.trim_end())?;
    let mut m = Mat::<c64>::zeros(d, d);
    for i in 0..d {
        let line = match lines.next() {
            Some(l) => l?,
            None => return format_err(format!("matrix file ends after {i} of {d} rows")),
        };
        let nums: Vec<&str> = line.split_ascii_whitespace().collect();
        if nums.len() != 2 * d {
            return format_err(format!("row {i} has {} numbers, expected {}", nums.len(), 2 * d));
        }
        for j in 0..d {
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {i}: bad number {s:?}")))
            };
            m[(i, j)] = c64::new(parse(nums[2 * j])?, parse(nums[2 * j + 1])?);
        }
    }
    for line in lines {
        if !line?.trim().is_empty() {
            return format_err("trailing data after the last matrix row");
        }
    }
    Operator::new(m, tag, label).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Operator> {
    read_matrix_from(File::open(path)?)
}

/// Writes records as comma-separated values with a header row.
pub fn write_csv<T: Serialize>(writer: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(reader: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_json<T: Serialize>(writer: impl Write, value: &T) -> Result<()> {
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(reader: impl Read) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(reader))?)
}
