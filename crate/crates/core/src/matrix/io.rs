//! Plain-text dense matrix format: first line `n`, then `n` lines of `n`
//! whitespace-separated decimals written with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::DenseSymMatrix;
use crate::error::{Error, Result};

pub fn write_dense<W: Write>(m: &DenseSymMatrix, mut out: W) -> std::io::Result<()> {
    let n = m.n();
    writeln!(out, "{n}")?;
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.16e}", m.get(i, j)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_dense_to_path(m: &DenseSymMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path.as_ref())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
    write_dense(m, std::io::BufWriter::new(file))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))
}

pub fn read_dense(text: &str) -> Result<DenseSymMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line '{}'", header.trim())))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {row}")))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{tok}' in row {row}")))?;
            data.push(v);
        }
        if data.len() - before != n {
            return Err(Error::Parse(format!(
                "row {row} has {} entries, expected {n}",
                data.len() - before
            )));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("trailing data after {n} rows")));
    }
    DenseSymMatrix::from_row_slice(n, &data)
}

pub fn read_dense_from_path(path: impl AsRef<Path>) -> Result<DenseSymMatrix> {
    let text = fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
    read_dense(&text)
}
