//! Plain-text file formats.
//!
//! Matrices and vectors: a header line `m,N,mode,seed` (seed `none` when
//! unknown) followed by `m` comma-separated rows. Quantizers: `M`, then the
//! levels, then the finite thresholds, each line space-separated. Prefix
//! codes: one `index:bits` line per codeword.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::model::{MatrixMode, MeasurementMatrix, SparseSignal};
use crate::quant::{PrefixCode, ScalarQuantizer};
use crate::{Error, Result};

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{}`", s.trim())))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("not a count: `{}`", s.trim())))
}

struct Table {
    mode: String,
    seed: Option<u64>,
    entries: DMatrix<f64>,
}

fn format_table(entries: &DMatrix<f64>, mode: &str, seed: Option<u64>) -> String {
    let mut out = String::new();
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(out, "{},{},{mode},{seed}", entries.nrows(), entries.ncols()).unwrap();
    for i in 0..entries.nrows() {
        let row: Vec<String> = (0..entries.ncols()).map(|j| format!("{:e}", entries[(i, j)])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!("header `{header}` is not m,N,mode,seed")));
    }
    let (m, n) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
    let seed = match fields[3] {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| Error::Parse(format!("bad seed `{s}`")))?),
    };
    let mut data = Vec::with_capacity(m * n);
    let mut rows = 0;
    for line in lines {
        let row = line.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
        }
        data.extend(row);
        rows += 1;
    }
    if rows != m {
        return Err(Error::DimensionMismatch { expected: m, actual: rows });
    }
    Ok(Table { mode: fields[2].to_string(), seed, entries: DMatrix::from_row_slice(m, n, &data) })
}

pub fn format_matrix(phi: &MeasurementMatrix) -> String {
    format_table(phi.entries(), &phi.mode().to_string(), phi.seed())
}

pub fn parse_matrix(text: &str) -> Result<MeasurementMatrix> {
    let t = parse_table(text)?;
    MeasurementMatrix::from_entries(t.entries, t.mode.parse::<MatrixMode>()?, t.seed)
}

pub fn write_matrix(path: &Path, phi: &MeasurementMatrix) -> Result<()> {
    Ok(fs::write(path, format_matrix(phi))?)
}

pub fn read_matrix(path: &Path) -> Result<MeasurementMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// A length-`m` vector as an `m × 1` table with mode `vector`.
pub fn format_vector(v: &DVector<f64>, seed: Option<u64>) -> String {
    format_table(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), "vector", seed)
}

/// Reads the table format with a single column, or bare numbers one per line.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.split(',').count() == 4 {
        let t = parse_table(text)?;
        if t.entries.ncols() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, actual: t.entries.ncols() });
        }
        return Ok(t.entries.column(0).into_owned());
    }
    let vals = text.lines().filter(|l| !l.trim().is_empty()).map(parse_f64).collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(vals))
}

pub fn write_vector(path: &Path, v: &DVector<f64>, seed: Option<u64>) -> Result<()> {
    Ok(fs::write(path, format_vector(v, seed))?)
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn format_signal(x: &SparseSignal, seed: Option<u64>) -> String {
    let v = x.values();
    format_table(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), "signal", seed)
}

pub fn format_quantizer(q: &ScalarQuantizer) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
    format!("{}\n{}\n{}\n", q.len(), join(q.levels()), join(q.thresholds()))
}

pub fn parse_quantizer(text: &str) -> Result<ScalarQuantizer> {
    let mut lines = text.lines();
    let m = parse_usize(lines.next().ok_or_else(|| Error::Parse("missing level count".into()))?)?;
    let nums = |l: Option<&str>| -> Result<Vec<f64>> { l.unwrap_or("").split_whitespace().map(parse_f64).collect() };
    let levels = nums(lines.next())?;
    let thresholds = nums(lines.next())?;
    if levels.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: levels.len() });
    }
    ScalarQuantizer::new(levels, thresholds)
}

pub fn write_quantizer(path: &Path, q: &ScalarQuantizer) -> Result<()> {
    Ok(fs::write(path, format_quantizer(q))?)
}

pub fn read_quantizer(path: &Path) -> Result<ScalarQuantizer> {
    parse_quantizer(&fs::read_to_string(path)?)
}

pub fn format_prefix_code(code: &PrefixCode) -> String {
    code.codewords().iter().enumerate().map(|(i, c)| format!("{i}:{c}\n")).collect()
}

pub fn parse_prefix_code(text: &str) -> Result<PrefixCode> {
    let mut entries: Vec<(usize, String)> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (i, bits) = line.split_once(':').ok_or_else(|| Error::Parse(format!("expected index:bits, got `{line}`")))?;
        entries.push((parse_usize(i)?, bits.trim().to_string()));
    }
    entries.sort_by_key(|e| e.0);
    if entries.iter().enumerate().any(|(k, e)| e.0 != k) {
        return Err(Error::Parse("codeword indices must be 0..M without gaps".into()));
    }
    PrefixCode::new(entries.into_iter().map(|e| e.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_gaussian_matrix, GenMode};
    use crate::quant::huffman;

    #[test]
    fn matrix_round_trip() {
        let phi = gen_gaussian_matrix(5, 7, 42, GenMode::ColumnNormalized).unwrap();
        let text = format_matrix(&phi);
        assert!(text.starts_with("5,7,column_normalized,42\n"));
        let back = parse_matrix(&text).unwrap();
        assert_eq!(back, phi);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        write_matrix(&path, &phi).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), phi);
    }

    #[test]
    fn vector_forms() {
        let v = DVector::from_vec(vec![1.5, -2.25e-17, 3.0]);
        assert_eq!(parse_vector(&format_vector(&v, None)).unwrap(), v);
        assert_eq!(parse_vector("1.5\n-2.25e-17\n3\n").unwrap(), v);
        assert!(parse_vector("3,2,vector,none\n1,2\n").is_err());
    }

    #[test]
    fn quantizer_and_code_round_trip() {
        let q = ScalarQuantizer::from_levels(vec![-1.2, 0.1, 0.7, 3.0]).unwrap();
        assert_eq!(parse_quantizer(&format_quantizer(&q)).unwrap(), q);
        let single = ScalarQuantizer::from_levels(vec![0.0]).unwrap();
        assert_eq!(parse_quantizer(&format_quantizer(&single)).unwrap(), single);

        let code = huffman(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        let text = format_prefix_code(&code);
        assert_eq!(text.lines().next().unwrap(), "0:0");
        assert_eq!(parse_prefix_code(&text).unwrap(), code);
        assert!(parse_prefix_code("0:0\n2:1\n").is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("2,2,explicit,none\n1,2\n").is_err());
        assert!(parse_matrix("1,2,bogus,none\n1,2\n").is_err());
        assert!(parse_quantizer("2\n1 0\n0.5\n").is_err());
    }
}
