//! Matrix Market readers and writers (coordinate format for sparse matrices,
//! array format for dense ones) and the CSV reader for labeled data.
//!
//! Numbers are written with 17 significant digits so files round-trip
//! exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::core::{ComputationError, DenseMatrix, Result, SparseMatrix};

fn io_err(path: &Path, detail: impl std::fmt::Display) -> ComputationError {
    ComputationError::IoFailure(format!("{}: {detail}", path.display()))
}

/// Either flavor of Matrix Market content.
pub enum MatrixMarket {
    Sparse(SparseMatrix),
    Dense(DenseMatrix),
}

/// Reads a Matrix Market file: `coordinate real general|symmetric` or
/// `array real general`.
pub fn read_matrix_market(path: &Path) -> Result<MatrixMarket> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let header = loop {
        match lines.next() {
            Some(Ok(line)) => break line,
            Some(Err(e)) => return Err(io_err(path, e)),
            None => return Err(io_err(path, "empty file")),
        }
    };
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
    if fields.len() < 4 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(io_err(path, "missing %%MatrixMarket matrix header"));
    }
    let layout = fields[2].as_str();
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(io_err(path, format!("unsupported field type {}", fields[3])));
    }
    let symmetry = fields.get(4).map(|s| s.as_str()).unwrap_or("general");
    if symmetry != "general" && symmetry != "symmetric" {
        return Err(io_err(path, format!("unsupported symmetry {symmetry}")));
    }

    let mut data_lines = lines.filter_map(|l| match l {
        Ok(line) => {
            let t = line.trim().to_string();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok(t))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let size_line = match data_lines.next() {
        Some(Ok(l)) => l,
        Some(Err(e)) => return Err(io_err(path, e)),
        None => return Err(io_err(path, "missing size line")),
    };
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| io_err(path, format!("bad size line: {e}")))?;

    match layout {
        "coordinate" => {
            if dims.len() != 3 {
                return Err(io_err(path, "coordinate size line needs rows cols nnz"));
            }
            let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
            let mut triplets = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let line = match data_lines.next() {
                    Some(Ok(l)) => l,
                    Some(Err(e)) => return Err(io_err(path, e)),
                    None => return Err(io_err(path, "fewer entries than declared")),
                };
                let mut toks = line.split_whitespace();
                let i: usize = parse_tok(&mut toks, path)?;
                let j: usize = parse_tok(&mut toks, path)?;
                let v: f64 = parse_tok(&mut toks, path)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(io_err(path, format!("index ({i},{j}) out of bounds")));
                }
                if v != 0.0 {
                    triplets.push((i - 1, j - 1, v));
                    if symmetry == "symmetric" && i != j {
                        triplets.push((j - 1, i - 1, v));
                    }
                }
            }
            Ok(MatrixMarket::Sparse(SparseMatrix::from_triplets(
                rows, cols, &triplets,
            )?))
        }
        "array" => {
            if dims.len() != 2 {
                return Err(io_err(path, "array size line needs rows cols"));
            }
            let (rows, cols) = (dims[0], dims[1]);
            if symmetry != "general" {
                return Err(io_err(path, "symmetric array format not supported"));
            }
            let mut entries = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let line = match data_lines.next() {
                    Some(Ok(l)) => l,
                    Some(Err(e)) => return Err(io_err(path, e)),
                    None => return Err(io_err(path, "fewer entries than declared")),
                };
                let v: f64 = line
                    .split_whitespace()
                    .next()
                    .ok_or_else(|| io_err(path, "blank entry line"))?
                    .parse()
                    .map_err(|e| io_err(path, format!("bad number: {e}")))?;
                entries.push(v);
            }
            Ok(MatrixMarket::Dense(DenseMatrix::new(rows, cols, entries)?))
        }
        other => Err(io_err(path, format!("unsupported layout {other}"))),
    }
}

fn parse_tok<'a, T: std::str::FromStr>(
    toks: &mut impl Iterator<Item = &'a str>,
    path: &Path,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    toks.next()
        .ok_or_else(|| io_err(path, "short entry line"))?
        .parse::<T>()
        .map_err(|e| io_err(path, format!("bad token: {e}")))
}

/// Reads a Matrix Market file that must be sparse (coordinate layout);
/// a dense array file is converted.
pub fn read_sparse(path: &Path) -> Result<SparseMatrix> {
    match read_matrix_market(path)? {
        MatrixMarket::Sparse(s) => Ok(s),
        MatrixMarket::Dense(d) => Ok(SparseMatrix::from_dense(&d)),
    }
}

/// Writes coordinate real general format with 1-based indices.
pub fn write_sparse(path: &Path, m: &SparseMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
        for (i, j, v) in m.iter() {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
        Ok(())
    };
    write(&mut w).map_err(|e| io_err(path, e))
}

/// Writes array real general format (column-major entries).
pub fn write_dense(path: &Path, m: &DenseMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix array real general")?;
        writeln!(w, "{} {}", m.rows(), m.cols())?;
        for j in 0..m.cols() {
            for &v in m.col(j) {
                writeln!(w, "{:.16e}", v)?;
            }
        }
        Ok(())
    };
    write(&mut w).map_err(|e| io_err(path, e))
}

/// Writes a vector as an n-by-1 array file.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let m = DenseMatrix::new(v.len(), 1, v.to_vec())?;
    write_dense(path, &m)
}

/// Reads a vector from an array file (or a single-column coordinate file).
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    match read_matrix_market(path)? {
        MatrixMarket::Dense(d) => {
            if d.cols() != 1 {
                return Err(io_err(path, format!("expected one column, got {}", d.cols())));
            }
            Ok(d.entries().to_vec())
        }
        MatrixMarket::Sparse(s) => {
            if s.cols() != 1 {
                return Err(io_err(path, format!("expected one column, got {}", s.cols())));
            }
            Ok(s.to_dense().entries().to_vec())
        }
    }
}

/// Reads labeled samples from CSV: one sample per row, features first, the
/// integer class label in the last column. A non-numeric first line is
/// treated as a header and skipped.
pub fn read_labeled_csv(path: &Path) -> Result<(DenseMatrix, Vec<usize>)> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(|f| f.trim()).collect();
        if fields.len() < 2 {
            return Err(io_err(
                path,
                format!("line {}: need at least one feature and a label", lineno + 1),
            ));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields[..fields.len() - 1].iter().map(|f| f.parse()).collect();
        let features = match parsed {
            Ok(f) => f,
            Err(_) if lineno == 0 => continue, // header row
            Err(e) => {
                return Err(io_err(path, format!("line {}: {e}", lineno + 1)));
            }
        };
        let label: usize = fields[fields.len() - 1].parse().map_err(|e| {
            io_err(
                path,
                format!("line {}: label column: {e}", lineno + 1),
            )
        })?;
        if let Some(first) = rows.first() {
            if first.len() != features.len() {
                return Err(io_err(
                    path,
                    format!("line {}: inconsistent feature count", lineno + 1),
                ));
            }
        }
        rows.push(features);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(io_err(path, "no samples"));
    }
    let n = rows[0].len();
    let m = rows.len();
    let data = DenseMatrix::from_fn(n, m, |i, j| rows[j][i]);
    Ok((data, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("philr-io-test-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn sparse_roundtrip() {
        let m =
            SparseMatrix::from_triplets(3, 4, &[(0, 0, 1.5), (2, 1, -2.25), (1, 3, 1e-30)]).unwrap();
        let p = temp_path("sparse.mtx");
        write_sparse(&p, &m).unwrap();
        let back = read_sparse(&p).unwrap();
        assert_eq!(back, m);
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn dense_roundtrip() {
        let m = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.1234567890123456789]).unwrap();
        let p = temp_path("dense.mtx");
        write_dense(&p, &m).unwrap();
        match read_matrix_market(&p).unwrap() {
            MatrixMarket::Dense(back) => assert_eq!(back, m),
            _ => panic!("expected dense"),
        }
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn symmetric_coordinate_expanded() {
        let p = temp_path("sym.mtx");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "%%MatrixMarket matrix coordinate real symmetric").unwrap();
        writeln!(f, "2 2 2").unwrap();
        writeln!(f, "1 1 1.0").unwrap();
        writeln!(f, "2 1 3.0").unwrap();
        drop(f);
        let m = read_sparse(&p).unwrap();
        assert_eq!(m.to_dense()[(0, 1)], 3.0);
        assert_eq!(m.to_dense()[(1, 0)], 3.0);
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn malformed_header_rejected() {
        let p = temp_path("bad.mtx");
        std::fs::write(&p, "not a matrix market file\n1 1 1\n").unwrap();
        let err = read_sparse(&p).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::IoFailure);
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn csv_roundtrip_with_header() {
        let p = temp_path("data.csv");
        std::fs::write(&p, "f1,f2,label\n1.0,2.0,0\n3.0,4.0,1\n-1.0,0.5,0\n").unwrap();
        let (data, labels) = read_labeled_csv(&p).unwrap();
        assert_eq!(data.rows(), 2);
        assert_eq!(data.cols(), 3);
        assert_eq!(labels, vec![0, 1, 0]);
        assert_eq!(data[(1, 1)], 4.0);
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn csv_missing_label_rejected() {
        let p = temp_path("nolabel.csv");
        std::fs::write(&p, "1.0,2.0,0\n3.0,4.0,oops\n").unwrap();
        let err = read_labeled_csv(&p).unwrap_err();
        assert_eq!(err.kind(), crate::core::ErrorKind::IoFailure);
        std::fs::remove_file(&p).ok();
    }
}
