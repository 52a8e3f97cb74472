//! Matrix and trace file formats: MatrixMarket coordinate files (sparse,
//! kept sparse in memory), headerless dense CSV, and the iteration-trace CSV
//! written with 17 significant digits so values round-trip bitwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::batch::TraceRecord;
use crate::error::{NipsError, Result};

/// Compressed sparse column matrix; duplicate entries are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= nrows || j >= ncols {
                return Err(NipsError::InvalidInput(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of column `j` as `(row, value)` pairs.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        range.map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                out[[i, j]] += v;
            }
        }
        out
    }
}

/// A data matrix that is either dense or stays sparse in memory.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Dense(Array2<f64>),
    Sparse(SparseMatrix),
}

impl MatrixData {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(a) => a.nrows(),
            Self::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(a) => a.ncols(),
            Self::Sparse(s) => s.ncols(),
        }
    }

    /// Column `j` densified.
    pub fn column(&self, j: usize) -> Array1<f64> {
        match self {
            Self::Dense(a) => a.column(j).to_owned(),
            Self::Sparse(s) => {
                let mut out = Array1::zeros(s.nrows());
                for (i, v) in s.col(j) {
                    out[i] += v;
                }
                out
            }
        }
    }

    /// Mean over all entries (zeros included for sparse storage).
    pub fn mean(&self) -> f64 {
        let total = (self.nrows() * self.ncols()) as f64;
        match self {
            Self::Dense(a) => a.sum() / total,
            Self::Sparse(s) => s.values.iter().sum::<f64>() / total,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Self::Dense(a) => a.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Self::Sparse(s) => s.values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Self::Dense(a) => a.iter().all(|v| v.is_finite()),
            Self::Sparse(s) => s.values.iter().all(|v| v.is_finite()),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Sparse(s) => s.to_dense(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    DenseCsv,
}

impl MatrixFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "matrix_market" | "mtx" => Ok(Self::MatrixMarket),
            "dense_csv" | "csv" => Ok(Self::DenseCsv),
            other => Err(NipsError::Config(format!("unknown matrix format {other}"))),
        }
    }
}

/// Read a matrix file. MatrixMarket input stays sparse; CSV input is dense.
pub fn read_matrix<P: AsRef<Path>>(path: P, format: MatrixFormat) -> Result<MatrixData> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::MatrixMarket => read_matrix_market(reader).map(MatrixData::Sparse),
        MatrixFormat::DenseCsv => read_dense_csv(reader).map(MatrixData::Dense),
    }
}

fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut first_content = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if first_content && trimmed.starts_with("%%MatrixMarket") {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let ok = fields.len() >= 4
                && fields[1] == "matrix"
                && fields[2] == "coordinate"
                && matches!(fields[3], "real" | "integer")
                && fields.get(4).is_none_or(|&s| s == "general");
            if !ok {
                return Err(NipsError::Parse {
                    line: line_no,
                    msg: "only 'matrix coordinate real/integer general' files are supported"
                        .into(),
                });
            }
            first_content = false;
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        first_content = false;
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(NipsError::Parse {
                        line: line_no,
                        msg: format!("expected 'rows cols nnz', got {} fields", fields.len()),
                    });
                }
                let parse = |s: &str, what: &str| -> Result<usize> {
                    s.parse().map_err(|_| NipsError::Parse {
                        line: line_no,
                        msg: format!("cannot parse {what} from '{s}'"),
                    })
                };
                dims = Some((
                    parse(fields[0], "row count")?,
                    parse(fields[1], "column count")?,
                    parse(fields[2], "entry count")?,
                ));
            }
            Some((nrows, ncols, nnz)) => {
                if triplets.len() == nnz {
                    return Err(NipsError::Parse {
                        line: line_no,
                        msg: format!("more entries than the declared count {nnz}"),
                    });
                }
                if fields.len() != 3 {
                    return Err(NipsError::Parse {
                        line: line_no,
                        msg: format!("expected 'i j value', got {} fields", fields.len()),
                    });
                }
                let i: usize = fields[0].parse().map_err(|_| NipsError::Parse {
                    line: line_no,
                    msg: format!("cannot parse row index '{}'", fields[0]),
                })?;
                let j: usize = fields[1].parse().map_err(|_| NipsError::Parse {
                    line: line_no,
                    msg: format!("cannot parse column index '{}'", fields[1]),
                })?;
                let v: f64 = fields[2].parse().map_err(|_| NipsError::Parse {
                    line: line_no,
                    msg: format!("cannot parse value '{}'", fields[2]),
                })?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(NipsError::Parse {
                        line: line_no,
                        msg: format!("index ({i}, {j}) outside the declared {nrows}x{ncols} shape"),
                    });
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (nrows, ncols, nnz) = dims.ok_or(NipsError::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    if triplets.len() != nnz {
        return Err(NipsError::Parse {
            line: 0,
            msg: format!("header declares {nnz} entries, found {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(nrows, ncols, triplets)
}

fn read_dense_csv<R: BufRead>(reader: R) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|field| {
                field.trim().parse().map_err(|_| NipsError::Parse {
                    line: line_no,
                    msg: format!("cannot parse '{}' as a number", field.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(NipsError::Parse {
                    line: line_no,
                    msg: format!("expected {} columns, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(NipsError::Parse {
            line: 0,
            msg: "empty matrix file".into(),
        });
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| NipsError::InvalidInput(e.to_string()))
}

pub fn write_dense_csv<P: AsRef<Path>>(path: P, matrix: &Array2<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_market<P: AsRef<Path>>(path: P, matrix: &SparseMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", matrix.nrows(), matrix.ncols(), matrix.nnz())?;
    for j in 0..matrix.ncols() {
        for (i, v) in matrix.col(j) {
            writeln!(out, "{} {} {v:.16e}", i + 1, j + 1)?;
        }
    }
    Ok(())
}

pub const TRACE_HEADER: &str = "k,eta,phi,rho_norm,err_norm,step_norm,wall_ms";

/// Write an iteration trace as CSV with full (17 significant digit)
/// precision, so audits can be re-run offline bit-exactly.
pub fn write_trace<P: AsRef<Path>>(trace: &[TraceRecord], path: P) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k, r.eta, r.phi, r.rho_norm, r.err_norm, r.step_norm, r.wall_ms
        )?;
    }
    Ok(())
}

pub fn read_trace<P: AsRef<Path>>(path: P) -> Result<Vec<TraceRecord>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if idx == 0 {
            if line.trim() != TRACE_HEADER {
                return Err(NipsError::Parse {
                    line: line_no,
                    msg: format!("expected trace header '{TRACE_HEADER}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(NipsError::Parse {
                line: line_no,
                msg: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| NipsError::Parse {
                line: line_no,
                msg: format!("cannot parse '{s}'"),
            })
        };
        rows.push(TraceRecord {
            k: fields[0].parse().map_err(|_| NipsError::Parse {
                line: line_no,
                msg: format!("cannot parse iteration index '{}'", fields[0]),
            })?,
            eta: parse_f(fields[1])?,
            phi: parse_f(fields[2])?,
            rho_norm: parse_f(fields[3])?,
            err_norm: parse_f(fields[4])?,
            step_norm: parse_f(fields[5])?,
            wall_ms: parse_f(fields[6])?,
        });
    }
    Ok(rows)
}
