use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A sparse matrix in coordinate form.
///
/// Entries are kept sorted row-major with unique coordinates, which makes the
/// triple list double as a CSR layout (`row_ptr` indexes into it).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
}

impl SparseOperator {
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::BadEntry {
                    row: r,
                    col: c,
                    reason: "is out of range",
                });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::BadEntry {
                row: w[0].0,
                col: w[0].1,
                reason: "is duplicated",
            });
        }
        Ok(Self::from_sorted(rows, cols, entries))
    }

    /// Entries must already be sorted, unique and in range.
    pub(crate) fn from_sorted(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            entries,
            row_ptr,
        }
    }

    pub(crate) fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let entries = rows
            .into_iter()
            .enumerate()
            .flat_map(|(r, mut row)| {
                row.sort_by_key(|&(c, _)| c);
                row.into_iter().map(move |(c, v)| (r, c, v))
            })
            .collect();
        Self::from_sorted(n, cols, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        let entries = dense
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(c, &v)| (r, c, v))
            })
            .collect();
        Self::from_sorted(dense.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)
            .binary_search_by_key(&c, |&(_, col, _)| col)
            .map_or(0.0, |i| self.row(r)[i].2)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            out[r][c] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.cols, self.rows, entries)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "operator has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().map(|&(_, c, v)| v * x[c]).sum())
            .collect())
    }

    /// `self · rhs`, Gustavson row-by-row. Exact zeros from cancellation are
    /// dropped so sparsity masks reflect the product.
    pub fn matmul(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut acc = vec![0.0; rhs.cols];
        let mut touched = vec![false; rhs.cols];
        let mut cols_seen = Vec::new();
        let mut entries = Vec::new();
        for r in 0..self.rows {
            for &(_, k, a) in self.row(r) {
                for &(_, c, b) in rhs.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols_seen.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols_seen.sort_unstable();
            for &c in &cols_seen {
                if acc[c] != 0.0 {
                    entries.push((r, c, acc[c]));
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            cols_seen.clear();
        }
        Ok(Self::from_sorted(self.rows, rhs.cols, entries))
    }

    /// Block-diagonal matrix with the given blocks in order.
    pub fn block_diag(blocks: &[&SparseOperator]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut entries = Vec::with_capacity(blocks.iter().map(|b| b.nnz()).sum());
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            entries.extend(b.entries.iter().map(|&(r, c, v)| (r + r0, c + c0, v)));
            r0 += b.rows;
            c0 += b.cols;
        }
        Self::from_sorted(rows, cols, entries)
    }

    /// Stack operators with equal column counts on top of each other.
    pub fn vstack(blocks: &[&SparseOperator]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::ShapeMismatch("vstack needs equal column counts".into()));
        }
        let mut entries = Vec::new();
        let mut r0 = 0;
        for b in blocks {
            entries.extend(b.entries.iter().map(|&(r, c, v)| (r + r0, c, v)));
            r0 += b.rows;
        }
        Ok(Self::from_sorted(r0, cols, entries))
    }

    /// Kronecker product; on row-major vectorized matrices
    /// `kron(A, B) vec(X) = vec(A X Bᵀ)`.
    pub fn kron(&self, rhs: &SparseOperator) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows * rhs.rows];
        for &(i, r, a) in &self.entries {
            for &(j, c, b) in &rhs.entries {
                rows[i * rhs.rows + j].push((r * rhs.cols + c, a * b));
            }
        }
        Self::from_rows(self.cols * rhs.cols, rows)
    }

    /// Rows `start..end` as a new operator.
    pub fn row_slice(&self, start: usize, end: usize) -> Self {
        let entries = self.entries[self.row_ptr[start]..self.row_ptr[end]]
            .iter()
            .map(|&(r, c, v)| (r - start, c, v))
            .collect();
        Self::from_sorted(end - start, self.cols, entries)
    }

    /// Max-norm distance to the identity (square operators only).
    pub fn max_deviation_from_identity(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut diag_seen = vec![false; self.rows.min(self.cols)];
        for &(r, c, v) in &self.entries {
            if r == c {
                diag_seen[r] = true;
                worst = worst.max((v - 1.0).abs());
            } else {
                worst = worst.max(v.abs());
            }
        }
        if diag_seen.iter().any(|s| !s) {
            worst = worst.max(1.0);
        }
        worst
    }

    /// Row and column of the largest deviation from the identity.
    pub fn argmax_deviation_from_identity(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        let mut consider = |r, c, d: f64| {
            if best.is_none_or(|b| d > b.2) {
                best = Some((r, c, d));
            }
        };
        for i in 0..self.rows.min(self.cols) {
            consider(i, i, (self.get(i, i) - 1.0).abs());
        }
        for &(r, c, v) in &self.entries {
            if r != c {
                consider(r, c, v.abs());
            }
        }
        best
    }

    /// Nonzero pattern as text, `#` for stored entries and `.` otherwise.
    pub fn sparsity_mask(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            let mut line = vec!['.'; self.cols];
            for &(_, c, _) in self.row(r) {
                line[c] = '#';
            }
            out.extend(line);
            out.push('\n');
        }
        out
    }

    /// `row,col,value` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = String::from("row,col,value\n");
        for &(r, c, v) in &self.entries {
            let _ = writeln!(buf, "{r},{c},{v:.16e}");
        }
        w.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R, rows: usize, cols: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 && line.starts_with("row") || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("line {}: `{line}`", lineno + 1));
            if parts.len() != 3 {
                return Err(bad());
            }
            let r = parts[0].trim().parse().map_err(|_| bad())?;
            let c = parts[1].trim().parse().map_err(|_| bad())?;
            let v = parts[2].trim().parse().map_err(|_| bad())?;
            entries.push((r, c, v));
        }
        Self::from_triplets(rows, cols, entries)
    }
}
