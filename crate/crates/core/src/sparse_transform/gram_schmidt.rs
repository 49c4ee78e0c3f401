use crate::error::{Error, Result};

use super::SparseOperator;

/// Residual norms below this fraction of the original row norm count as rank
/// deficiency.
const RANK_TOLERANCE: f64 = 1e-8;

/// Entries below this magnitude after normalization are round-off from
/// projecting onto rows the boundary row is already orthogonal to.
const PRUNE_BELOW: f64 = 1e-14;

/// Replace `boundary_rows` (processed in the given order) by an orthonormal
/// set that is also orthogonal to every other row, using modified
/// Gram-Schmidt with one re-orthogonalization pass. Rows not listed are
/// copied unchanged and are assumed to be orthonormal already.
pub fn gram_schmidt_orthogonalize(op: &SparseOperator, boundary_rows: &[usize]) -> Result<SparseOperator> {
    let n_rows = op.rows();
    let n_cols = op.cols();
    let mut is_boundary = vec![false; n_rows];
    for &r in boundary_rows {
        if r >= n_rows {
            return Err(Error::OutOfRange(format!("boundary row {r} of {n_rows}")));
        }
        if is_boundary[r] {
            return Err(Error::OutOfRange(format!("boundary row {r} listed twice")));
        }
        is_boundary[r] = true;
    }

    // Column -> interior rows touching it.
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    for &(r, c, _) in op.entries() {
        if !is_boundary[r] {
            by_col[c].push(r);
        }
    }

    let mut finished: Vec<Vec<(usize, f64)>> = Vec::with_capacity(boundary_rows.len());
    let mut work = vec![0.0; n_cols];
    let mut row_mark = vec![false; n_rows];

    for &r in boundary_rows {
        work.iter_mut().for_each(|x| *x = 0.0);
        for &(_, c, v) in op.row(r) {
            work[c] = v;
        }
        let original_norm = norm(&work);
        if original_norm == 0.0 {
            return Err(Error::RankDeficient { row: r });
        }

        for _pass in 0..2 {
            let mut interior: Vec<usize> = Vec::new();
            for (c, &x) in work.iter().enumerate() {
                if x != 0.0 {
                    for &ir in &by_col[c] {
                        if !row_mark[ir] {
                            row_mark[ir] = true;
                            interior.push(ir);
                        }
                    }
                }
            }
            interior.sort_unstable();
            for &ir in &interior {
                row_mark[ir] = false;
                let row = op.row(ir);
                let d: f64 = row.iter().map(|&(_, c, v)| v * work[c]).sum();
                if d != 0.0 {
                    for &(_, c, v) in row {
                        work[c] -= d * v;
                    }
                }
            }
            for done in &finished {
                let d: f64 = done.iter().map(|&(c, v)| v * work[c]).sum();
                if d != 0.0 {
                    for &(c, v) in done {
                        work[c] -= d * v;
                    }
                }
            }
        }

        let residual = norm(&work);
        if residual <= RANK_TOLERANCE * original_norm {
            return Err(Error::RankDeficient { row: r });
        }
        let row: Vec<(usize, f64)> = work
            .iter()
            .enumerate()
            .map(|(c, &x)| (c, x / residual))
            .filter(|&(_, x)| x.abs() >= PRUNE_BELOW)
            .collect();
        finished.push(row);
    }

    let mut new_rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; n_rows];
    for (&r, row) in boundary_rows.iter().zip(finished) {
        new_rows[r] = Some(row);
    }
    let rows = new_rows
        .into_iter()
        .enumerate()
        .map(|(r, replaced)| replaced.unwrap_or_else(|| op.row(r).iter().map(|&(_, c, v)| (c, v)).collect()))
        .collect();
    Ok(SparseOperator::from_rows(n_cols, rows))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
