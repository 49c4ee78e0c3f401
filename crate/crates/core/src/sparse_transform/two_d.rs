//! Separable two-dimensional operators on row-major vectorized images.
//!
//! A single scale maps an `h × w` image to the stacked blocks
//! `[a; h; v; d]`, each `(h/2) × (w/2)` in row-major order. The first
//! letter's filter runs along the rows axis (height), the second along the
//! columns axis (width): `f_h = f_L f_Hᵀ` is low-pass over rows and high-pass
//! over columns.

use crate::error::Result;
use crate::filterbank::WaveletFilter;

use super::conv::{boundary_phase, boundary_ranks, check_levels, scale_matrix, synthesis_scale_matrix};
use super::{gram_schmidt_orthogonalize, BoundaryMode, SparseOperator};

/// The four 2D filters obtained from outer products of the 1D pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterQuadruple {
    pub a: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

impl FilterQuadruple {
    /// Filters in `a, h, v, d` order.
    pub fn as_array(&self) -> [&Vec<Vec<f64>>; 4] {
        [&self.a, &self.h, &self.v, &self.d]
    }
}

fn outer(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    x.iter().map(|&a| y.iter().map(|&b| a * b).collect()).collect()
}

pub fn filter_quadruple_2d(filter: &WaveletFilter) -> FilterQuadruple {
    FilterQuadruple {
        a: outer(&filter.dec_lo, &filter.dec_lo),
        h: outer(&filter.dec_lo, &filter.dec_hi),
        v: outer(&filter.dec_hi, &filter.dec_lo),
        d: outer(&filter.dec_hi, &filter.dec_hi),
    }
}

/// Single-scale 2D analysis operator `[H_a; H_h; H_v; H_d]` as Kronecker
/// products of the 1D boundary operators of each axis.
pub fn scale_matrix_2d(filter: &WaveletFilter, height: usize, width: usize, mode: BoundaryMode) -> Result<SparseOperator> {
    let rows_op = scale_matrix(filter, height, mode)?;
    let cols_op = scale_matrix(filter, width, mode)?;
    let (hh, hw) = (height / 2, width / 2);
    let row_lo = rows_op.row_slice(0, hh);
    let row_hi = rows_op.row_slice(hh, height);
    let col_lo = cols_op.row_slice(0, hw);
    let col_hi = cols_op.row_slice(hw, width);
    SparseOperator::vstack(&[
        &row_lo.kron(&col_lo),
        &row_lo.kron(&col_hi),
        &row_hi.kron(&col_lo),
        &row_hi.kron(&col_hi),
    ])
}

/// Single-scale 2D synthesis operator `[F_a F_h F_v F_d]`.
pub fn synthesis_scale_matrix_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    if mode == BoundaryMode::GramSchmidt {
        return Ok(scale_matrix_2d(filter, height, width, mode)?.transpose());
    }
    let rows_t = synthesis_scale_matrix(filter, height, mode)?.transpose();
    let cols_t = synthesis_scale_matrix(filter, width, mode)?.transpose();
    let (hh, hw) = (height / 2, width / 2);
    let row_lo = rows_t.row_slice(0, hh);
    let row_hi = rows_t.row_slice(hh, height);
    let col_lo = cols_t.row_slice(0, hw);
    let col_hi = cols_t.row_slice(hw, width);
    Ok(SparseOperator::vstack(&[
        &row_lo.kron(&col_lo),
        &row_lo.kron(&col_hi),
        &row_hi.kron(&col_lo),
        &row_hi.kron(&col_hi),
    ])?
    .transpose())
}

/// Single-scale 2D analysis operator assembled from strided 2D convolutions
/// with the filter quadruple and orthogonalized on the 2D matrix itself.
///
/// Boundary rows are processed in lexicographic order of their per-axis
/// processing ranks, which makes the result coincide with
/// [`scale_matrix_2d`]; the two are kept as independent routes.
pub fn direct_scale_matrix_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    let n = filter.len();
    let phase = boundary_phase(n);
    let quad = filter_quadruple_2d(filter);
    let (hh, hw) = (height / 2, width / 2);
    let mut rows = Vec::with_capacity(height * width);
    for f in quad.as_array() {
        for i in 0..hh {
            for j in 0..hw {
                let mut row = Vec::with_capacity(n * n);
                for p in 0..n {
                    let Some(r) = (2 * i + p).checked_sub(phase).filter(|&r| r < height) else {
                        continue;
                    };
                    for q in 0..n {
                        let Some(c) = (2 * j + q).checked_sub(phase).filter(|&c| c < width) else {
                            continue;
                        };
                        row.push((r * width + c, f[n - 1 - p][n - 1 - q]));
                    }
                }
                rows.push(row);
            }
        }
    }
    let raw = SparseOperator::from_rows(height * width, rows);
    if mode == BoundaryMode::Truncated {
        return Ok(raw);
    }
    let row_rank = boundary_ranks(n, height);
    let col_rank = boundary_ranks(n, width);
    // ((row rank, column rank), row index)
    type Keyed = ((Option<usize>, Option<usize>), usize);
    let mut keyed: Vec<Keyed> = Vec::new();
    for block in 0..4 {
        let (row_off, col_off) = ((block / 2) * hh, (block % 2) * hw);
        for i in 0..hh {
            for j in 0..hw {
                let key = (row_rank[row_off + i], col_rank[col_off + j]);
                if key.0.is_some() || key.1.is_some() {
                    keyed.push((key, block * hh * hw + i * hw + j));
                }
            }
        }
    }
    keyed.sort();
    let order: Vec<usize> = keyed.into_iter().map(|(_, r)| r).collect();
    gram_schmidt_orthogonalize(&raw, &order)
}

fn embed(block: SparseOperator, total: usize) -> SparseOperator {
    let n = block.rows();
    if n == total {
        block
    } else {
        SparseOperator::block_diag(&[&block, &SparseOperator::identity(total - n)])
    }
}

fn check_2d(height: usize, width: usize, levels: usize) -> Result<()> {
    check_levels(height, levels)?;
    check_levels(width, levels)
}

/// Per-scale 2D analysis matrices, finest first, each embedded with an
/// identity tail so that only the approximation block recurses.
pub fn analysis_scales_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Vec<SparseOperator>> {
    check_2d(height, width, levels)?;
    (0..levels)
        .map(|j| Ok(embed(scale_matrix_2d(filter, height >> j, width >> j, mode)?, height * width)))
        .collect()
}

pub fn synthesis_scales_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Vec<SparseOperator>> {
    check_2d(height, width, levels)?;
    (0..levels)
        .map(|j| {
            Ok(embed(
                synthesis_scale_matrix_2d(filter, height >> j, width >> j, mode)?,
                height * width,
            ))
        })
        .collect()
}

/// Multi-level 2D analysis matrix. Output layout:
/// `[a_J, h_J, v_J, d_J, h_{J-1}, v_{J-1}, d_{J-1}, …, d_1]`.
pub fn analysis_matrix_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    let mut iter = analysis_scales_2d(filter, height, width, levels, mode)?.into_iter();
    let mut acc = iter.next().expect("at least one level");
    for m in iter {
        acc = m.matmul(&acc)?;
    }
    Ok(acc)
}

pub fn synthesis_matrix_2d(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    let mut iter = synthesis_scales_2d(filter, height, width, levels, mode)?
        .into_iter()
        .rev();
    let mut acc = iter.next().expect("at least one level");
    for f in iter {
        acc = f.matmul(&acc)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::filterbank::{all_builtin, builtin_filter};

    #[test]
    fn haar_quadruple() {
        let q = filter_quadruple_2d(&builtin_filter("haar").unwrap());
        let close = |m: &Vec<Vec<f64>>, e: [[f64; 2]; 2]| {
            m.iter()
                .zip(e)
                .all(|(r, er)| r.iter().zip(er).all(|(a, b)| (a - b).abs() < 1e-15))
        };
        assert!(close(&q.a, [[0.5, 0.5], [0.5, 0.5]]));
        assert!(close(&q.d, [[0.5, -0.5], [-0.5, 0.5]]));
    }

    #[test]
    fn db2_horizontal_rows_sum_to_zero() {
        let q = filter_quadruple_2d(&builtin_filter("db2").unwrap());
        for row in &q.h {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
        // Columns of f_h follow the low-pass profile.
        let col_sum: f64 = q.h.iter().map(|r| r[0]).sum();
        assert!(col_sum.abs() > 0.1);
    }

    #[test]
    fn haar_constant_image_lands_in_approximation() {
        let f = builtin_filter("haar").unwrap();
        let a = analysis_matrix_2d(&f, 8, 8, 1, BoundaryMode::GramSchmidt).unwrap();
        assert_eq!((a.rows(), a.cols()), (64, 64));
        let y = a.matvec(&[0.75; 64]).unwrap();
        for (i, v) in y.iter().enumerate() {
            if i < 16 {
                assert!((v - 1.5).abs() < 1e-14);
            } else {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_divisible_sizes() {
        let f = builtin_filter("db2").unwrap();
        assert!(matches!(
            analysis_matrix_2d(&f, 30, 30, 2, BoundaryMode::GramSchmidt),
            Err(Error::NotDivisible { len: 30, levels: 2 })
        ));
    }

    #[test]
    fn kronecker_and_direct_routes_agree() {
        for f in all_builtin() {
            for mode in [BoundaryMode::Truncated, BoundaryMode::GramSchmidt] {
                let kron = scale_matrix_2d(&f, 16, 16, mode).unwrap().to_dense();
                let direct = direct_scale_matrix_2d(&f, 16, 16, mode).unwrap().to_dense();
                let diff = kron
                    .iter()
                    .zip(&direct)
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                    .fold(0.0, f64::max);
                assert!(diff < 1e-8, "{f} {mode:?}: {diff}");
            }
        }
    }

    #[test]
    fn truncated_synthesis_is_transpose() {
        let f = builtin_filter("db3").unwrap();
        let a = scale_matrix_2d(&f, 8, 16, BoundaryMode::Truncated).unwrap();
        let s = synthesis_scale_matrix_2d(&f, 8, 16, BoundaryMode::Truncated).unwrap();
        let at = a.transpose();
        assert_eq!(s.nnz(), at.nnz());
        for (x, y) in s.entries().iter().zip(at.entries()) {
            assert_eq!((x.0, x.1), (y.0, y.1));
            assert!((x.2 - y.2).abs() < 1e-15);
        }
    }
}
