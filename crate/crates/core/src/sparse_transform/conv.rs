//! One-dimensional stride-2 convolution and multi-level transform matrices.

use crate::error::{Error, Result};
use crate::filterbank::WaveletFilter;

use super::{gram_schmidt_orthogonalize, BoundaryMode, SparseOperator};

/// Cyclic stride-2 convolution matrix, `signal_len/2 × signal_len`.
///
/// Row `i` holds `filter_vec` reversed over columns `2i … 2i+N−1`, wrapping
/// past the right edge.
pub fn conv_matrix_1d(filter_vec: &[f64], signal_len: usize) -> Result<SparseOperator> {
    check_even(signal_len)?;
    let n = filter_vec.len();
    if signal_len < n {
        return Err(Error::SignalTooShort {
            len: signal_len,
            filter_len: n,
        });
    }
    let rows = (0..signal_len / 2)
        .map(|i| {
            (0..n)
                .map(|k| ((2 * i + k) % signal_len, filter_vec[n - 1 - k]))
                .collect()
        })
        .collect();
    Ok(SparseOperator::from_rows(signal_len, rows))
}

/// Column offset of the first tap of row 0 in the truncated operators.
///
/// Centering the filter support splits the truncated rows evenly between the
/// two edges (`⌊N/4⌋` rows per filter block on each side) and is zero for
/// Haar, which therefore has no boundary rows.
pub fn boundary_phase(filter_len: usize) -> usize {
    (filter_len / 2).saturating_sub(1)
}

fn check_even(len: usize) -> Result<()> {
    if len == 0 || !len.is_multiple_of(2) {
        return Err(Error::NotDivisible { len, levels: 1 });
    }
    Ok(())
}

/// Taps of analysis row `i` that land inside `0..len`, as `(col, value)`.
fn truncated_row(filter_vec: &[f64], len: usize, phase: usize, i: usize) -> Vec<(usize, f64)> {
    let n = filter_vec.len();
    (0..n)
        .filter_map(|k| {
            let col = (2 * i + k).checked_sub(phase)?;
            (col < len).then(|| (col, filter_vec[n - 1 - k]))
        })
        .collect()
}

/// Truncated (non-wrapping) stride-2 convolution, `len/2 × len`.
pub fn truncated_conv_matrix(filter_vec: &[f64], len: usize) -> Result<SparseOperator> {
    check_even(len)?;
    let phase = boundary_phase(filter_vec.len());
    let rows = (0..len / 2)
        .map(|i| truncated_row(filter_vec, len, phase, i))
        .collect();
    Ok(SparseOperator::from_rows(len, rows))
}

/// Truncated transposed convolution, `len × len/2`: column `i` holds
/// `filter_vec` unreversed over rows `2i−s … 2i−s+N−1`.
pub fn truncated_transposed_conv_matrix(filter_vec: &[f64], len: usize) -> Result<SparseOperator> {
    check_even(len)?;
    let n = filter_vec.len();
    let phase = boundary_phase(n);
    let mut entries = Vec::new();
    for i in 0..len / 2 {
        for (k, &v) in filter_vec.iter().enumerate() {
            if let Some(row) = (2 * i + k).checked_sub(phase) {
                if row < len {
                    entries.push((row, i, v));
                }
            }
        }
    }
    SparseOperator::from_triplets(len, len / 2, entries)
}

/// Rows of the single-scale `[H_L; H_H]` operator whose support is cut by an
/// edge, in Gram-Schmidt processing order: top-edge rows ascending, then
/// bottom-edge rows descending.
pub fn boundary_rows(filter_len: usize, len: usize) -> Vec<usize> {
    let phase = boundary_phase(filter_len);
    let half = len / 2;
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for block in 0..2 {
        for i in 0..half {
            let r = block * half + i;
            if 2 * i < phase {
                top.push(r);
            } else if 2 * i + filter_len - phase > len {
                bottom.push(r);
            }
        }
    }
    top.sort_unstable();
    bottom.sort_unstable_by(|a, b| b.cmp(a));
    top.extend(bottom);
    top
}

/// Processing rank of each row of the single-scale operator: `None` for
/// interior rows, otherwise the position in [`boundary_rows`].
pub(crate) fn boundary_ranks(filter_len: usize, len: usize) -> Vec<Option<usize>> {
    let mut ranks = vec![None; len];
    for (rank, r) in boundary_rows(filter_len, len).into_iter().enumerate() {
        ranks[r] = Some(rank);
    }
    ranks
}

/// The truncated single-scale analysis operator `[H_L; H_H]`, `len × len`.
pub fn truncated_scale_matrix(filter: &WaveletFilter, len: usize) -> Result<SparseOperator> {
    let lo = truncated_conv_matrix(&filter.dec_lo, len)?;
    let hi = truncated_conv_matrix(&filter.dec_hi, len)?;
    SparseOperator::vstack(&[&lo, &hi])
}

/// Single-scale analysis operator in the requested boundary mode.
pub fn scale_matrix(filter: &WaveletFilter, len: usize, mode: BoundaryMode) -> Result<SparseOperator> {
    let raw = truncated_scale_matrix(filter, len)?;
    match mode {
        BoundaryMode::Truncated => Ok(raw),
        BoundaryMode::GramSchmidt => gram_schmidt_orthogonalize(&raw, &boundary_rows(filter.len(), len)),
    }
}

/// Single-scale synthesis operator `[F_L F_H]`. In Gram-Schmidt mode this is
/// the transpose of [`scale_matrix`]; truncated mode assembles it from the
/// synthesis filters.
pub fn synthesis_scale_matrix(filter: &WaveletFilter, len: usize, mode: BoundaryMode) -> Result<SparseOperator> {
    match mode {
        BoundaryMode::GramSchmidt => Ok(scale_matrix(filter, len, mode)?.transpose()),
        BoundaryMode::Truncated => {
            let lo = truncated_transposed_conv_matrix(&filter.rec_lo, len)?;
            let hi = truncated_transposed_conv_matrix(&filter.rec_hi, len)?;
            Ok(SparseOperator::vstack(&[&lo.transpose(), &hi.transpose()])?.transpose())
        }
    }
}

pub(crate) fn check_levels(len: usize, levels: usize) -> Result<()> {
    if levels == 0 || u32::try_from(levels).map_or(true, |l| l >= usize::BITS) || (1usize << levels) > len {
        return Err(Error::LevelTooDeep { len, levels });
    }
    if !len.is_multiple_of(1usize << levels) {
        return Err(Error::NotDivisible { len, levels });
    }
    Ok(())
}

fn embed(block: SparseOperator, total: usize) -> SparseOperator {
    let n = block.rows();
    if n == total {
        block
    } else {
        SparseOperator::block_diag(&[&block, &SparseOperator::identity(total - n)])
    }
}

/// Per-scale analysis matrices `diag(M_j, I)`, finest scale first. Their
/// product (coarsest on the left) is [`analysis_matrix_1d`].
pub fn analysis_scales_1d(
    filter: &WaveletFilter,
    signal_len: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Vec<SparseOperator>> {
    check_levels(signal_len, levels)?;
    (0..levels)
        .map(|j| Ok(embed(scale_matrix(filter, signal_len >> j, mode)?, signal_len)))
        .collect()
}

/// Per-scale synthesis matrices `diag(F_j, I)`, finest scale first. Their
/// product (finest on the left) is [`synthesis_matrix_1d`].
pub fn synthesis_scales_1d(
    filter: &WaveletFilter,
    signal_len: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<Vec<SparseOperator>> {
    check_levels(signal_len, levels)?;
    (0..levels)
        .map(|j| Ok(embed(synthesis_scale_matrix(filter, signal_len >> j, mode)?, signal_len)))
        .collect()
}

/// Multi-level analysis matrix `A = … diag(M_1, I) · M_0`.
pub fn analysis_matrix_1d(
    filter: &WaveletFilter,
    signal_len: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    let scales = analysis_scales_1d(filter, signal_len, levels, mode)?;
    let mut iter = scales.into_iter();
    let mut acc = iter.next().expect("at least one level");
    for m in iter {
        acc = m.matmul(&acc)?;
    }
    Ok(acc)
}

/// Multi-level synthesis matrix `S = F_0 · diag(F_1, I) …`.
pub fn synthesis_matrix_1d(
    filter: &WaveletFilter,
    signal_len: usize,
    levels: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    let scales = synthesis_scales_1d(filter, signal_len, levels, mode)?;
    let mut iter = scales.into_iter().rev();
    let mut acc = iter.next().expect("at least one level");
    for f in iter {
        acc = f.matmul(&acc)?;
    }
    Ok(acc)
}
