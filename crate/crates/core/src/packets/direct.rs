//! Strided-convolution single-scale operators used by the packet and FWT
//! recursions. Interior rows are evaluated as plain convolutions; only the
//! Gram-Schmidt boundary rows are stored explicitly.

use crate::error::{Error, Result};
use crate::filterbank::WaveletFilter;
use crate::sparse_transform::{boundary_phase, boundary_rows, scale_matrix, BoundaryMode};

#[derive(Debug, Clone)]
pub(crate) struct ScaleOperator {
    len: usize,
    phase: usize,
    /// Row taps: tap `k` of row `i` sits at column `2i − phase + k`.
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Replacement rows `(first column, coefficients)` for boundary rows.
    replaced: Vec<Option<(usize, Vec<f64>)>>,
}

impl ScaleOperator {
    pub(crate) fn new(filter: &WaveletFilter, len: usize, mode: BoundaryMode) -> Result<Self> {
        if len == 0 || !len.is_multiple_of(2) {
            return Err(Error::NotDivisible { len, levels: 1 });
        }
        let lo: Vec<f64> = filter.dec_lo.iter().rev().copied().collect();
        let hi: Vec<f64> = filter.dec_hi.iter().rev().copied().collect();
        let mut replaced = vec![None; len];
        if mode == BoundaryMode::GramSchmidt {
            let rows = boundary_rows(filter.len(), len);
            if !rows.is_empty() {
                let op = scale_matrix(filter, len, mode)?;
                for r in rows {
                    let entries = op.row(r);
                    let (first, last) = match (entries.first(), entries.last()) {
                        (Some(a), Some(b)) => (a.1, b.1),
                        _ => return Err(Error::RankDeficient { row: r }),
                    };
                    let mut coeffs = vec![0.0; last - first + 1];
                    for &(_, c, v) in entries {
                        coeffs[c - first] = v;
                    }
                    replaced[r] = Some((first, coeffs));
                }
            }
        }
        Ok(ScaleOperator {
            len,
            phase: boundary_phase(filter.len()),
            lo,
            hi,
            replaced,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    fn taps(&self, r: usize) -> (isize, &[f64]) {
        let half = self.len / 2;
        let (i, taps) = if r < half { (r, &self.lo) } else { (r - half, &self.hi) };
        (2 * i as isize - self.phase as isize, taps)
    }

    /// `y = A x`, low-pass half first.
    pub(crate) fn analyze(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len as isize;
        for (r, out) in y.iter_mut().enumerate().take(self.len) {
            *out = match &self.replaced[r] {
                Some((first, coeffs)) => coeffs.iter().zip(&x[*first..]).map(|(a, b)| a * b).sum(),
                None => {
                    let (start, taps) = self.taps(r);
                    let mut acc = 0.0;
                    for (k, &t) in taps.iter().enumerate() {
                        let c = start + k as isize;
                        if (0..n).contains(&c) {
                            acc += t * x[c as usize];
                        }
                    }
                    acc
                }
            };
        }
    }

    /// `x = Aᵀ y`.
    pub(crate) fn synthesize(&self, y: &[f64], x: &mut [f64]) {
        let n = self.len as isize;
        x[..self.len].iter_mut().for_each(|v| *v = 0.0);
        for (r, &coef) in y.iter().enumerate().take(self.len) {
            if coef == 0.0 {
                continue;
            }
            match &self.replaced[r] {
                Some((first, coeffs)) => {
                    for (k, &t) in coeffs.iter().enumerate() {
                        x[first + k] += t * coef;
                    }
                }
                None => {
                    let (start, taps) = self.taps(r);
                    for (k, &t) in taps.iter().enumerate() {
                        let c = start + k as isize;
                        if (0..n).contains(&c) {
                            x[c as usize] += t * coef;
                        }
                    }
                }
            }
        }
    }
}

/// Separable single-scale 2D operator on an `h × w` row-major plane.
#[derive(Debug, Clone)]
pub(crate) struct ScaleOperator2d {
    rows: ScaleOperator,
    cols: ScaleOperator,
}

impl ScaleOperator2d {
    pub(crate) fn new(filter: &WaveletFilter, height: usize, width: usize, mode: BoundaryMode) -> Result<Self> {
        let rows = ScaleOperator::new(filter, height, mode)?;
        let cols = if width == height {
            rows.clone()
        } else {
            ScaleOperator::new(filter, width, mode)?
        };
        Ok(ScaleOperator2d { rows, cols })
    }

    /// Returns the quadrants `[a, h, v, d]` of `M_h X M_wᵀ`.
    pub(crate) fn analyze(&self, x: &[f64]) -> [Vec<f64>; 4] {
        let (h, w) = (self.rows.len(), self.cols.len());
        let mut tmp = vec![0.0; h * w];
        for (src, dst) in x.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
            self.cols.analyze(src, dst);
        }
        let mut col_in = vec![0.0; h];
        let mut col_out = vec![0.0; h];
        let mut y = vec![0.0; h * w];
        for j in 0..w {
            for i in 0..h {
                col_in[i] = tmp[i * w + j];
            }
            self.rows.analyze(&col_in, &mut col_out);
            for i in 0..h {
                y[i * w + j] = col_out[i];
            }
        }
        let (hh, hw) = (h / 2, w / 2);
        let quadrant = |r0: usize, c0: usize| -> Vec<f64> {
            let mut q = Vec::with_capacity(hh * hw);
            for i in 0..hh {
                q.extend_from_slice(&y[(r0 + i) * w + c0..(r0 + i) * w + c0 + hw]);
            }
            q
        };
        [quadrant(0, 0), quadrant(0, hw), quadrant(hh, 0), quadrant(hh, hw)]
    }

    /// Inverse of [`Self::analyze`] for orthogonal operators: `M_hᵀ Y M_w`.
    pub(crate) fn synthesize(&self, quads: [&[f64]; 4]) -> Vec<f64> {
        let (h, w) = (self.rows.len(), self.cols.len());
        let (hh, hw) = (h / 2, w / 2);
        let mut y = vec![0.0; h * w];
        for (q, (r0, c0)) in quads.iter().zip([(0, 0), (0, hw), (hh, 0), (hh, hw)]) {
            for i in 0..hh {
                y[(r0 + i) * w + c0..(r0 + i) * w + c0 + hw].copy_from_slice(&q[i * hw..(i + 1) * hw]);
            }
        }
        let mut col_in = vec![0.0; h];
        let mut col_out = vec![0.0; h];
        let mut tmp = vec![0.0; h * w];
        for j in 0..w {
            for i in 0..h {
                col_in[i] = y[i * w + j];
            }
            self.rows.synthesize(&col_in, &mut col_out);
            for i in 0..h {
                tmp[i * w + j] = col_out[i];
            }
        }
        let mut x = vec![0.0; h * w];
        for (src, dst) in tmp.chunks_exact(w).zip(x.chunks_exact_mut(w)) {
            self.cols.synthesize(src, dst);
        }
        x
    }
}
