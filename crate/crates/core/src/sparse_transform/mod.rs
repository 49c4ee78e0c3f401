//! Stride-2 convolution matrices, multi-level analysis/synthesis operators
//! and Gram-Schmidt boundary orthogonalization.

mod conv;
mod gram_schmidt;
mod operator;
mod two_d;

use std::fmt;
use std::str::FromStr;

pub use conv::{
    analysis_matrix_1d, analysis_scales_1d, boundary_phase, boundary_rows, conv_matrix_1d, scale_matrix,
    synthesis_matrix_1d, synthesis_scale_matrix, synthesis_scales_1d, truncated_conv_matrix,
    truncated_scale_matrix, truncated_transposed_conv_matrix,
};
pub(crate) use conv::check_levels;
pub use gram_schmidt::gram_schmidt_orthogonalize;
pub use operator::SparseOperator;
pub use two_d::{
    analysis_matrix_2d, analysis_scales_2d, direct_scale_matrix_2d, filter_quadruple_2d, scale_matrix_2d,
    synthesis_matrix_2d, synthesis_scale_matrix_2d, synthesis_scales_2d, FilterQuadruple,
};

/// How rows cut by the signal edges are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryMode {
    /// Taps outside the signal are dropped; not invertible for filters longer
    /// than two taps.
    Truncated,
    /// Truncated rows are re-orthogonalized, giving an orthogonal operator.
    #[default]
    GramSchmidt,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Truncated => "truncated",
            BoundaryMode::GramSchmidt => "gram-schmidt",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "truncated" => Ok(BoundaryMode::Truncated),
            "gram-schmidt" | "gramschmidt" | "boundary" => Ok(BoundaryMode::GramSchmidt),
            other => Err(format!("unknown boundary mode `{other}` (truncated, gram-schmidt)")),
        }
    }
}
