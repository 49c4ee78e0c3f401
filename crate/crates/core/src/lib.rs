//! Boundary-wavelet fast wavelet transforms and 2D wavelet packets expressed
//! as sparse linear operators, with the packet statistics and the linear
//! packet classifier built on top of them.

pub mod classify;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod filterbank;
pub mod packets;
pub mod raster;
pub mod sparse_transform;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use filterbank::{builtin_filter, WaveletFilter};
pub use packets::{Ordering, PacketTensor};
pub use raster::Image;

pub use sparse_transform::{BoundaryMode, SparseOperator};
