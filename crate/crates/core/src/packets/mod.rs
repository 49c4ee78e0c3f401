//! Full 2D wavelet-packet decomposition and the standard multi-level 2D FWT.
//!
//! The direct recursion (strided convolutions with stored boundary rows) is
//! the performance path; [`packet_analysis_operator`] assembles the same map
//! as a sparse matrix and serves as the cross-check.

mod direct;
mod io;
mod order;
mod wpt;

pub use io::{read_wpk, read_wpk_file, write_packet_csv, write_wpk, write_wpk_file};
pub use order::{freq_order_permutation, label_index, packet_label, packet_labels, Ordering};
pub use wpt::{
    fwt_2d, ifwt_2d, iwpt_2d, packet_analysis_operator, wpt_2d, FwtCoefficients, WaveletPacket2d,
};

use crate::error::{Error, Result};

/// Packets of one decomposition, stored `data[packet][channel][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTensor {
    level: usize,
    channels: usize,
    packet_height: usize,
    packet_width: usize,
    ordering: Ordering,
    data: Vec<f64>,
}

impl PacketTensor {
    pub fn new(
        level: usize,
        channels: usize,
        packet_height: usize,
        packet_width: usize,
        ordering: Ordering,
        data: Vec<f64>,
    ) -> Result<Self> {
        if level == 0 || level > 15 {
            return Err(Error::OutOfRange(format!("packet level {level} (1..=15)")));
        }
        if channels == 0 || packet_height == 0 || packet_width == 0 {
            return Err(Error::ShapeMismatch("packet dimensions must be positive".into()));
        }
        let want = (1usize << (2 * level)) * channels * packet_height * packet_width;
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} packets of {channels}x{packet_height}x{packet_width}",
                data.len(),
                1usize << (2 * level)
            )));
        }
        Ok(PacketTensor {
            level,
            channels,
            packet_height,
            packet_width,
            ordering,
            data,
        })
    }

    pub fn zeros(level: usize, channels: usize, packet_height: usize, packet_width: usize) -> Result<Self> {
        let n = (1usize << (2 * level.min(15))) * channels * packet_height * packet_width;
        Self::new(level, channels, packet_height, packet_width, Ordering::Natural, vec![0.0; n])
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn packet_height(&self) -> usize {
        self.packet_height
    }

    pub fn packet_width(&self) -> usize {
        self.packet_width
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn packet_count(&self) -> usize {
        1 << (2 * self.level)
    }

    /// Height and width of the image this tensor decomposes.
    pub fn image_shape(&self) -> (usize, usize) {
        (self.packet_height << self.level, self.packet_width << self.level)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn plane_len(&self) -> usize {
        self.packet_height * self.packet_width
    }

    /// One packet plane at storage position `packet`.
    pub fn packet(&self, packet: usize, channel: usize) -> &[f64] {
        let n = self.plane_len();
        let start = (packet * self.channels + channel) * n;
        &self.data[start..start + n]
    }

    pub fn packet_mut(&mut self, packet: usize, channel: usize) -> &mut [f64] {
        let n = self.plane_len();
        let start = (packet * self.channels + channel) * n;
        &mut self.data[start..start + n]
    }

    /// Label of the packet at storage position `packet`.
    pub fn label(&self, packet: usize) -> Result<String> {
        packet_label(packet, self.level, self.ordering)
    }

    /// Same coefficients, re-stored under `ordering`.
    pub fn reordered(&self, ordering: Ordering) -> PacketTensor {
        if ordering == self.ordering {
            return self.clone();
        }
        let perm = freq_order_permutation(self.level).expect("level validated at construction");
        let block = self.channels * self.plane_len();
        let mut data = vec![0.0; self.data.len()];
        for (f, &n) in perm.iter().enumerate() {
            let (dst, src) = match ordering {
                Ordering::Frequency => (f, n),
                Ordering::Natural => (n, f),
            };
            data[dst * block..(dst + 1) * block].copy_from_slice(&self.data[src * block..(src + 1) * block]);
        }
        PacketTensor {
            ordering,
            data,
            ..*self
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn channel_energy(&self, channel: usize) -> f64 {
        (0..self.packet_count())
            .flat_map(|p| self.packet(p, channel))
            .map(|v| v * v)
            .sum()
    }
}
