use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::filterbank::builtin_filter;
use crate::packets::{Ordering, WaveletPacket2d};
use crate::raster::Image;
use crate::sparse_transform::BoundaryMode;
use crate::stats::{ln_abs_scale, ChannelPolicy};

/// Standard deviations below this are replaced by it.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// How an image becomes a feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    /// Raw pixels, `[channel][row][col]`.
    Pixels,
    /// ln-scaled natural-order packets, `[packet][channel][row][col]`.
    Packets {
        wavelet: String,
        level: usize,
        mode: BoundaryMode,
    },
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Pixels => f.write_str("pixel"),
            FeatureKind::Packets { wavelet, level, mode } => write!(f, "packet({wavelet}, level {level}, {mode})"),
        }
    }
}

/// Shape of a feature vector, used to group coefficients by channel and to
/// reshape weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLayout {
    Pixels {
        channels: usize,
        height: usize,
        width: usize,
    },
    Packets {
        level: usize,
        channels: usize,
        packet_height: usize,
        packet_width: usize,
    },
}

impl FeatureLayout {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureLayout::Pixels { channels, height, width } => channels * height * width,
            FeatureLayout::Packets {
                level,
                channels,
                packet_height,
                packet_width,
            } => (1 << (2 * level)) * channels * packet_height * packet_width,
        }
    }

    pub fn channels(&self) -> usize {
        match *self {
            FeatureLayout::Pixels { channels, .. } | FeatureLayout::Packets { channels, .. } => channels,
        }
    }

    /// Channel of feature `index`.
    pub fn channel_of(&self, index: usize) -> usize {
        match *self {
            FeatureLayout::Pixels { height, width, .. } => index / (height * width),
            FeatureLayout::Packets {
                channels,
                packet_height,
                packet_width,
                ..
            } => (index / (packet_height * packet_width)) % channels,
        }
    }
}

/// Feature extractor for images of one fixed size.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    kind: FeatureKind,
    layout: FeatureLayout,
    transform: Option<WaveletPacket2d>,
}

impl FeatureExtractor {
    pub fn new(kind: &FeatureKind, channels: usize, height: usize, width: usize) -> Result<Self> {
        let (layout, transform) = match kind {
            FeatureKind::Pixels => (FeatureLayout::Pixels { channels, height, width }, None),
            FeatureKind::Packets { wavelet, level, mode } => {
                let filter = builtin_filter(wavelet)?;
                let wpt = WaveletPacket2d::new(&filter, height, width, *level, *mode)?;
                (
                    FeatureLayout::Packets {
                        level: *level,
                        channels,
                        packet_height: height >> level,
                        packet_width: width >> level,
                    },
                    Some(wpt),
                )
            }
        };
        Ok(FeatureExtractor {
            kind: kind.clone(),
            layout,
            transform,
        })
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn extract(&self, image: &Image) -> Result<Vec<f64>> {
        if image.channels != self.layout.channels() {
            return Err(Error::ShapeMismatch(format!(
                "{}-channel image for a {}-channel extractor",
                image.channels,
                self.layout.channels()
            )));
        }
        match &self.transform {
            None => {
                let FeatureLayout::Pixels { height, width, .. } = self.layout else {
                    unreachable!("pixel extractor has a pixel layout")
                };
                if (image.height, image.width) != (height, width) {
                    return Err(Error::ShapeMismatch(format!(
                        "image is {}x{}, features expect {height}x{width}",
                        image.height, image.width
                    )));
                }
                Ok(image.data.clone())
            }
            Some(wpt) => {
                let packets = wpt.analyze(image, Ordering::Natural)?;
                Ok(ln_abs_scale(&packets, ChannelPolicy::PerChannel).into_data())
            }
        }
    }
}

/// Feature matrix with one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub classes: usize,
    pub data: Vec<f64>,
    pub labels: Vec<usize>,
}

impl FeatureSet {
    pub fn new(dim: usize, classes: usize, data: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 || data.len() != dim * labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} samples of dimension {dim}",
                data.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::OutOfRange(format!("label {bad} with {classes} classes")));
        }
        Ok(FeatureSet {
            dim,
            classes,
            data,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-channel scalar mean and standard deviation of the training features.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(set: &FeatureSet, layout: &FeatureLayout) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Empty("training split".into()));
        }
        if layout.dim() != set.dim {
            return Err(Error::ShapeMismatch(format!(
                "layout of dimension {} for features of dimension {}",
                layout.dim(),
                set.dim
            )));
        }
        let c = layout.channels();
        let channel: Vec<usize> = (0..set.dim).map(|k| layout.channel_of(k)).collect();
        let mut count = vec![0usize; c];
        let mut mean = vec![0.0; c];
        for i in 0..set.len() {
            for (k, &x) in set.sample(i).iter().enumerate() {
                count[channel[k]] += 1;
                mean[channel[k]] += x;
            }
        }
        mean.iter_mut().zip(&count).for_each(|(m, &n)| *m /= n as f64);
        let mut var = vec![0.0; c];
        for i in 0..set.len() {
            for (k, &x) in set.sample(i).iter().enumerate() {
                var[channel[k]] += (x - mean[channel[k]]).powi(2);
            }
        }
        let std = var
            .iter()
            .zip(&count)
            .enumerate()
            .map(|(ch, (v, &n))| {
                let s = (v / n as f64).sqrt();
                if s < SIGMA_FLOOR {
                    warn!("channel {ch} has zero variance; flooring its std at {SIGMA_FLOOR}");
                    SIGMA_FLOOR
                } else {
                    s
                }
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    fn check(&self, layout: &FeatureLayout, set: &FeatureSet) -> Result<()> {
        if self.mean.len() != layout.channels() || layout.dim() != set.dim {
            return Err(Error::ShapeMismatch(format!(
                "normalization for {} channels applied to a {}-channel layout of dimension {}",
                self.mean.len(),
                layout.channels(),
                set.dim
            )));
        }
        Ok(())
    }

    pub fn apply(&self, set: &mut FeatureSet, layout: &FeatureLayout) -> Result<()> {
        self.check(layout, set)?;
        let channel: Vec<usize> = (0..set.dim).map(|k| layout.channel_of(k)).collect();
        for row in set.data.chunks_exact_mut(set.dim) {
            for (k, x) in row.iter_mut().enumerate() {
                *x = (*x - self.mean[channel[k]]) / self.std[channel[k]];
            }
        }
        Ok(())
    }

    pub fn denormalize(&self, set: &mut FeatureSet, layout: &FeatureLayout) -> Result<()> {
        self.check(layout, set)?;
        let channel: Vec<usize> = (0..set.dim).map(|k| layout.channel_of(k)).collect();
        for row in set.data.chunks_exact_mut(set.dim) {
            for (k, x) in row.iter_mut().enumerate() {
                *x = *x * self.std[channel[k]] + self.mean[channel[k]];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> FeatureLayout {
        FeatureLayout::Pixels {
            channels: 2,
            height: 1,
            width: 3,
        }
    }

    fn set() -> FeatureSet {
        let data = vec![
            1.0, 2.0, 3.0, 5.0, 5.0, 5.0, //
            4.0, 5.0, 6.0, 5.0, 5.0, 5.0,
        ];
        FeatureSet::new(6, 2, data, vec![0, 1]).unwrap()
    }

    #[test]
    fn channels_of_layouts() {
        let p = FeatureLayout::Packets {
            level: 1,
            channels: 3,
            packet_height: 2,
            packet_width: 2,
        };
        assert_eq!(p.dim(), 48);
        assert_eq!(p.channel_of(0), 0);
        assert_eq!(p.channel_of(4), 1);
        assert_eq!(p.channel_of(12), 0);
        assert_eq!(layout().channel_of(3), 1);
    }

    #[test]
    fn normalization_standardizes_and_floors() {
        let mut s = set();
        let norm = NormStats::fit(&s, &layout()).unwrap();
        assert_eq!(norm.std[1], SIGMA_FLOOR);
        assert!((norm.mean[0] - 3.5).abs() < 1e-15);
        norm.apply(&mut s, &layout()).unwrap();
        let ch0: Vec<f64> = [0, 1, 2, 6, 7, 8].iter().map(|&i| s.data[i]).collect();
        let mean = ch0.iter().sum::<f64>() / 6.0;
        let var = ch0.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 6.0;
        assert!(mean.abs() < 1e-6 && (var.sqrt() - 1.0).abs() < 1e-6);
        assert!([3, 4, 5, 9, 10, 11].iter().all(|&i| s.data[i] == 0.0));
    }

    #[test]
    fn standardized_data_is_a_fixed_point() {
        let mut s = set();
        let norm = NormStats::fit(&s, &layout()).unwrap();
        norm.apply(&mut s, &layout()).unwrap();
        let again = NormStats::fit(&s, &layout()).unwrap();
        assert!(again.mean[0].abs() < 1e-12 && (again.std[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn denormalize_round_trip() {
        let orig = set();
        let mut s = orig.clone();
        let norm = NormStats::fit(&s, &layout()).unwrap();
        norm.apply(&mut s, &layout()).unwrap();
        norm.denormalize(&mut s, &layout()).unwrap();
        for (a, b) in s.data.iter().zip(&orig.data) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn packet_features_are_ln_scaled() {
        let kind = FeatureKind::Packets {
            wavelet: "haar".into(),
            level: 1,
            mode: BoundaryMode::GramSchmidt,
        };
        let ex = FeatureExtractor::new(&kind, 1, 2, 2).unwrap();
        let f = ex.extract(&Image::filled(1, 2, 2, 0.5)).unwrap();
        assert_eq!(f.len(), 4);
        assert!((f[0] - (1.0f64 + 1e-12).ln()).abs() < 1e-12);
        assert!((f[3] - (1e-12f64).ln()).abs() < 1e-3);
    }
}
