//! Dataset-level packet statistics.
//!
//! Coefficients are ln-scaled, then accumulated per coefficient with
//! Welford's update; partial accumulators merge with Chan's formula so
//! shards can be reduced in any grouping.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::packets::{packet_labels, Ordering, PacketTensor};

/// Added inside the logarithm so that zero coefficients map to a finite value.
pub const LN_EPSILON: f64 = 1e-12;

/// Tensors per shard in [`accumulate_stats_parallel`].
const SHARD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelPolicy {
    /// Mean of `|x|` over channels before the logarithm; one output channel.
    #[default]
    Averaged,
    PerChannel,
}

impl fmt::Display for ChannelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelPolicy::Averaged => "averaged",
            ChannelPolicy::PerChannel => "per-channel",
        })
    }
}

impl FromStr for ChannelPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "averaged" | "average" | "mean" => Ok(ChannelPolicy::Averaged),
            "per-channel" | "perchannel" => Ok(ChannelPolicy::PerChannel),
            other => Err(format!("unknown channel policy `{other}` (averaged, per-channel)")),
        }
    }
}

fn ln_abs(x: f64) -> f64 {
    (x.abs() + LN_EPSILON).ln()
}

/// Elementwise `ln(|x| + ε)`.
pub fn ln_abs_scale(packets: &PacketTensor, policy: ChannelPolicy) -> PacketTensor {
    match policy {
        ChannelPolicy::PerChannel => {
            let mut out = packets.clone();
            out.data_mut().iter_mut().for_each(|v| *v = ln_abs(*v));
            out
        }
        ChannelPolicy::Averaged => {
            let c = packets.channels();
            let n = packets.packet_height() * packets.packet_width();
            let mut data = Vec::with_capacity(packets.packet_count() * n);
            for p in 0..packets.packet_count() {
                for k in 0..n {
                    let mean = (0..c).map(|ch| packets.packet(p, ch)[k].abs()).sum::<f64>() / c as f64;
                    data.push(ln_abs(mean));
                }
            }
            PacketTensor::new(
                packets.level(),
                1,
                packets.packet_height(),
                packets.packet_width(),
                packets.ordering(),
                data,
            )
            .expect("shape derived from a valid tensor")
        }
    }
}

/// Running per-coefficient mean and sum of squared deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketStats {
    level: usize,
    channels: usize,
    packet_height: usize,
    packet_width: usize,
    ordering: Ordering,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl PacketStats {
    /// Empty accumulator shaped like `template`.
    pub fn empty_like(template: &PacketTensor) -> Self {
        let n = template.data().len();
        PacketStats {
            level: template.level(),
            channels: template.channels(),
            packet_height: template.packet_height(),
            packet_width: template.packet_width(),
            ordering: template.ordering(),
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
        }
    }

    fn same_shape(&self, level: usize, c: usize, ph: usize, pw: usize, ordering: Ordering) -> bool {
        (self.level, self.channels, self.packet_height, self.packet_width, self.ordering) == (level, c, ph, pw, ordering)
    }

    fn describe(&self) -> String {
        format!(
            "level {} x {} channels x {}x{} ({})",
            self.level, self.channels, self.packet_height, self.packet_width, self.ordering
        )
    }

    pub fn push(&mut self, t: &PacketTensor) -> Result<()> {
        if !self.same_shape(t.level(), t.channels(), t.packet_height(), t.packet_width(), t.ordering()) {
            return Err(Error::ShapeMismatch(format!(
                "tensor level {} x {} channels x {}x{} ({}) pushed into {}",
                t.level(),
                t.channels(),
                t.packet_height(),
                t.packet_width(),
                t.ordering(),
                self.describe()
            )));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(t.data()) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
        Ok(())
    }

    /// Combine with statistics of a disjoint sample.
    pub fn merge(&mut self, other: &PacketStats) -> Result<()> {
        if !self.same_shape(other.level, other.channels, other.packet_height, other.packet_width, other.ordering) {
            return Err(Error::ShapeMismatch(format!("{} merged into {}", other.describe(), self.describe())));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.count
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

    /// Per-coefficient mean, `[packet][channel][row][col]`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Per-coefficient sample standard deviation.
    pub fn std(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::TooFewSamples(self.count));
        }
        let d = (self.count - 1) as f64;
        Ok(self.m2.iter().map(|s| (s.max(0.0) / d).sqrt()).collect())
    }

    fn as_tensor(&self, data: Vec<f64>) -> PacketTensor {
        PacketTensor::new(
            self.level,
            self.channels,
            self.packet_height,
            self.packet_width,
            self.ordering,
            data,
        )
        .expect("shape of a valid accumulator")
    }

    pub fn mean_tensor(&self) -> PacketTensor {
        self.as_tensor(self.mean.clone())
    }

    pub fn std_tensor(&self) -> Result<PacketTensor> {
        Ok(self.as_tensor(self.std()?))
    }
}

/// Single-pass statistics over a stream; requires at least two tensors.
pub fn accumulate_stats<'a, I>(stream: I) -> Result<PacketStats>
where
    I: IntoIterator<Item = &'a PacketTensor>,
{
    let mut iter = stream.into_iter();
    let first = iter.next().ok_or(Error::TooFewSamples(0))?;
    let mut stats = PacketStats::empty_like(first);
    stats.push(first)?;
    for t in iter {
        stats.push(t)?;
    }
    if stats.count < 2 {
        return Err(Error::TooFewSamples(stats.count));
    }
    Ok(stats)
}

/// Shards of fixed size accumulated in parallel and merged in input order,
/// so the result does not depend on the thread count.
pub fn accumulate_stats_parallel(tensors: &[PacketTensor]) -> Result<PacketStats> {
    let first = tensors.first().ok_or(Error::TooFewSamples(0))?;
    let shards: Vec<Result<PacketStats>> = tensors
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut s = PacketStats::empty_like(first);
            for t in chunk {
                s.push(t)?;
            }
            Ok(s)
        })
        .collect();
    let mut total = PacketStats::empty_like(first);
    for s in shards {
        total.merge(&s?)?;
    }
    if total.count < 2 {
        return Err(Error::TooFewSamples(total.count));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsDifference {
    pub mean_abs_diff: PacketTensor,
    pub std_abs_diff: PacketTensor,
}

pub fn stats_difference(a: &PacketStats, b: &PacketStats) -> Result<StatsDifference> {
    if !a.same_shape(b.level, b.channels, b.packet_height, b.packet_width, b.ordering) {
        return Err(Error::ShapeMismatch(format!("{} vs {}", a.describe(), b.describe())));
    }
    let abs_diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).collect::<Vec<_>>();
    Ok(StatsDifference {
        mean_abs_diff: a.as_tensor(abs_diff(&a.mean, &b.mean)),
        std_abs_diff: a.as_tensor(abs_diff(&a.std()?, &b.std()?)),
    })
}

/// One plotted packet: spatial (and channel) average of the mean and std maps.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub index: usize,
    pub label: String,
    pub mean: f64,
    pub std: f64,
}

fn packet_averages(t: &PacketTensor) -> Vec<f64> {
    (0..t.packet_count())
        .map(|p| {
            let vals: Vec<f64> = (0..t.channels()).flat_map(|c| t.packet(p, c).to_vec()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

pub fn packet_curve(stats: &PacketStats, ordering: Ordering) -> Result<Vec<CurvePoint>> {
    let mean = stats.mean_tensor().reordered(ordering);
    let std = stats.std_tensor()?.reordered(ordering);
    let labels = packet_labels(stats.level, ordering)?;
    Ok(labels
        .into_iter()
        .zip(packet_averages(&mean).into_iter().zip(packet_averages(&std)))
        .enumerate()
        .map(|(index, (label, (mean, std)))| CurvePoint { index, label, mean, std })
        .collect())
}

/// Curve of a difference map, one value per packet in `ordering`.
pub fn packet_profile(map: &PacketTensor, ordering: Ordering) -> Vec<f64> {
    packet_averages(&map.reordered(ordering))
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "packet_index,label,mean,std")?;
    for p in curve {
        writeln!(w, "{},{},{:.16e},{:.16e}", p.index, p.label, p.mean, p.std)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form heat map `packet,row,col,value`; channels are averaged.
pub fn write_heatmap_csv<W: Write>(map: &PacketTensor, mut w: W) -> Result<()> {
    writeln!(w, "packet,row,col,value")?;
    let c = map.channels();
    let pw = map.packet_width();
    for p in 0..map.packet_count() {
        for k in 0..map.packet_height() * pw {
            let v = (0..c).map(|ch| map.packet(p, ch)[k]).sum::<f64>() / c as f64;
            writeln!(w, "{p},{},{},{v:.16e}", k / pw, k % pw)?;
        }
    }
    w.flush()?;
    Ok(())
}
