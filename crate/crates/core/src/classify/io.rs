//! `WLM1` classifier files and weight-map export.
//!
//! Layout (little-endian): `b"WLM1"`, `u32` classes, `u32` feature dim,
//! `u8` feature kind (0 pixel, 1 packet), `u8` boundary mode (0 truncated,
//! 1 Gram-Schmidt), four `u32` layout fields (pixel: channels, height,
//! width, 0; packet: level, channels, packet height, packet width), `u32`
//! length + UTF-8 wavelet name, `u32` normalization channels followed by
//! that many `f64` means and `f64` standard deviations, `classes · dim`
//! `f64` weights (row-major), `classes` `f64` biases, then per class a
//! `u32` length + UTF-8 class name.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::packets::{packet_labels, Ordering, PacketTensor};
use crate::sparse_transform::BoundaryMode;

use super::{FeatureKind, FeatureLayout, LinearModel, NormStats};

const MAGIC: &[u8; 4] = b"WLM1";

/// Everything needed to classify raw images.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub kind: FeatureKind,
    pub layout: FeatureLayout,
    pub norm: NormStats,
    pub model: LinearModel,
    pub class_names: Vec<String>,
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::OutOfRange(format!("{v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn put_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        (&mut self.inner).take(n as u64).read_to_end(&mut buf)?;
        if buf.len() != n {
            return Err(Error::Format("truncated WLM1 file".into()));
        }
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("four bytes")) as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        if n > 1 << 16 {
            return Err(Error::Format(format!("string of {n} bytes")));
        }
        String::from_utf8(self.bytes(n)?).map_err(|_| Error::Format("string is not UTF-8".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.bytes(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect())
    }
}

pub fn write_classifier<W: Write>(c: &Classifier, mut w: W) -> Result<()> {
    if c.layout.dim() != c.model.dim || c.class_names.len() != c.model.classes {
        return Err(Error::ShapeMismatch("classifier parts disagree on dimensions".into()));
    }
    w.write_all(MAGIC)?;
    put_u32(&mut w, c.model.classes)?;
    put_u32(&mut w, c.model.dim)?;
    let (kind, mode, wavelet) = match &c.kind {
        FeatureKind::Pixels => (0u8, BoundaryMode::GramSchmidt, ""),
        FeatureKind::Packets { wavelet, mode, .. } => (1u8, *mode, wavelet.as_str()),
    };
    let mode = match mode {
        BoundaryMode::Truncated => 0u8,
        BoundaryMode::GramSchmidt => 1u8,
    };
    w.write_all(&[kind, mode])?;
    let dims = match c.layout {
        FeatureLayout::Pixels { channels, height, width } => [channels, height, width, 0],
        FeatureLayout::Packets {
            level,
            channels,
            packet_height,
            packet_width,
        } => [level, channels, packet_height, packet_width],
    };
    for d in dims {
        put_u32(&mut w, d)?;
    }
    put_str(&mut w, wavelet)?;
    put_u32(&mut w, c.norm.mean.len())?;
    put_f64s(&mut w, &c.norm.mean)?;
    put_f64s(&mut w, &c.norm.std)?;
    put_f64s(&mut w, &c.model.weights)?;
    put_f64s(&mut w, &c.model.bias)?;
    for name in &c.class_names {
        put_str(&mut w, name)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_classifier<R: Read>(r: R) -> Result<Classifier> {
    let mut r = Reader { inner: r };
    if r.bytes(4)? != MAGIC {
        return Err(Error::Format("bad magic, expected WLM1".into()));
    }
    let classes = r.u32()?;
    let dim = r.u32()?;
    let kind_tag = r.u8()?;
    let mode = match r.u8()? {
        0 => BoundaryMode::Truncated,
        1 => BoundaryMode::GramSchmidt,
        t => return Err(Error::Format(format!("boundary mode byte {t}"))),
    };
    let d: Vec<usize> = (0..4).map(|_| r.u32()).collect::<Result<_>>()?;
    let wavelet = r.string()?;
    let (kind, layout) = match kind_tag {
        0 => (
            FeatureKind::Pixels,
            FeatureLayout::Pixels {
                channels: d[0],
                height: d[1],
                width: d[2],
            },
        ),
        1 => {
            if d[0] == 0 || d[0] > 15 {
                return Err(Error::Format(format!("packet level {}", d[0])));
            }
            (
                FeatureKind::Packets {
                    wavelet,
                    level: d[0],
                    mode,
                },
                FeatureLayout::Packets {
                    level: d[0],
                    channels: d[1],
                    packet_height: d[2],
                    packet_width: d[3],
                },
            )
        }
        t => return Err(Error::Format(format!("feature kind byte {t}"))),
    };
    if classes == 0 || dim == 0 || layout.dim() != dim {
        return Err(Error::Format(format!(
            "{classes} classes, dimension {dim}, layout dimension {}",
            layout.dim()
        )));
    }
    let nc = r.u32()?;
    if nc != layout.channels() {
        return Err(Error::Format(format!("{nc} normalization channels for {}", layout.channels())));
    }
    let norm = NormStats {
        mean: r.f64s(nc)?,
        std: r.f64s(nc)?,
    };
    let model = LinearModel {
        classes,
        dim,
        weights: r.f64s(classes * dim)?,
        bias: r.f64s(classes)?,
    };
    let class_names = (0..classes).map(|_| r.string()).collect::<Result<_>>()?;
    let mut rest = Vec::new();
    r.inner.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok(Classifier {
        kind,
        layout,
        norm,
        model,
        class_names,
    })
}

pub fn write_classifier_file(c: &Classifier, path: &Path) -> Result<()> {
    write_classifier(c, BufWriter::new(File::create(path)?))
}

pub fn read_classifier_file(path: &Path) -> Result<Classifier> {
    read_classifier(BufReader::new(File::open(path)?))
}

fn packet_geometry(model: &LinearModel, layout: &FeatureLayout) -> Result<(usize, usize, usize, usize)> {
    match *layout {
        FeatureLayout::Packets {
            level,
            channels,
            packet_height,
            packet_width,
        } if layout.dim() == model.dim => Ok((level, channels, packet_height, packet_width)),
        FeatureLayout::Packets { .. } => Err(Error::ShapeMismatch(format!(
            "model dimension {} vs packet layout dimension {}",
            model.dim,
            layout.dim()
        ))),
        FeatureLayout::Pixels { .. } => Err(Error::ShapeMismatch("weight maps need a packet layout".into())),
    }
}

/// Each class's weight row as a natural-order packet tensor.
pub fn reshape_weights(model: &LinearModel, layout: &FeatureLayout) -> Result<Vec<PacketTensor>> {
    let (level, c, ph, pw) = packet_geometry(model, layout)?;
    (0..model.classes)
        .map(|k| PacketTensor::new(level, c, ph, pw, Ordering::Natural, model.class_weights(k).to_vec()))
        .collect()
}

/// Inverse of [`reshape_weights`].
pub fn flatten_weights(maps: &[PacketTensor]) -> Vec<f64> {
    maps.iter()
        .flat_map(|m| m.reordered(Ordering::Natural).into_data())
        .collect()
}

/// Per class: channel-averaged weights as a one-channel tensor in `ordering`.
pub fn export_weight_map(model: &LinearModel, layout: &FeatureLayout, ordering: Ordering) -> Result<Vec<PacketTensor>> {
    reshape_weights(model, layout)?
        .into_iter()
        .map(|t| {
            let n = t.packet_height() * t.packet_width();
            let mut data = Vec::with_capacity(t.packet_count() * n);
            for p in 0..t.packet_count() {
                for k in 0..n {
                    data.push((0..t.channels()).map(|ch| t.packet(p, ch)[k]).sum::<f64>() / t.channels() as f64);
                }
            }
            Ok(PacketTensor::new(t.level(), 1, t.packet_height(), t.packet_width(), Ordering::Natural, data)?
                .reordered(ordering))
        })
        .collect()
}

/// Long-form CSV `class,packet,label,row,col,value`.
pub fn write_weight_map_csv<W: Write>(maps: &[PacketTensor], mut w: W) -> Result<()> {
    writeln!(w, "class,packet,label,row,col,value")?;
    for (class, m) in maps.iter().enumerate() {
        let labels = packet_labels(m.level(), m.ordering())?;
        let pw = m.packet_width();
        for (p, label) in labels.iter().enumerate() {
            for (k, v) in m.packet(p, 0).iter().enumerate() {
                writeln!(w, "{class},{p},{label},{},{},{v:.16e}", k / pw, k % pw)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
