//! `WPK1` binary packet files and long-form CSV export.
//!
//! Layout (little-endian): `b"WPK1"`, `u32` level, `u32` channels, `u32`
//! packet height, `u32` packet width, `u8` ordering (0 natural,
//! 1 frequency), then `4^level · channels · height · width` `f64` values in
//! `[packet][channel][row][col]` order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{packet_labels, Ordering, PacketTensor};

const MAGIC: &[u8; 4] = b"WPK1";

pub fn write_wpk<W: Write>(tensor: &PacketTensor, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [
        tensor.level(),
        tensor.channels(),
        tensor.packet_height(),
        tensor.packet_width(),
    ] {
        let v = u32::try_from(v).map_err(|_| Error::OutOfRange(format!("dimension {v} exceeds u32")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[tensor.ordering().tag()])?;
    for v in tensor.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

pub fn read_wpk<R: Read>(mut r: R) -> Result<PacketTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated WPK1 header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected WPK1")));
    }
    let level = read_u32(&mut r)?;
    let channels = read_u32(&mut r)?;
    let ph = read_u32(&mut r)?;
    let pw = read_u32(&mut r)?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let ordering = Ordering::from_tag(tag[0])?;
    if level == 0 || level > 15 {
        return Err(Error::Format(format!("packet level {level}")));
    }
    let count = (1usize << (2 * level))
        .checked_mul(channels)
        .and_then(|n| n.checked_mul(ph))
        .and_then(|n| n.checked_mul(pw))
        .ok_or_else(|| Error::Format("WPK1 dimensions overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "WPK1 payload has {} bytes, header implies {}",
            bytes.len(),
            count * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    PacketTensor::new(level, channels, ph, pw, ordering, data)
}

pub fn write_wpk_file(tensor: &PacketTensor, path: &Path) -> Result<()> {
    write_wpk(tensor, BufWriter::new(File::create(path)?))
}

pub fn read_wpk_file(path: &Path) -> Result<PacketTensor> {
    read_wpk(BufReader::new(File::open(path)?))
}

/// Long-form CSV `packet,label,channel,row,col,value` in storage order.
pub fn write_packet_csv<W: Write>(tensor: &PacketTensor, mut w: W) -> Result<()> {
    let labels = packet_labels(tensor.level(), tensor.ordering())?;
    writeln!(w, "packet,label,channel,row,col,value")?;
    for (p, label) in labels.iter().enumerate() {
        for c in 0..tensor.channels() {
            for (k, v) in tensor.packet(p, c).iter().enumerate() {
                let (row, col) = (k / tensor.packet_width(), k % tensor.packet_width());
                writeln!(w, "{p},{label},{c},{row},{col},{v:.16e}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PacketTensor {
        let data = (0..16 * 2 * 3).map(|i| i as f64 * 0.1 - 2.0).collect();
        PacketTensor::new(2, 2, 1, 3, Ordering::Frequency, data).unwrap()
    }

    #[test]
    fn wpk_round_trip_is_bit_exact() {
        let t = sample();
        let mut buf = Vec::new();
        write_wpk(&t, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"WPK1");
        assert_eq!(buf.len(), 4 + 16 + 1 + 96 * 8);
        assert_eq!(buf[20], 1);
        assert_eq!(read_wpk(&buf[..]).unwrap(), t);
    }

    #[test]
    fn wpk_rejects_corruption() {
        let mut buf = Vec::new();
        write_wpk(&sample(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_wpk(&bad[..]), Err(Error::Format(_))));
        assert!(matches!(read_wpk(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[20] = 7;
        assert!(matches!(read_wpk(&bad[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_packet_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "packet,label,channel,row,col,value");
        assert_eq!(lines.len(), 1 + 96);
        assert!(lines[1].starts_with("0,aa,0,0,0,"));
        assert!(lines[7].starts_with("1,ah,0,0,0,"));
    }
}
