//! Packet labels and the natural/frequency orderings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const LETTERS: [char; 4] = ['a', 'h', 'v', 'd'];

/// Sequence in which packets are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Ordering {
    /// Lexicographic over filter paths: `aaa, aah, aav, aad, aha, …`.
    #[default]
    Natural,
    /// Row-major over a `2^Q × 2^Q` grid whose row and column frequency
    /// both increase away from the top-left packet.
    Frequency,
}

impl Ordering {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Ordering::Natural => 0,
            Ordering::Frequency => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Ordering::Natural),
            1 => Ok(Ordering::Frequency),
            t => Err(Error::Format(format!("unknown ordering byte {t}"))),
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ordering::Natural => "natural",
            Ordering::Frequency => "frequency",
        })
    }
}

impl FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "natural" => Ok(Ordering::Natural),
            "frequency" | "freq" => Ok(Ordering::Frequency),
            other => Err(format!("unknown ordering `{other}` (natural, frequency)")),
        }
    }
}

fn check_level(level: usize) -> Result<()> {
    if level == 0 || level > 15 {
        return Err(Error::OutOfRange(format!("packet level {level} (1..=15)")));
    }
    Ok(())
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// `perm[f]` is the natural index of the packet at frequency position `f`.
///
/// Position `f = i·2^Q + j` sits at grid row `i`, column `j`. Every high-pass
/// step mirrors the spectrum of its band, so the filter path reaching the
/// `i`-th row frequency band is the Gray code of `i` (1 = high-pass), read
/// from the first level down. Row and column paths are interleaved into the
/// base-4 digits `2·row_bit + col_bit`.
pub fn freq_order_permutation(level: usize) -> Result<Vec<usize>> {
    check_level(level)?;
    let side = 1usize << level;
    let mut perm = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let (r, c) = (gray(i), gray(j));
            let mut natural = 0;
            for bit in (0..level).rev() {
                natural = natural * 4 + 2 * ((r >> bit) & 1) + ((c >> bit) & 1);
            }
            perm.push(natural);
        }
    }
    Ok(perm)
}

/// Filter-path label of the natural-order packet `index`.
fn natural_label(index: usize, level: usize) -> String {
    (0..level)
        .rev()
        .map(|digit| LETTERS[(index >> (2 * digit)) & 3])
        .collect()
}

/// Label of the packet stored at `index` under `ordering`.
pub fn packet_label(index: usize, level: usize, ordering: Ordering) -> Result<String> {
    check_level(level)?;
    let count = 1usize << (2 * level);
    if index >= count {
        return Err(Error::OutOfRange(format!("packet index {index} of {count}")));
    }
    Ok(match ordering {
        Ordering::Natural => natural_label(index, level),
        Ordering::Frequency => natural_label(freq_order_permutation(level)?[index], level),
    })
}

/// All labels in storage order.
pub fn packet_labels(level: usize, ordering: Ordering) -> Result<Vec<String>> {
    check_level(level)?;
    let natural: Vec<String> = (0..1usize << (2 * level)).map(|i| natural_label(i, level)).collect();
    Ok(match ordering {
        Ordering::Natural => natural,
        Ordering::Frequency => freq_order_permutation(level)?
            .into_iter()
            .map(|n| natural[n].clone())
            .collect(),
    })
}

/// Natural index of a label such as `"hah"`.
pub fn label_index(label: &str) -> Result<usize> {
    if label.is_empty() {
        return Err(Error::OutOfRange("empty packet label".into()));
    }
    label.chars().try_fold(0usize, |acc, ch| {
        let digit = LETTERS
            .iter()
            .position(|&l| l == ch)
            .ok_or_else(|| Error::OutOfRange(format!("packet label `{label}`")))?;
        Ok(acc * 4 + digit)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_labels() {
        assert_eq!(packet_label(0, 3, Ordering::Natural).unwrap(), "aaa");
        assert_eq!(packet_label(63, 3, Ordering::Natural).unwrap(), "ddd");
        assert_eq!(packet_label(17, 3, Ordering::Natural).unwrap(), "hah");
        assert_eq!(packet_label(3, 1, Ordering::Natural).unwrap(), "d");
        assert!(packet_label(64, 3, Ordering::Natural).is_err());
        assert_eq!(label_index("hah").unwrap(), 17);
        assert!(label_index("hx").is_err());
    }

    #[test]
    fn level_one_frequency_order_is_identity() {
        assert_eq!(freq_order_permutation(1).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn permutation_is_a_bijection() {
        for q in 1..=4 {
            let mut p = freq_order_permutation(q).unwrap();
            p.sort_unstable();
            assert_eq!(p, (0..1 << (2 * q)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn level_three_corners() {
        let labels = packet_labels(3, Ordering::Frequency).unwrap();
        assert_eq!(labels[0], "aaa");
        // Highest row and column frequency: the Gray code of 7 is 100.
        assert_eq!(labels[63], "daa");
        assert_eq!(labels.iter().position(|l| l == "ddd"), Some(5 * 8 + 5));
        // First grid row keeps the low-pass row path.
        assert_eq!(&labels[..4], ["aaa", "aah", "ahh", "aha"]);
    }

    #[test]
    fn rejects_bad_level() {
        assert!(freq_order_permutation(0).is_err());
        assert!(packet_labels(0, Ordering::Natural).is_err());
    }
}
