use crate::error::{Error, Result};
use crate::filterbank::WaveletFilter;
use crate::raster::Image;
use crate::sparse_transform::{check_levels, scale_matrix_2d, BoundaryMode, SparseOperator};

use super::direct::ScaleOperator2d;
use super::{Ordering, PacketTensor};

fn check_shape(height: usize, width: usize, levels: usize) -> Result<()> {
    check_levels(height, levels)?;
    check_levels(width, levels)
}

fn check_invertible(filter: &WaveletFilter, mode: BoundaryMode) -> Result<()> {
    if mode == BoundaryMode::Truncated && filter.needs_boundary_treatment() {
        return Err(Error::LossyInverse(filter.name.clone()));
    }
    Ok(())
}

/// Precomputed per-depth operators for repeated packet transforms of
/// same-sized images.
#[derive(Debug, Clone)]
pub struct WaveletPacket2d {
    filter: WaveletFilter,
    height: usize,
    width: usize,
    level: usize,
    mode: BoundaryMode,
    ops: Vec<ScaleOperator2d>,
}

impl WaveletPacket2d {
    pub fn new(filter: &WaveletFilter, height: usize, width: usize, level: usize, mode: BoundaryMode) -> Result<Self> {
        check_shape(height, width, level)?;
        let ops = (0..level)
            .map(|q| ScaleOperator2d::new(filter, height >> q, width >> q, mode))
            .collect::<Result<_>>()?;
        Ok(WaveletPacket2d {
            filter: filter.clone(),
            height,
            width,
            level,
            mode,
            ops,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn packet_shape(&self) -> (usize, usize) {
        (self.height >> self.level, self.width >> self.level)
    }

    /// Natural-order packets of one plane.
    fn analyze_plane(&self, plane: &[f64]) -> Vec<Vec<f64>> {
        let mut nodes = vec![plane.to_vec()];
        for op in &self.ops {
            nodes = nodes.iter().flat_map(|n| op.analyze(n)).collect();
        }
        nodes
    }

    fn synthesize_plane(&self, mut nodes: Vec<Vec<f64>>) -> Vec<f64> {
        for op in self.ops.iter().rev() {
            nodes = nodes
                .chunks_exact(4)
                .map(|c| op.synthesize([&c[0], &c[1], &c[2], &c[3]]))
                .collect();
        }
        nodes.pop().expect("root node")
    }

    pub fn analyze(&self, image: &Image, ordering: Ordering) -> Result<PacketTensor> {
        if (image.height, image.width) != (self.height, self.width) {
            return Err(Error::ShapeMismatch(format!(
                "image is {}x{}, transform expects {}x{}",
                image.height, image.width, self.height, self.width
            )));
        }
        let (ph, pw) = self.packet_shape();
        let count = 1usize << (2 * self.level);
        let c = image.channels;
        let mut data = vec![0.0; count * c * ph * pw];
        for ch in 0..c {
            for (p, node) in self.analyze_plane(image.plane(ch)).into_iter().enumerate() {
                let start = (p * c + ch) * ph * pw;
                data[start..start + ph * pw].copy_from_slice(&node);
            }
        }
        let natural = PacketTensor::new(self.level, c, ph, pw, Ordering::Natural, data)?;
        Ok(natural.reordered(ordering))
    }

    pub fn synthesize(&self, packets: &PacketTensor) -> Result<Image> {
        check_invertible(&self.filter, self.mode)?;
        if packets.level() != self.level || packets.image_shape() != (self.height, self.width) {
            return Err(Error::ShapeMismatch(format!(
                "level-{} packets of a {:?} image do not fit a level-{} {}x{} transform",
                packets.level(),
                packets.image_shape(),
                self.level,
                self.height,
                self.width
            )));
        }
        let natural = packets.reordered(Ordering::Natural);
        let c = natural.channels();
        let mut image = Image::zeros(c, self.height, self.width);
        for ch in 0..c {
            let nodes = (0..natural.packet_count())
                .map(|p| natural.packet(p, ch).to_vec())
                .collect();
            image.plane_mut(ch).copy_from_slice(&self.synthesize_plane(nodes));
        }
        Ok(image)
    }
}

/// Level-`level` wavelet packet transform of every channel.
pub fn wpt_2d(
    image: &Image,
    filter: &WaveletFilter,
    level: usize,
    mode: BoundaryMode,
    ordering: Ordering,
) -> Result<PacketTensor> {
    WaveletPacket2d::new(filter, image.height, image.width, level, mode)?.analyze(image, ordering)
}

/// Inverse packet transform. Truncated mode is rejected unless the filter
/// has two taps.
pub fn iwpt_2d(packets: &PacketTensor, filter: &WaveletFilter, mode: BoundaryMode) -> Result<Image> {
    check_invertible(filter, mode)?;
    let (h, w) = packets.image_shape();
    WaveletPacket2d::new(filter, h, w, packets.level(), mode)?.synthesize(packets)
}

/// Sparse matrix mapping a row-major `height × width` plane to its stacked
/// natural-order packets, as the product of block-diagonal 2D scale
/// operators.
pub fn packet_analysis_operator(
    filter: &WaveletFilter,
    height: usize,
    width: usize,
    level: usize,
    mode: BoundaryMode,
) -> Result<SparseOperator> {
    check_shape(height, width, level)?;
    let mut acc: Option<SparseOperator> = None;
    for q in 0..level {
        let block = scale_matrix_2d(filter, height >> q, width >> q, mode)?;
        let copies = vec![&block; 1 << (2 * q)];
        let stage = SparseOperator::block_diag(&copies);
        acc = Some(match acc {
            None => stage,
            Some(prev) => stage.matmul(&prev)?,
        });
    }
    Ok(acc.expect("level >= 1"))
}

/// Result of the standard 2D FWT: recursion on the approximation only.
#[derive(Debug, Clone, PartialEq)]
pub struct FwtCoefficients {
    /// Coarsest approximation band.
    pub approx: Image,
    /// `[h, v, d]` bands per level, coarsest first.
    pub details: Vec<[Image; 3]>,
}

impl FwtCoefficients {
    pub fn levels(&self) -> usize {
        self.details.len()
    }
}

pub fn fwt_2d(image: &Image, filter: &WaveletFilter, levels: usize, mode: BoundaryMode) -> Result<FwtCoefficients> {
    check_shape(image.height, image.width, levels)?;
    let c = image.channels;
    let mut current = image.clone();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (h, w) = (current.height, current.width);
        let op = ScaleOperator2d::new(filter, h, w, mode)?;
        let mut bands: [Image; 4] = std::array::from_fn(|_| Image::zeros(c, h / 2, w / 2));
        for ch in 0..c {
            for (band, quad) in bands.iter_mut().zip(op.analyze(current.plane(ch))) {
                band.plane_mut(ch).copy_from_slice(&quad);
            }
        }
        let [a, hb, vb, db] = bands;
        details.push([hb, vb, db]);
        current = a;
    }
    details.reverse();
    Ok(FwtCoefficients {
        approx: current,
        details,
    })
}

pub fn ifwt_2d(coeffs: &FwtCoefficients, filter: &WaveletFilter, mode: BoundaryMode) -> Result<Image> {
    check_invertible(filter, mode)?;
    let mut current = coeffs.approx.clone();
    for [hb, vb, db] in &coeffs.details {
        for band in [hb, vb, db] {
            if (band.channels, band.height, band.width) != (current.channels, current.height, current.width) {
                return Err(Error::ShapeMismatch(format!(
                    "detail band {}x{}x{} next to approximation {}x{}x{}",
                    band.channels, band.height, band.width, current.channels, current.height, current.width
                )));
            }
        }
        let (h, w) = (current.height * 2, current.width * 2);
        let op = ScaleOperator2d::new(filter, h, w, mode)?;
        let mut next = Image::zeros(current.channels, h, w);
        for ch in 0..current.channels {
            let plane = op.synthesize([current.plane(ch), hb.plane(ch), vb.plane(ch), db.plane(ch)]);
            next.plane_mut(ch).copy_from_slice(&plane);
        }
        current = next;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::{all_builtin, builtin_filter};
    use crate::packets::label_index;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(c: usize, h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn haar_constant_image() {
        let f = builtin_filter("haar").unwrap();
        let p = wpt_2d(&Image::filled(1, 32, 32, 0.25), &f, 3, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
        for idx in 0..64 {
            for &v in p.packet(idx, 0) {
                let want = if idx == 0 { 2.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn packet_tensor_shape() {
        let f = builtin_filter("haar").unwrap();
        let p = wpt_2d(&Image::zeros(3, 128, 128), &f, 3, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
        assert_eq!((p.packet_count(), p.channels(), p.packet_height(), p.packet_width()), (64, 3, 16, 16));
    }

    #[test]
    fn direct_path_matches_operator_path() {
        let f = builtin_filter("db3").unwrap();
        let img = random_image(1, 32, 32, 1);
        let p = wpt_2d(&img, &f, 2, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
        let op = packet_analysis_operator(&f, 32, 32, 2, BoundaryMode::GramSchmidt).unwrap();
        let y = op.matvec(img.plane(0)).unwrap();
        for (a, b) in p.data().iter().zip(&y) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn round_trip_sym4() {
        let f = builtin_filter("sym4").unwrap();
        let img = random_image(2, 64, 64, 2);
        let p = wpt_2d(&img, &f, 3, BoundaryMode::GramSchmidt, Ordering::Frequency).unwrap();
        let back = iwpt_2d(&p, &f, BoundaryMode::GramSchmidt).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-6);
    }

    #[test]
    fn zero_and_constant_tensors() {
        let f = builtin_filter("db2").unwrap();
        let zero = PacketTensor::zeros(2, 1, 4, 4).unwrap();
        assert!(iwpt_2d(&zero, &f, BoundaryMode::GramSchmidt).unwrap().data.iter().all(|&v| v == 0.0));

        let haar = builtin_filter("haar").unwrap();
        let mut t = PacketTensor::zeros(3, 1, 2, 2).unwrap();
        t.packet_mut(0, 0).iter_mut().for_each(|v| *v = 8.0 * 0.3);
        let img = iwpt_2d(&t, &haar, BoundaryMode::GramSchmidt).unwrap();
        assert!(img.data.iter().all(|&v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn truncated_inverse_is_rejected() {
        let f = builtin_filter("db2").unwrap();
        let p = wpt_2d(&random_image(1, 16, 16, 3), &f, 1, BoundaryMode::Truncated, Ordering::Natural).unwrap();
        assert!(matches!(iwpt_2d(&p, &f, BoundaryMode::Truncated), Err(Error::LossyInverse(_))));
        let haar = builtin_filter("haar").unwrap();
        let img = random_image(1, 16, 16, 4);
        let p = wpt_2d(&img, &haar, 2, BoundaryMode::Truncated, Ordering::Natural).unwrap();
        assert!(iwpt_2d(&p, &haar, BoundaryMode::Truncated).unwrap().max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn divisibility_is_checked() {
        let f = builtin_filter("haar").unwrap();
        assert!(matches!(
            wpt_2d(&Image::zeros(1, 24, 24), &f, 4, BoundaryMode::GramSchmidt, Ordering::Natural),
            Err(Error::NotDivisible { .. }) | Err(Error::LevelTooDeep { .. })
        ));
    }

    #[test]
    fn fwt_haar_block_image() {
        let f = builtin_filter("haar").unwrap();
        let c = fwt_2d(&Image::filled(1, 2, 2, 0.7), &f, 1, BoundaryMode::GramSchmidt).unwrap();
        assert!((c.approx.data[0] - 1.4).abs() < 1e-14);
        for band in &c.details[0] {
            assert!(band.data[0].abs() < 1e-14);
        }
    }

    #[test]
    fn fwt_matches_approximation_path_of_packets() {
        let img = random_image(1, 32, 32, 5);
        for f in all_builtin() {
            let c = fwt_2d(&img, &f, 3, BoundaryMode::GramSchmidt).unwrap();
            for (k, bands) in c.details.iter().enumerate() {
                let q = 3 - k;
                let p = wpt_2d(&img, &f, q, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
                let prefix = "a".repeat(q - 1);
                for (band, letter) in bands.iter().zip(["h", "v", "d"]) {
                    let node = p.packet(label_index(&format!("{prefix}{letter}")).unwrap(), 0);
                    for (a, b) in band.data.iter().zip(node) {
                        assert!((a - b).abs() < 1e-10);
                    }
                }
                if k == 0 {
                    for (a, b) in c.approx.data.iter().zip(p.packet(0, 0)) {
                        assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn fwt_round_trip_db5() {
        let f = builtin_filter("db5").unwrap();
        let img = random_image(1, 64, 64, 6);
        let c = fwt_2d(&img, &f, 3, BoundaryMode::GramSchmidt).unwrap();
        assert!(ifwt_2d(&c, &f, BoundaryMode::GramSchmidt).unwrap().max_abs_diff(&img) < 1e-6);
    }

    #[test]
    fn energy_is_preserved() {
        let img = random_image(1, 32, 32, 7);
        for f in all_builtin() {
            let p = wpt_2d(&img, &f, 3, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
            assert!((p.energy() - img.energy()).abs() <= 1e-6 * img.energy());
        }
    }

    /// Energy of a separable cosine lands in its frequency-order grid cell.
    #[test]
    fn frequency_order_follows_cosine_frequency() {
        let f = builtin_filter("db5").unwrap();
        let (q, n) = (3usize, 128usize);
        let side = 1 << q;
        let band = 0.5 / side as f64;
        for (bi, bj) in [(0, 3), (2, 5), (7, 1), (6, 6), (4, 0)] {
            let fy = (bi as f64 + 0.5) * band;
            let fx = (bj as f64 + 0.5) * band;
            let mut img = Image::zeros(1, n, n);
            for y in 0..n {
                for x in 0..n {
                    img.plane_mut(0)[y * n + x] = (std::f64::consts::TAU * (fy * y as f64 + 0.3)).cos()
                        * (std::f64::consts::TAU * (fx * x as f64 + 0.1)).cos();
                }
            }
            let p = wpt_2d(&img, &f, q, BoundaryMode::GramSchmidt, Ordering::Frequency).unwrap();
            let energies: Vec<f64> = (0..p.packet_count())
                .map(|k| p.packet(k, 0).iter().map(|v| v * v).sum())
                .collect();
            let best = (0..energies.len()).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).unwrap();
            assert_eq!(best, bi * side + bj, "band ({bi}, {bj})");
        }
    }

    /// A step along the columns axis is picked up by the filters that are
    /// high-pass across columns; the row-direction step by their transposes.
    #[test]
    fn directional_selectivity() {
        let f = builtin_filter("haar").unwrap();
        let n = 32;
        let mut vertical = Image::zeros(1, n, n);
        let mut horizontal = Image::zeros(1, n, n);
        for y in 0..n {
            for x in 0..n {
                if x >= 13 {
                    vertical.plane_mut(0)[y * n + x] = 1.0;
                }
                if y >= 13 {
                    horizontal.plane_mut(0)[y * n + x] = 1.0;
                }
            }
        }
        let letter_energy = |img: &Image, letter: char| -> f64 {
            let p = wpt_2d(img, &f, 3, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
            (0..64)
                .filter(|&k| p.label(k).unwrap().contains(letter))
                .flat_map(|k| p.packet(k, 0).to_vec())
                .map(|v| v * v)
                .sum()
        };
        assert!(letter_energy(&vertical, 'h') > 10.0 * letter_energy(&vertical, 'v'));
        assert!(letter_energy(&horizontal, 'v') > 10.0 * letter_energy(&horizontal, 'h'));
    }
}
