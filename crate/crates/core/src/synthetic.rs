//! Two-class synthetic image set: random `1/f` fields, and the same kind of
//! field plus band-limited high-frequency noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::raster::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub size: usize,
    pub field_mean: f64,
    pub field_std: f64,
    /// Standard deviation of the added noise.
    pub noise_std: f64,
    /// Noise keeps only frequencies with `|fx|, |fy| ≥ cutoff` (cycles/pixel).
    pub cutoff: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            size: 64,
            field_mean: 0.5,
            field_std: 0.15,
            noise_std: 0.05,
            cutoff: 0.25,
        }
    }
}

/// Signed frequency of DFT bin `k` out of `n`, in cycles per sample.
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    let k = if 2 * k > n { k as f64 - n as f64 } else { k as f64 };
    k / n as f64
}

pub struct SyntheticGenerator {
    config: SyntheticConfig,
    planner: FftPlanner<f64>,
}

impl SyntheticGenerator {
    pub fn new(config: SyntheticConfig) -> Self {
        SyntheticGenerator {
            config,
            planner: FftPlanner::new(),
        }
    }

    /// White Gaussian noise shaped in the Fourier domain by `gain(fy, fx)`,
    /// then rescaled to zero mean and standard deviation `std`.
    fn shaped_noise<R: Rng>(&mut self, rng: &mut R, std: f64, gain: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.config.size;
        let mut buf: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
            .collect();
        fft_2d(&mut self.planner, &mut buf, n, false);
        for y in 0..n {
            for x in 0..n {
                buf[y * n + x] *= gain(bin_frequency(y, n), bin_frequency(x, n));
            }
        }
        fft_2d(&mut self.planner, &mut buf, n, true);
        let mut out: Vec<f64> = buf.iter().map(|c| c.re).collect();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / out.len() as f64).sqrt();
        out.iter_mut().for_each(|v| *v = (*v - mean) / sd * std);
        out
    }

    /// One single-channel image; `noisy` selects class 1.
    pub fn sample<R: Rng>(&mut self, rng: &mut R, noisy: bool) -> Image {
        let cfg = self.config;
        let mut field = self.shaped_noise(rng, cfg.field_std, |fy, fx| {
            let f = (fy * fy + fx * fx).sqrt();
            if f == 0.0 {
                0.0
            } else {
                1.0 / f
            }
        });
        field.iter_mut().for_each(|v| *v += cfg.field_mean);
        if noisy {
            let noise = self.shaped_noise(rng, cfg.noise_std, |fy, fx| {
                if fy.abs() >= cfg.cutoff && fx.abs() >= cfg.cutoff {
                    1.0
                } else {
                    0.0
                }
            });
            field.iter_mut().zip(noise).for_each(|(v, e)| *v += e);
        }
        field.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Image::new(1, cfg.size, cfg.size, field).expect("square single-channel image")
    }
}

fn fft_2d(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], n: usize, inverse: bool) {
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }
    if inverse {
        let scale = 1.0 / (n * n) as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }
}

/// `per_class` images of each class, class 0 first, from one seeded stream.
pub fn synthetic_dataset(per_class: usize, config: SyntheticConfig, seed: u64) -> Vec<(Image, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut generator = SyntheticGenerator::new(config);
    let mut out = Vec::with_capacity(2 * per_class);
    for label in 0..2 {
        for _ in 0..per_class {
            out.push((generator.sample(&mut rng, label == 1), label));
        }
    }
    out
}
