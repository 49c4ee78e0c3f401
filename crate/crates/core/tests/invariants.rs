//! Statistical and classifier invariants on synthetic inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use wavepack::classify::{export_weight_map, train, FeatureExtractor, FeatureKind, FeatureSet, Init, NormStats, TrainConfig};
use wavepack::packets::wpt_2d;
use wavepack::stats::{accumulate_stats, ln_abs_scale, packet_curve, ChannelPolicy, CurvePoint};
use wavepack::synthetic::{synthetic_dataset, SyntheticConfig};
use wavepack::{builtin_filter, BoundaryMode, Image, Ordering};

fn curve_of(images: &[Image], wavelet: &str, level: usize) -> Vec<CurvePoint> {
    let f = builtin_filter(wavelet).unwrap();
    let scaled: Vec<_> = images
        .iter()
        .map(|img| {
            let p = wpt_2d(img, &f, level, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
            ln_abs_scale(&p, ChannelPolicy::Averaged)
        })
        .collect();
    packet_curve(&accumulate_stats(&scaled).unwrap(), Ordering::Frequency).unwrap()
}

fn mean_of(points: &[CurvePoint]) -> f64 {
    points.iter().map(|p| p.mean).sum::<f64>() / points.len() as f64
}

#[test]
fn white_noise_curve_is_flat() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let images: Vec<Image> = (0..500)
        .map(|_| {
            let data = (0..32 * 32).map(|_| StandardNormal.sample(&mut rng)).collect();
            Image::new(1, 32, 32, data).unwrap()
        })
        .collect();
    for wavelet in ["haar", "db3"] {
        let curve = curve_of(&images, wavelet, 3);
        let hi = curve.iter().map(|p| p.mean).fold(f64::MIN, f64::max);
        let lo = curve.iter().map(|p| p.mean).fold(f64::MAX, f64::min);
        assert!(hi - lo < 0.5, "{wavelet}: spread {}", hi - lo);
        // ln|Z| for a standard normal has expectation -(γ + ln 2)/2.
        let expected = -(0.5772156649015329 + 2f64.ln()) / 2.0;
        assert!((mean_of(&curve) - expected).abs() < 0.05, "{}", mean_of(&curve));
    }
}

#[test]
fn smooth_fields_decay_with_frequency() {
    let images: Vec<Image> = synthetic_dataset(100, SyntheticConfig::default(), 5)
        .into_iter()
        .filter(|(_, label)| *label == 0)
        .map(|(img, _)| img)
        .collect();
    let curve = curve_of(&images, "haar", 3);
    assert_eq!(curve[0].label, "aaa");
    let first = curve[0].mean;
    let last_quartile = mean_of(&curve[48..]);
    assert!(first > last_quartile + 2.0, "{first} vs {last_quartile}");
    assert!(curve.iter().skip(1).all(|p| p.mean < first));
}

#[test]
fn noisy_class_diverges_at_high_frequency() {
    let data = synthetic_dataset(100, SyntheticConfig::default(), 6);
    let class = |k: usize| -> Vec<Image> { data.iter().filter(|(_, l)| *l == k).map(|(i, _)| i.clone()).collect() };
    let (c0, c1) = (curve_of(&class(0), "haar", 3), curve_of(&class(1), "haar", 3));
    let gap: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| (a.mean - b.mean).abs()).collect();
    let low = gap[..16].iter().sum::<f64>() / 16.0;
    let high = gap[48..].iter().sum::<f64>() / 16.0;
    assert!(high > 3.0 * low, "high {high} low {low}");
}

#[test]
fn symmetric_init_keeps_weight_maps_negated() {
    let data = synthetic_dataset(40, SyntheticConfig { size: 32, ..SyntheticConfig::default() }, 9);
    let kind = FeatureKind::Packets {
        wavelet: "haar".into(),
        level: 2,
        mode: BoundaryMode::GramSchmidt,
    };
    let ex = FeatureExtractor::new(&kind, 1, 32, 32).unwrap();
    let layout = ex.layout();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (img, label) in &data {
        rows.extend(ex.extract(img).unwrap());
        labels.push(*label);
    }
    let mut set = FeatureSet::new(layout.dim(), 2, rows, labels).unwrap();
    NormStats::fit(&set, &layout).unwrap().apply(&mut set, &layout).unwrap();
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 16,
        init: Init::Symmetric,
        seed: 2,
        ..TrainConfig::default()
    };
    let outcome = train(&set, &set, &cfg).unwrap();
    let maps = export_weight_map(&outcome.model, &layout, Ordering::Frequency).unwrap();
    assert_eq!(maps.len(), 2);
    let scale = maps[0].data().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let err = maps[0]
        .data()
        .iter()
        .zip(maps[1].data())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-9 * scale, "asymmetry {err} at scale {scale}");
}
