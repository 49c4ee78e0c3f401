use proptest::prelude::*;

use wavepack::filterbank::SUPPORTED_FILTERS;
use wavepack::packets::{fwt_2d, ifwt_2d, iwpt_2d, packet_analysis_operator, wpt_2d};
use wavepack::sparse_transform::{analysis_matrix_1d, analysis_matrix_2d, synthesis_matrix_1d};
use wavepack::{builtin_filter, BoundaryMode, Image, Ordering};

fn image(channels: usize, side: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(-1.0f64..1.0, channels * side * side)
        .prop_map(move |data| Image::new(channels, side, side, data).unwrap())
}

fn filter_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(SUPPORTED_FILTERS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn packets_reconstruct(name in filter_name(), level in 1usize..=2, img in image(2, 32)) {
        let f = builtin_filter(name).unwrap();
        let p = wpt_2d(&img, &f, level, BoundaryMode::GramSchmidt, Ordering::Frequency).unwrap();
        let back = iwpt_2d(&p, &f, BoundaryMode::GramSchmidt).unwrap();
        prop_assert!(back.max_abs_diff(&img) < 1e-9);
    }

    #[test]
    fn packets_conserve_energy(name in filter_name(), level in 1usize..=3, img in image(1, 32)) {
        let f = builtin_filter(name).unwrap();
        let p = wpt_2d(&img, &f, level, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
        let (e0, e1) = (img.energy(), p.energy());
        prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1e-300));
        prop_assert_eq!(p.data().len(), img.data.len());
    }

    #[test]
    fn fwt_reconstructs(name in filter_name(), levels in 1usize..=2, img in image(1, 32)) {
        let f = builtin_filter(name).unwrap();
        let c = fwt_2d(&img, &f, levels, BoundaryMode::GramSchmidt).unwrap();
        let back = ifwt_2d(&c, &f, BoundaryMode::GramSchmidt).unwrap();
        prop_assert!(back.max_abs_diff(&img) < 1e-9);
    }

    #[test]
    fn operator_and_direct_packets_agree(name in filter_name(), img in image(1, 16)) {
        let f = builtin_filter(name).unwrap();
        let op = packet_analysis_operator(&f, 16, 16, 2, BoundaryMode::GramSchmidt).unwrap();
        let y = op.matvec(&img.data).unwrap();
        let p = wpt_2d(&img, &f, 2, BoundaryMode::GramSchmidt, Ordering::Natural).unwrap();
        let err = y.iter().zip(p.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn operator_is_linear(name in filter_name(), a in -3.0f64..3.0,
                          x in prop::collection::vec(-1.0f64..1.0, 32),
                          y in prop::collection::vec(-1.0f64..1.0, 32)) {
        let f = builtin_filter(name).unwrap();
        let op = analysis_matrix_1d(&f, 32, 2, BoundaryMode::GramSchmidt).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let lhs = op.matvec(&combo).unwrap();
        let (ox, oy) = (op.matvec(&x).unwrap(), op.matvec(&y).unwrap());
        for i in 0..32 {
            prop_assert!((lhs[i] - (a * ox[i] + oy[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn operator_products_associate() {
    for name in SUPPORTED_FILTERS {
        let f = builtin_filter(name).unwrap();
        let a = analysis_matrix_1d(&f, 32, 3, BoundaryMode::GramSchmidt).unwrap();
        let s = synthesis_matrix_1d(&f, 32, 3, BoundaryMode::GramSchmidt).unwrap();
        let left = a.matmul(&s).unwrap().matmul(&a).unwrap();
        let right = a.matmul(&s.matmul(&a).unwrap()).unwrap();
        let (l, r) = (left.to_dense(), right.to_dense());
        let err = l
            .iter()
            .flatten()
            .zip(r.iter().flatten())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{name}: {err}");
    }
}

#[test]
fn orthogonal_2d_operator_transpose_inverts() {
    for name in SUPPORTED_FILTERS {
        let f = builtin_filter(name).unwrap();
        let a = analysis_matrix_2d(&f, 16, 16, 2, BoundaryMode::GramSchmidt).unwrap();
        let dev = a.transpose().matmul(&a).unwrap().max_deviation_from_identity();
        assert!(dev < 1e-10, "{name}: {dev}");
    }
}
