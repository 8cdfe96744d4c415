//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use wepe::encoder::{stabilize, EncoderConfig, FeatureVec4};
use wepe::lattice::{
    enumerate_sorted_lattice, nearest_lattice_distance, reduce_to_cell, LatticeParams,
};
use wepe::lut::{ConfigSnapshot, Lut};
use wepe::surrogate::hybrid_blend;
use wepe::wp::WpEvaluator;
use wepe::Complex64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_sorted_and_negation_closed(m in 1u32..=16, n in 1u32..=16) {
        let params = LatticeParams::lemniscatic().with_truncation(m, n);
        let pts = enumerate_sorted_lattice(&params);
        prop_assert_eq!(pts.len(), ((2 * m as usize + 1) * (2 * n as usize + 1)) - 1);
        for w in pts.windows(2) {
            prop_assert!(w[1].norm() >= w[0].norm());
        }
        for w in &pts {
            prop_assert!(pts.iter().any(|v| (v + w).norm() == 0.0));
        }
    }

    #[test]
    fn distance_periodic_under_lattice_shifts(
        x in -10.0f64..10.0,
        y in -10.0f64..10.0,
        dm in -3i32..=3,
        dn in -3i32..=3,
    ) {
        let params = LatticeParams::lemniscatic();
        let z = Complex64::new(x, y);
        let shift = Complex64::new(
            2.0 * dm as f64 * params.omega1,
            2.0 * dn as f64 * params.omega3_im,
        );
        let a = nearest_lattice_distance(z, &params);
        let b = nearest_lattice_distance(z + shift, &params);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn reduction_lands_in_cell(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let params = LatticeParams::lemniscatic();
        let zr = reduce_to_cell(Complex64::new(x, y), &params);
        prop_assert!((-params.omega1..params.omega1).contains(&zr.re));
        prop_assert!((-params.omega3_im..params.omega3_im).contains(&zr.im));
    }

    #[test]
    fn wp_parity(x in -2.5f64..2.5, y in -2.5f64..2.5) {
        let params = LatticeParams::lemniscatic().with_truncation(4, 4);
        let z = Complex64::new(x, y);
        prop_assume!(nearest_lattice_distance(z, &params) >= 0.1);
        let ev = WpEvaluator::new(&params);
        let even = (ev.wp(z).value - ev.wp(-z).value).norm();
        prop_assert!(even <= 1e-12 * (1.0 + ev.wp(z).value.norm()));
        let odd = (ev.wp_prime(z).value + ev.wp_prime(-z).value).norm();
        prop_assert!(odd <= 1e-12 * (1.0 + ev.wp_prime(z).value.norm()));
    }

    #[test]
    fn stabilize_bounds_any_input(
        f1 in -1e9f64..1e9,
        f2 in -1e9f64..1e9,
        f3 in -1e9f64..1e9,
        f4 in -1e9f64..1e9,
    ) {
        let cfg = EncoderConfig::default();
        let out = stabilize(FeatureVec4 { f1, f2, f3, f4 }, &cfg);
        for (x, y) in [f1, f2, f3, f4].into_iter().zip(out.as_array()) {
            prop_assert!(y.abs() <= 1.0);
            prop_assert!(x == 0.0 && y == 0.0 || x.signum() == y.signum());
        }
    }

    #[test]
    fn blend_is_convex_and_linear(
        a in proptest::collection::vec(-10.0f64..10.0, 8),
        b in proptest::collection::vec(-10.0f64..10.0, 8),
        raw in -5.0f64..5.0,
    ) {
        let out = hybrid_blend(&a, &b, raw).unwrap();
        for k in 0..8 {
            let (lo, hi) = (a[k].min(b[k]), a[k].max(b[k]));
            prop_assert!(out[k] >= lo - 1e-12 && out[k] <= hi + 1e-12);
        }
        // Averaging blends at two gate values equals the blend at the mean
        // gate value.
        let logit = |l: f64| (l / (1.0 - l)).ln();
        let l = 1.0 / (1.0 + (-raw).exp());
        let l2 = (l / 2.0).max(1e-9);
        let x = hybrid_blend(&a, &b, logit(l)).unwrap();
        let y = hybrid_blend(&a, &b, logit(l2)).unwrap();
        let mid = hybrid_blend(&a, &b, logit((l + l2) / 2.0)).unwrap();
        for k in 0..8 {
            prop_assert!(((x[k] + y[k]) / 2.0 - mid[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn query_stays_within_corner_hull(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        // Bilinear interpolation is a convex combination of the four
        // surrounding nodes.
        let res = 9u32;
        let mut data = Vec::new();
        for p in 0..res {
            for q in 0..res {
                let val = ((p * 31 + q * 7) % 13) as f32 / 13.0 - 0.5;
                data.extend_from_slice(&[val; 4]);
            }
        }
        let lut = Lut::from_parts(
            res,
            ConfigSnapshot::Pretrain(EncoderConfig::default()),
            data,
        )
        .unwrap();
        let got = lut.query_bilinear(u, v).unwrap();
        let x = (u * (res - 1) as f64).floor().min((res - 2) as f64) as u32;
        let y = (v * (res - 1) as f64).floor().min((res - 2) as f64) as u32;
        let corners = [
            lut.node(y, x),
            lut.node(y, x + 1),
            lut.node(y + 1, x),
            lut.node(y + 1, x + 1),
        ];
        for k in 0..4 {
            let vals: Vec<f64> = corners.iter().map(|c| c.as_array()[k]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(got.as_array()[k] >= lo - 1e-12 && got.as_array()[k] <= hi + 1e-12);
        }
    }

    #[test]
    fn lut_file_round_trip(res in 2u32..=12, seed in 0u64..1000) {
        let cfg = EncoderConfig { proj_seed: seed, ..Default::default() };
        let lut = Lut::build(&cfg, res).unwrap();
        let mut bytes = Vec::new();
        lut.write_to(&mut bytes).unwrap();
        let back = Lut::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, lut);
    }
}
