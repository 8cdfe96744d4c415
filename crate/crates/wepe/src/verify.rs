//! Named runtime checks of the library's mathematical invariants, grouped
//! into per-module suites for the `verify` CLI subcommand.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis;
use crate::encoder::{self, EncoderConfig, FeatureVec4, ProjectionSpec};
use crate::lattice::{
    enumerate_sorted_lattice, lattice_invariants, nearest_lattice_distance, reduce_to_cell,
    LatticeParams,
};
use crate::lut::{error_scan, Lut};
use crate::surrogate::{ft_features, hybrid_blend, SurrogateConfig};
use crate::util::{pearson, QuasiRandom2};
use crate::wp::{relative_wp, wp_laurent, WpEvaluator};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite '{0}' (expected lattice, wp, encoder, surrogate, lut, analysis or all)")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const SUITES: [&str; 6] = ["lattice", "wp", "encoder", "surrogate", "lut", "analysis"];

type CheckFn = fn() -> Result<String, String>;

struct Check {
    suite: &'static str,
    id: &'static str,
    run: CheckFn,
}

fn checks() -> Vec<Check> {
    macro_rules! check {
        ($suite:literal, $id:literal, $f:expr) => {
            Check { suite: $suite, id: $id, run: $f }
        };
    }
    vec![
        check!("lattice", "sorted_modulus", lattice_sorted_modulus),
        check!("lattice", "negation_closure", lattice_negation_closure),
        check!("lattice", "count_formula", lattice_count_formula),
        check!("lattice", "periodic_distance", lattice_periodic_distance),
        check!("lattice", "preset_invariants", lattice_preset_invariants),
        check!("wp", "evenness", wp_evenness),
        check!("wp", "oddness", wp_oddness),
        check!("wp", "real_axis_reality", wp_real_axis),
        check!("wp", "approximate_periodicity", wp_periodicity),
        check!("wp", "empirical_vs_apriori_bound", wp_empirical_bound),
        check!("wp", "roundoff_vs_compensated", wp_roundoff),
        check!("wp", "half_period_derivative_zero", wp_half_period),
        check!("wp", "ode_residual_convergence", wp_ode_residual),
        check!("wp", "addition_vs_direct", wp_addition_direct),
        check!("wp", "relative_recovery", wp_relative_recovery),
        check!("wp", "laurent_agreement", wp_laurent_agreement),
        check!("encoder", "stabilized_bounds", encoder_bounds),
        check!("encoder", "coordinate_ranges", encoder_coord_ranges),
        check!("encoder", "pole_guard_inert", encoder_pole_guard_inert),
        check!("encoder", "sensitivity_rho", encoder_sensitivity_rho),
        check!("encoder", "feature_statistics", encoder_feature_stats),
        check!("surrogate", "bounded_features", surrogate_bounded),
        check!("surrogate", "nondegenerate_imaginary", surrogate_nondegenerate),
        check!("surrogate", "continuity", surrogate_continuity),
        check!("surrogate", "gate_linearity", surrogate_gate_linearity),
        check!("surrogate", "parameter_corridor", surrogate_corridor),
        check!("lut", "node_exactness", lut_node_exact),
        check!("lut", "bilinear_reproduction", lut_bilinear_reproduction),
        check!("lut", "convergence_order", lut_convergence),
        check!("lut", "round_trip", lut_round_trip),
        check!("lut", "corner_pole_substitute", lut_corner_pole),
        check!("analysis", "pearson_two_pass_oracle", analysis_pearson_oracle),
        check!("analysis", "cosine_edge_cases", analysis_cosine_cases),
        check!("analysis", "decay_scale_invariance", analysis_decay_scale_invariance),
        check!("analysis", "dissimilarity_channel_permutation", analysis_channel_permutation),
        check!("analysis", "local_attenuation", analysis_attenuation),
    ]
}

/// Run one suite (or "all"). Each check reports pass/fail with a one-line
/// detail string.
pub fn run_suite(suite: &str) -> Result<Vec<CheckResult>, VerifyError> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(VerifyError::UnknownSuite(suite.to_string()));
    }
    Ok(checks()
        .iter()
        .filter(|c| suite == "all" || c.suite == suite)
        .map(|c| match (c.run)() {
            Ok(detail) => CheckResult { suite: c.suite, id: c.id, passed: true, detail },
            Err(detail) => CheckResult { suite: c.suite, id: c.id, passed: false, detail },
        })
        .collect())
}

fn fail(msg: impl Into<String>) -> Result<String, String> {
    Err(msg.into())
}

fn random_cell_points(n: usize, min_dist: f64, seed: u64) -> Vec<Complex64> {
    let params = LatticeParams::lemniscatic();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = Complex64::new(
            rng.random_range(-params.omega1..params.omega1),
            rng.random_range(-params.omega3_im..params.omega3_im),
        );
        if nearest_lattice_distance(z, &params) >= min_dist {
            out.push(z);
        }
    }
    out
}

// ---- lattice ----

fn lattice_sorted_modulus() -> Result<String, String> {
    for (m, n) in [(1, 1), (3, 7), (12, 12), (64, 64)] {
        let p = LatticeParams::lemniscatic().with_truncation(m, n);
        let pts = enumerate_sorted_lattice(&p);
        for w in pts.windows(2) {
            if w[1].norm() < w[0].norm() {
                return fail(format!("ordering violated at M={m} N={n}"));
            }
        }
    }
    Ok("non-decreasing modulus for windows up to 64x64".into())
}

fn lattice_negation_closure() -> Result<String, String> {
    for (m, n) in [(1, 1), (2, 5), (12, 12)] {
        let p = LatticeParams::lemniscatic().with_truncation(m, n);
        let pts = enumerate_sorted_lattice(&p);
        for w in &pts {
            if !pts.iter().any(|v| (v + w).norm() == 0.0) {
                return fail(format!("negation missing for {w} at M={m} N={n}"));
            }
        }
    }
    Ok("point sets closed under negation".into())
}

fn lattice_count_formula() -> Result<String, String> {
    for (m, n) in [(1, 1), (4, 9), (12, 12)] {
        let p = LatticeParams::lemniscatic().with_truncation(m, n);
        let expect = (2 * m as usize + 1) * (2 * n as usize + 1) - 1;
        let got = enumerate_sorted_lattice(&p).len();
        if got != expect {
            return fail(format!("count {got} != {expect} at M={m} N={n}"));
        }
    }
    Ok("(2M+1)(2N+1)-1 points".into())
}

fn lattice_periodic_distance() -> Result<String, String> {
    let p = LatticeParams::lemniscatic();
    let period = Complex64::new(2.0 * p.omega1, 0.0);
    for z in random_cell_points(100, 0.0, 1) {
        let a = nearest_lattice_distance(z, &p);
        let b = nearest_lattice_distance(z + period, &p);
        if (a - b).abs() > 1e-12 {
            return fail(format!("distance changed by {} under one period", (a - b).abs()));
        }
    }
    Ok("distance invariant under lattice translation".into())
}

fn lattice_preset_invariants() -> Result<String, String> {
    let p = LatticeParams::lemniscatic();
    let (g2, g3) = lattice_invariants(&p, 200);
    if (g2 - p.g2).abs() > 2e-4 || g3.abs() > 1e-9 {
        return fail(format!("lattice sums give g2={g2}, g3={g3}"));
    }
    Ok(format!("direct sums: g2={g2:.6}, g3={g3:.2e}"))
}

// ---- wp ----

fn wp_evenness() -> Result<String, String> {
    let ev = WpEvaluator::new(&LatticeParams::lemniscatic());
    for z in random_cell_points(300, 0.1, 2) {
        let a = ev.wp(z).value;
        let b = ev.wp(-z).value;
        if (a - b).norm() > 1e-12 * (1.0 + a.norm()) {
            return fail(format!("wp(-z) != wp(z) at {z}"));
        }
    }
    Ok("wp even to 1e-12 relative on 300 samples".into())
}

fn wp_oddness() -> Result<String, String> {
    let ev = WpEvaluator::new(&LatticeParams::lemniscatic());
    for z in random_cell_points(300, 0.1, 3) {
        let a = ev.wp_prime(z).value;
        let b = ev.wp_prime(-z).value;
        if (a + b).norm() > 1e-12 * (1.0 + a.norm()) {
            return fail(format!("wp'(-z) != -wp'(z) at {z}"));
        }
    }
    Ok("wp' odd to 1e-12 relative on 300 samples".into())
}

fn wp_real_axis() -> Result<String, String> {
    let p = LatticeParams::lemniscatic();
    let ev = WpEvaluator::new(&p);
    for k in 1..100 {
        let z = Complex64::new(2.0 * p.omega1 * k as f64 / 101.0, 0.0);
        if nearest_lattice_distance(z, &p) < 0.05 {
            continue;
        }
        let v = ev.wp(z).value;
        if v.im.abs() > 1e-12 * (1.0 + v.norm()) {
            return fail(format!("Im wp = {} at real z = {}", v.im, z.re));
        }
    }
    Ok("real arguments give real values".into())
}

fn wp_periodicity() -> Result<String, String> {
    let p = LatticeParams::lemniscatic();
    let ev = WpEvaluator::new(&p);
    let period = Complex64::new(2.0 * p.omega1, 0.0);
    for z in random_cell_points(100, 0.1, 4) {
        let a = ev.wp(z);
        let b = ev.wp(z + period);
        let tol = a.trunc_bound + b.trunc_bound + 1e-9;
        if (a.value - b.value).norm() > tol {
            return fail(format!("|wp(z+2w1)-wp(z)| = {} > {tol}", (a.value - b.value).norm()));
        }
    }
    Ok("periodic within summed a-priori bounds".into())
}

fn wp_empirical_bound() -> Result<String, String> {
    let p12 = LatticeParams::lemniscatic();
    let p96 = LatticeParams::lemniscatic().with_truncation(96, 96);
    let e12 = WpEvaluator::new(&p12);
    let e96 = WpEvaluator::new(&p96);
    let mut worst: f64 = 0.0;
    for z in random_cell_points(200, 1e-3, 5) {
        if z.norm() > p12.omega1 {
            continue;
        }
        let err = (e12.wp(z).value - e96.wp(z).value).norm();
        let bound = e12.truncation_bound(z);
        worst = worst.max(err / bound);
        if err > bound {
            return fail(format!("empirical error {err} exceeds bound {bound} at {z}"));
        }
    }
    Ok(format!("max error/bound ratio {worst:.3}"))
}

fn wp_roundoff() -> Result<String, String> {
    // Compare plain accumulation against Kahan-compensated accumulation of
    // the same clipped term sequence.
    let p = LatticeParams::lemniscatic();
    let pts = enumerate_sorted_lattice(&p);
    let ev = WpEvaluator::new(&p);
    for z in random_cell_points(100, 0.05, 6) {
        let zr = reduce_to_cell(z, &p);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        let kahan_add = |t: Complex64, sum: &mut Complex64, comp: &mut Complex64| {
            let y = t - *comp;
            let s = *sum + y;
            *comp = (s - *sum) - y;
            *sum = s;
        };
        let clip = |t: Complex64| {
            let a = t.norm();
            if a > p.m_clip {
                t * (p.m_clip / a)
            } else {
                t
            }
        };
        kahan_add(clip((zr * zr).inv()), &mut sum, &mut comp);
        for &w in &pts {
            let d = zr - w;
            kahan_add(clip((d * d).inv() - (w * w).inv()), &mut sum, &mut comp);
        }
        let plain = ev.wp(z).value;
        if (plain - sum).norm() > 1e-9 {
            return fail(format!("round-off gap {} at {z}", (plain - sum).norm()));
        }
    }
    Ok("plain vs compensated accumulation within 1e-9".into())
}

fn wp_half_period() -> Result<String, String> {
    let p = LatticeParams::lemniscatic();
    let ev = WpEvaluator::new(&p);
    let v = ev.wp_prime(Complex64::new(p.omega1, 0.0)).value.norm();
    if v > 1e-3 {
        return fail(format!("|wp'(w1)| = {v}"));
    }
    Ok(format!("|wp'(w1)| = {v:.2e}"))
}

fn wp_ode_residual() -> Result<String, String> {
    let zs = random_cell_points(50, 0.3, 7);
    let mut medians = Vec::new();
    for m in [12u32, 48] {
        let ev = WpEvaluator::new(&LatticeParams::lemniscatic().with_truncation(m, m));
        let mut res: Vec<f64> = zs
            .iter()
            .map(|&z| ev.check_differential_eq(z).unwrap())
            .collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(res[res.len() / 2]);
    }
    if medians[0] > 1e-2 || medians[1] > 1e-4 || medians[1] >= medians[0] {
        return fail(format!("medians {medians:?}"));
    }
    Ok(format!("median residual {:.2e} (M=12) -> {:.2e} (M=48)", medians[0], medians[1]))
}

fn wp_addition_direct() -> Result<String, String> {
    let ev = WpEvaluator::new(&LatticeParams::lemniscatic().with_truncation(24, 24));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 50 {
        let z1 = Complex64::new(rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let z2 = Complex64::new(rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let lhs = match ev.wp_addition(z1, z2) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let direct = ev.wp(z1 + z2);
        if direct.is_pole_substituted {
            continue;
        }
        let mut err = (lhs - direct.value).norm();
        if direct.value.norm() > 1.0 {
            err /= direct.value.norm();
        }
        if err > 1e-3 {
            return fail(format!("addition error {err} at {z1}, {z2}"));
        }
        checked += 1;
    }
    Ok("50 non-degenerate pairs within 1e-3".into())
}

fn wp_relative_recovery() -> Result<String, String> {
    let ev = WpEvaluator::new(&LatticeParams::lemniscatic().with_truncation(24, 24));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 50 {
        let zi = Complex64::new(rng.random_range(0.3..1.8), rng.random_range(0.3..1.8));
        let r = rng.random_range(0.1..1.0);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let delta = Complex64::from_polar(r, th);
        let zj = zi + delta;
        let pi = (ev.wp(zi).value, ev.wp_prime(zi).value);
        let pj = (ev.wp(zj).value, ev.wp_prime(zj).value);
        let rec = match relative_wp(pi, pj) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let direct = ev.wp(delta);
        if direct.is_pole_substituted {
            continue;
        }
        let mut err = (rec - direct.value).norm();
        if direct.value.norm() > 1.0 {
            err /= direct.value.norm();
        }
        if err > 1e-3 {
            return fail(format!("relative recovery error {err} at delta {delta}"));
        }
        checked += 1;
    }
    Ok("50 displacements recovered within 1e-3".into())
}

fn wp_laurent_agreement() -> Result<String, String> {
    let p = LatticeParams::lemniscatic().with_truncation(24, 24);
    let ev = WpEvaluator::new(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let r = rng.random_range(0.05..0.2);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex64::from_polar(r, th);
        let oracle = wp_laurent(z, &p, 4).map_err(|e| e.to_string())?;
        let direct = ev.wp(z);
        let tol = direct.trunc_bound + r.powi(8);
        if (direct.value - oracle).norm() > tol {
            return fail(format!("laurent gap {} > {tol}", (direct.value - oracle).norm()));
        }
    }
    Ok("series and summation agree within the bound".into())
}

// ---- encoder ----

fn encoder_bounds() -> Result<String, String> {
    for (h, w) in [(1u32, 1u32), (7, 9), (14, 14), (64, 64)] {
        let cfg = EncoderConfig::default().with_grid(h, w);
        let field = encoder::encode_grid(&cfg);
        for f in field.components() {
            if !f.is_finite() || f.abs() > 1.0 {
                return fail(format!("component {f} out of range on {h}x{w}"));
            }
        }
    }
    Ok("stabilized components within [-1, 1] up to 64x64".into())
}

fn encoder_coord_ranges() -> Result<String, String> {
    let (h, w) = (14u32, 14u32);
    let (u0, v0) = encoder::normalize_coords(0, 0, h, w).unwrap();
    let (u1, v1) = encoder::normalize_coords(h - 1, w - 1, h, w).unwrap();
    let ok = (u0 - 0.5 / w as f64).abs() < 1e-15
        && (v0 - 0.5 / h as f64).abs() < 1e-15
        && (u1 - (w as f64 - 0.5) / w as f64).abs() < 1e-15
        && (v1 - (h as f64 - 0.5) / h as f64).abs() < 1e-15;
    if !ok {
        return fail("extreme indices do not hit the documented bounds");
    }
    Ok("u, v hit (0.5/W, (W-0.5)/W) at the extreme indices".into())
}

fn encoder_pole_guard_inert() -> Result<String, String> {
    let base: Vec<u64> = encoder::encode_grid(&EncoderConfig::default())
        .components()
        .map(f64::to_bits)
        .collect();
    for kappa in [1.0, 5.0, 15.0, 30.0, 60.0, 120.0] {
        let mut cfg = EncoderConfig::default();
        cfg.lattice.kappa = kappa;
        let got: Vec<u64> = encoder::encode_grid(&cfg).components().map(f64::to_bits).collect();
        if got != base {
            return fail(format!("kappa={kappa} changed the field"));
        }
    }
    for c_large in [50.0, 2e2, 5e2, 2e3, 5e3, 1e5] {
        let mut cfg = EncoderConfig::default();
        cfg.lattice.c_large = c_large;
        let got: Vec<u64> = encoder::encode_grid(&cfg).components().map(f64::to_bits).collect();
        if got != base {
            return fail(format!("c_large={c_large} changed the field"));
        }
    }
    Ok("kappa and c_large sweeps leave every byte unchanged".into())
}

fn encoder_sensitivity_rho() -> Result<String, String> {
    let rho = analysis::dissimilarity_correlation(&encoder::encode_grid(&EncoderConfig::default()))
        .map_err(|e| e.to_string())?;
    if (rho - 0.6253).abs() > 0.03 {
        return fail(format!("default rho = {rho}"));
    }
    let cfg = EncoderConfig::default().with_alpha(1.2);
    let rho_12 = analysis::dissimilarity_correlation(&encoder::encode_grid(&cfg))
        .map_err(|e| e.to_string())?;
    if rho_12 > 0.16 {
        return fail(format!("rho at alpha=1.2 is {rho_12}"));
    }
    Ok(format!("rho = {rho:.4} at defaults, {rho_12:.4} at alpha=1.2"))
}

fn encoder_feature_stats() -> Result<String, String> {
    let stats = analysis::feature_stats(&encoder::encode_grid(&EncoderConfig::default()));
    let ok = (stats.mean_abs - 0.1063).abs() <= 0.01
        && (stats.std - 0.225).abs() <= 0.02
        && (stats.sat_frac - 0.0191).abs() <= 0.005
        && (stats.zero_frac - 0.1161).abs() <= 0.02;
    if !ok {
        return fail(format!("{stats:?}"));
    }
    Ok(format!(
        "mean|f|={:.4}, std={:.3}, sat={:.2}%, zero={:.2}%",
        stats.mean_abs,
        stats.std,
        stats.sat_frac * 100.0,
        stats.zero_frac * 100.0
    ))
}

// ---- surrogate ----

fn surrogate_bounded() -> Result<String, String> {
    let cfg = SurrogateConfig::default();
    let mut seq = QuasiRandom2::new();
    for _ in 0..10_000 {
        let (u, v) = seq.next_point();
        let f = ft_features(u, v, &cfg);
        for c in f.as_array() {
            if !c.is_finite() || c.abs() >= 1.0 {
                return fail(format!("component {c} at ({u}, {v})"));
            }
        }
    }
    for eps in [1e-3, 1e-9, 1e-15] {
        for (u, v) in [(eps, eps), (eps, 1.0 - eps), (1.0 - eps, eps), (1.0 - eps, 1.0 - eps)] {
            for c in ft_features(u, v, &cfg).as_array() {
                if !c.is_finite() || c.abs() >= 1.0 {
                    return fail(format!("corner probe ({u}, {v}) gave {c}"));
                }
            }
        }
    }
    Ok("finite and inside (-1, 1) on 10^4 quasi-random points plus corner probes".into())
}

fn surrogate_nondegenerate() -> Result<String, String> {
    let cfg = SurrogateConfig::default();
    let mut f2 = Vec::new();
    let mut f4 = Vec::new();
    for i in 0..14 {
        for j in 0..14 {
            let f = ft_features((j as f64 + 0.5) / 14.0, (i as f64 + 0.5) / 14.0, &cfg);
            f2.push(f.f2);
            f4.push(f.f4);
        }
    }
    let var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
    };
    let (v2, v4) = (var(&f2), var(&f4));
    if v2 <= 0.0 || v4 <= 0.0 {
        return fail(format!("imaginary-channel variances {v2}, {v4}"));
    }
    Ok(format!("var(f2)={v2:.2e}, var(f4)={v4:.2e}"))
}

fn surrogate_continuity() -> Result<String, String> {
    let cfg = SurrogateConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-7;
    for _ in 0..100 {
        let u = rng.random_range(0.05..0.95);
        let v = rng.random_range(0.05..0.95);
        let a = ft_features(u, v, &cfg);
        let b = ft_features(u + h, v, &cfg);
        for (x, y) in a.as_array().into_iter().zip(b.as_array()) {
            if (x - y).abs() > 1e-3 {
                return fail(format!("jump {} across h={h} at ({u}, {v})", (x - y).abs()));
            }
        }
    }
    Ok("finite-difference increments bounded".into())
}

fn surrogate_gate_linearity() -> Result<String, String> {
    let logit = |l: f64| (l / (1.0 - l)).ln();
    let wepe: Vec<f64> = (0..32).map(|i| i as f64 * 0.3).collect();
    let learned: Vec<f64> = (0..32).map(|i| 10.0 - i as f64 * 0.7).collect();
    let (l1, l2) = (0.23, 0.81);
    let b1 = hybrid_blend(&wepe, &learned, logit(l1)).unwrap();
    let b2 = hybrid_blend(&wepe, &learned, logit(l2)).unwrap();
    let mid = hybrid_blend(&wepe, &learned, logit((l1 + l2) / 2.0)).unwrap();
    for k in 0..wepe.len() {
        if ((b1[k] + b2[k]) / 2.0 - mid[k]).abs() > 1e-9 {
            return fail(format!("nonlinearity {} at element {k}", ((b1[k] + b2[k]) / 2.0 - mid[k]).abs()));
        }
    }
    Ok("blend is linear in the gate value".into())
}

fn surrogate_corridor() -> Result<String, String> {
    // Feature statistics move smoothly across the (beta, amplitude-scale)
    // grid: all finite, no adjacent jump larger than half of the overall
    // range.
    let betas = [0.05, 0.1, 0.2, 0.35, 0.5];
    let scales = [0.05, 0.1, 0.2, 0.35, 0.5];
    let mut mean_abs = [[0.0f64; 5]; 5];
    for (bi, &beta) in betas.iter().enumerate() {
        for (si, &scale) in scales.iter().enumerate() {
            let mut cfg = SurrogateConfig::default();
            cfg.beta = beta;
            cfg.a_k = (1..=3).map(|k| scale / (k * k) as f64).collect();
            cfg.b_k = cfg.a_k.clone();
            let mut acc = 0.0;
            let mut n = 0;
            for i in 0..14 {
                for j in 0..14 {
                    let f = ft_features((j as f64 + 0.5) / 14.0, (i as f64 + 0.5) / 14.0, &cfg);
                    for c in f.as_array() {
                        if !c.is_finite() {
                            return fail(format!("non-finite at beta={beta} scale={scale}"));
                        }
                        acc += c.abs();
                        n += 1;
                    }
                }
            }
            mean_abs[bi][si] = acc / n as f64;
        }
    }
    let flat: Vec<f64> = mean_abs.iter().flatten().copied().collect();
    let range = flat.iter().cloned().fold(f64::MIN, f64::max)
        - flat.iter().cloned().fold(f64::MAX, f64::min);
    for bi in 0..5 {
        for si in 0..5 {
            for (ni, nj) in [(bi + 1, si), (bi, si + 1)] {
                if ni < 5 && nj < 5 {
                    let jump = (mean_abs[bi][si] - mean_abs[ni][nj]).abs();
                    if jump > 0.5 * range {
                        return fail(format!("jump {jump} vs range {range} at ({bi}, {si})"));
                    }
                }
            }
        }
    }
    Ok(format!("mean|f| varies smoothly over the corridor (range {range:.3})"))
}

// ---- lut ----

fn lut_node_exact() -> Result<String, String> {
    let lut = Lut::build(&EncoderConfig::default(), 64).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let p = rng.random_range(0..64u32);
        let q = rng.random_range(0..64u32);
        let u = q as f64 / 63.0;
        let v = p as f64 / 63.0;
        let got = lut.query_bilinear(u, v).map_err(|e| e.to_string())?;
        let want = lut.node(p, q);
        if got.as_array().map(f64::to_bits) != want.as_array().map(f64::to_bits) {
            return fail(format!("node ({p}, {q}) not bit-exact"));
        }
    }
    Ok("1000 random nodes bit-exact".into())
}

fn lut_bilinear_reproduction() -> Result<String, String> {
    // A bilinear function sampled at the nodes is reproduced exactly up to
    // f32 node rounding.
    let res = 9u32;
    let mut data = Vec::new();
    for p in 0..res {
        for q in 0..res {
            let u = q as f64 / (res - 1) as f64;
            let v = p as f64 / (res - 1) as f64;
            let val = (0.3 * u * v + 0.2 * u - 0.1 * v + 0.05) as f32;
            data.extend_from_slice(&[val; 4]);
        }
    }
    let synthetic = Lut::from_parts(
        res,
        crate::lut::ConfigSnapshot::Pretrain(EncoderConfig::default()),
        data,
    )
    .map_err(|e| e.to_string())?;
    let mut seq = QuasiRandom2::new();
    for _ in 0..200 {
        let (u, v) = seq.next_point();
        let got = synthetic.query_bilinear(u, v).map_err(|e| e.to_string())?;
        let want = 0.3 * u * v + 0.2 * u - 0.1 * v + 0.05;
        if (got.f1 - want).abs() > 1e-6 {
            return fail(format!("bilinear field not reproduced at ({u}, {v})"));
        }
    }
    Ok("bilinear fields reproduced exactly".into())
}

fn lut_convergence() -> Result<String, String> {
    let cfg = EncoderConfig::default();
    let mut means = Vec::new();
    for res in [32u32, 64, 128] {
        let scan = error_scan(&cfg, res, 1000, 0.6).map_err(|e| e.to_string())?;
        means.push(scan.mean_err);
    }
    let e1 = (means[0] / means[1]).log2();
    let e2 = (means[1] / means[2]).log2();
    if !(1.4..=2.6).contains(&e1) || !(1.4..=2.6).contains(&e2) {
        return fail(format!("mean-error exponents {e1:.2}, {e2:.2}"));
    }
    Ok(format!("mean-error exponents {e1:.2}, {e2:.2}"))
}

fn lut_round_trip() -> Result<String, String> {
    let lut = Lut::build(&EncoderConfig::default(), 16).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    lut.write_to(&mut bytes).map_err(|e| e.to_string())?;
    let back = Lut::read_from(bytes.as_slice()).map_err(|e| e.to_string())?;
    if back != lut {
        return fail("round trip changed the table");
    }
    let mut corrupted = bytes.clone();
    corrupted[0] = b'X';
    if Lut::read_from(corrupted.as_slice()).is_ok() {
        return fail("bad magic accepted");
    }
    let truncated = &bytes[..bytes.len() - 32];
    if Lut::read_from(truncated).is_ok() {
        return fail("truncated payload accepted");
    }
    Ok("round trip exact; corrupt and truncated files rejected".into())
}

fn lut_corner_pole() -> Result<String, String> {
    let cfg = EncoderConfig::default();
    let lut = Lut::build(&cfg, 32).map_err(|e| e.to_string())?;
    let want = (cfg.alpha_scale() * cfg.lattice.c_large).tanh();
    let got = lut.node(0, 0).f1;
    if (got - want).abs() > 1e-6 {
        return fail(format!("corner stores {got}, expected {want}"));
    }
    Ok("origin corner stores the stabilized pole substitute".into())
}

// ---- analysis ----

fn analysis_pearson_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 0.7 * v + rng.random_range(-1.0..1.0)).collect();
    let got = pearson(&x, &y);
    // Brute-force oracle, explicit two-pass definition.
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
    let vx = x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    let vy = y.iter().map(|b| (b - my) * (b - my)).sum::<f64>();
    let want = cov / (vx * vy).sqrt();
    if (got - want).abs() > 1e-12 {
        return fail(format!("pearson {got} vs oracle {want}"));
    }
    Ok("matches the two-pass oracle to 1e-12".into())
}

fn analysis_cosine_cases() -> Result<String, String> {
    let a = [0.3, -0.4, 0.5];
    if (analysis::cosine_similarity(&a, &a).unwrap() - 1.0).abs() > 1e-14 {
        return fail("self-similarity is not 1");
    }
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    if (analysis::cosine_similarity(&a, &neg).unwrap() + 1.0).abs() > 1e-14 {
        return fail("antipodal similarity is not -1");
    }
    if analysis::cosine_similarity(&a, &[0.0, 0.0, 0.0]).is_ok() {
        return fail("zero vector accepted");
    }
    Ok("unit, antipodal and zero-vector cases verified".into())
}

fn analysis_decay_scale_invariance() -> Result<String, String> {
    let cfg = EncoderConfig::default().with_grid(8, 8);
    let field = encoder::encode_grid(&cfg);
    let spec = ProjectionSpec::seeded(cfg.proj_dim as usize, cfg.proj_seed);
    let enc = encoder::project(&field, &spec, &cfg).map_err(|e| e.to_string())?;
    let mut scaled = cfg.clone();
    scaled.beta_pos = 5.0;
    let enc2 = encoder::project(&field, &spec, &scaled).map_err(|e| e.to_string())?;
    let a = analysis::distance_decay_report(&enc).map_err(|e| e.to_string())?;
    let b = analysis::distance_decay_report(&enc2).map_err(|e| e.to_string())?;
    for (x, y) in a.bin_means.iter().zip(&b.bin_means) {
        if (x - y).abs() > 1e-9 {
            return fail("bin means changed under positive scaling");
        }
    }
    Ok("bin means invariant to positive uniform scaling".into())
}

fn analysis_channel_permutation() -> Result<String, String> {
    let field = encoder::encode_grid(&EncoderConfig::default());
    let rho = analysis::dissimilarity_correlation(&field).map_err(|e| e.to_string())?;
    let permuted: Vec<FeatureVec4> = field
        .as_slice()
        .iter()
        .map(|f| {
            let a = f.as_array();
            FeatureVec4::from_array([a[2], a[0], a[3], a[1]])
        })
        .collect();
    let pf = crate::encoder::FeatureField::new(field.h(), field.w(), permuted);
    let rho_p = analysis::dissimilarity_correlation(&pf).map_err(|e| e.to_string())?;
    if (rho - rho_p).abs() > 1e-12 {
        return fail(format!("rho moved from {rho} to {rho_p} under permutation"));
    }
    Ok("correlation invariant under uniform channel permutation".into())
}

fn analysis_attenuation() -> Result<String, String> {
    let rep = analysis::local_attenuation_check(
        &EncoderConfig::default(),
        0.3,
        10,
        &[0.0125, 0.025, 0.05, 0.1],
    )
    .map_err(|e| e.to_string())?;
    if rep.violations != 0 {
        return fail(format!("{} similarity violations", rep.violations));
    }
    if rep.fit_r2.iter().any(|&r| r < 0.9) {
        return fail(format!("weak quadratic fit: {:?}", rep.fit_r2));
    }
    Ok(format!(
        "0 violations, min fit R2 = {:.4}",
        rep.fit_r2.iter().cloned().fold(f64::INFINITY, f64::min)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_rejected() {
        assert!(matches!(run_suite("nope"), Err(VerifyError::UnknownSuite(_))));
    }

    #[test]
    fn suite_filter_selects_subset() {
        let lattice = run_suite("lattice").unwrap();
        assert!(!lattice.is_empty());
        assert!(lattice.iter().all(|c| c.suite == "lattice"));
        for c in &lattice {
            assert!(c.passed, "{}/{}: {}", c.suite, c.id, c.detail);
        }
    }
}
