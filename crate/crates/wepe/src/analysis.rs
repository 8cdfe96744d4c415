//! Measurable statistics of the encodings: distance-decay curves,
//! distance/dissimilarity correlations, the local-attenuation check and
//! feature statistics.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::encoder::{map_to_complex, EncoderConfig, Encodings, FeatureField, GridEncoder, ProjectionSpec};
use crate::lattice::nearest_lattice_distance;
use crate::util::{pearson, QuasiRandom2};

/// Number of equal-width distance bins in a decay report.
pub const DECAY_BINS: usize = 80;
/// Base constant of the rescaled similarity range.
pub const C_BASE: f64 = 6.0;
/// Range constant of the rescaled similarity range.
pub const C_RANGE: f64 = 14.0;
/// Default norm floor for normalized encodings in the attenuation check.
pub const DEFAULT_NORM_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} grid positions, got {got}")]
    GridTooSmall { needed: usize, got: usize },
    #[error("encoding norm {norm:e} below the floor {floor:e}")]
    NormFloorViolated { norm: f64, floor: f64 },
    #[error("attenuation check misconfigured: {0}")]
    BadAttenuationSetup(String),
}

/// Cosine similarity of two nonzero vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Binned distance-decay statistics of pairwise encoding similarity.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// Midpoints of the 80 equal-width relative-distance bins over [0, 100].
    pub bin_centers: Vec<f64>,
    /// Mean rescaled similarity per bin; empty bins are filled by linear
    /// interpolation between occupied neighbors so every entry stays inside
    /// [C_base, C_base + C_range].
    pub bin_means: Vec<f64>,
    /// Pairs per bin.
    pub bin_counts: Vec<usize>,
    /// Pearson correlation between bin centers and bin means over occupied
    /// bins. NaN when the similarities are degenerate.
    pub pearson_rho: f64,
    /// Pearson correlation over the raw (unbinned) pairs, for diagnostics.
    pub unbinned_rho: f64,
    pub n_pairs: usize,
    pub raw_sim_min: f64,
    pub raw_sim_max: f64,
    /// Fraction of occupied bin pairs (i < j) whose means decrease.
    pub monotonicity_fraction: f64,
    /// True when all similarities coincide and no rescaling exists.
    pub degenerate: bool,
}

fn decay_core(h: usize, w: usize, dim: usize, data: &[f64]) -> Result<DecayReport, AnalysisError> {
    let n = h * w;
    if n < 4 {
        return Err(AnalysisError::GridTooSmall { needed: 4, got: n });
    }
    let row = |p: usize| &data[p * dim..(p + 1) * dim];
    let norms: Vec<f64> = (0..n)
        .map(|p| row(p).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) {
        return Err(AnalysisError::ZeroVector);
    }
    let d_max = (((h - 1) * (h - 1) + (w - 1) * (w - 1)) as f64).sqrt();
    let n_pairs = n * (n - 1) / 2;
    let mut dists = Vec::with_capacity(n_pairs);
    let mut sims = Vec::with_capacity(n_pairs);
    for a in 0..n {
        let (ia, ja) = (a / w, a % w);
        let ra = row(a);
        for b in (a + 1)..n {
            let (ib, jb) = (b / w, b % w);
            let di = ia as f64 - ib as f64;
            let dj = ja as f64 - jb as f64;
            dists.push((di * di + dj * dj).sqrt() / d_max * 100.0);
            let dot: f64 = ra.iter().zip(row(b)).map(|(x, y)| x * y).sum();
            sims.push(dot / (norms[a] * norms[b]));
        }
    }
    let s_min = sims.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bin_centers: Vec<f64> = (0..DECAY_BINS)
        .map(|k| (k as f64 + 0.5) * 100.0 / DECAY_BINS as f64)
        .collect();

    let span = s_max - s_min;
    if span <= f64::EPSILON * s_max.abs().max(1.0) {
        return Ok(DecayReport {
            bin_centers,
            bin_means: vec![f64::NAN; DECAY_BINS],
            bin_counts: vec![0; DECAY_BINS],
            pearson_rho: f64::NAN,
            unbinned_rho: f64::NAN,
            n_pairs,
            raw_sim_min: s_min,
            raw_sim_max: s_max,
            monotonicity_fraction: f64::NAN,
            degenerate: true,
        });
    }

    let mut sums = vec![0.0; DECAY_BINS];
    let mut counts = vec![0usize; DECAY_BINS];
    let mut rescaled = Vec::with_capacity(n_pairs);
    for (&d, &s) in dists.iter().zip(&sims) {
        let srel = C_BASE + (s - s_min) / span * C_RANGE;
        rescaled.push(srel);
        let k = ((d / 100.0 * DECAY_BINS as f64) as usize).min(DECAY_BINS - 1);
        sums[k] += srel;
        counts[k] += 1;
    }
    let occupied: Vec<usize> = (0..DECAY_BINS).filter(|&k| counts[k] > 0).collect();
    let occ_centers: Vec<f64> = occupied.iter().map(|&k| bin_centers[k]).collect();
    let occ_means: Vec<f64> = occupied.iter().map(|&k| sums[k] / counts[k] as f64).collect();

    // Fill empties by linear interpolation so the report vector stays inside
    // the rescaled range.
    let mut bin_means = vec![f64::NAN; DECAY_BINS];
    for (&k, &m) in occupied.iter().zip(&occ_means) {
        bin_means[k] = m;
    }
    let first = occupied[0];
    let last = *occupied.last().unwrap();
    for (k, mean) in bin_means.iter_mut().enumerate() {
        if mean.is_nan() {
            if k < first {
                *mean = occ_means[0];
            } else if k > last {
                *mean = *occ_means.last().unwrap();
            } else {
                let lo = occupied.iter().rposition(|&o| o < k).unwrap();
                let hi = occupied.iter().position(|&o| o > k).unwrap();
                let (k0, k1) = (occupied[lo] as f64, occupied[hi] as f64);
                let t = (k as f64 - k0) / (k1 - k0);
                *mean = occ_means[lo] * (1.0 - t) + occ_means[hi] * t;
            }
        }
    }

    let mut decreasing = 0usize;
    let mut total = 0usize;
    for i in 0..occ_means.len() {
        for j in (i + 1)..occ_means.len() {
            total += 1;
            if occ_means[j] < occ_means[i] {
                decreasing += 1;
            }
        }
    }

    Ok(DecayReport {
        pearson_rho: pearson(&occ_centers, &occ_means),
        unbinned_rho: pearson(&dists, &rescaled),
        bin_centers,
        bin_means,
        bin_counts: counts,
        n_pairs,
        raw_sim_min: s_min,
        raw_sim_max: s_max,
        monotonicity_fraction: decreasing as f64 / total.max(1) as f64,
        degenerate: false,
    })
}

/// Distance-decay report of projected encodings: relative patch distance
/// (Euclidean over grid indices, scaled so the grid diagonal is 100) against
/// min-max rescaled cosine similarity, aggregated into 80 equal-width bins.
pub fn distance_decay_report(enc: &Encodings) -> Result<DecayReport, AnalysisError> {
    decay_core(enc.h(), enc.w(), enc.dim(), enc.as_slice())
}

/// Same analysis after fusing seeded standard-normal content features with
/// the encodings (h = f + p), simulating content-plus-position tokens.
pub fn distance_decay_report_fused(enc: &Encodings, seed: u64) -> Result<DecayReport, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fused: Vec<f64> = enc
        .as_slice()
        .iter()
        .map(|&p| p + rng.sample::<f64, _>(StandardNormal))
        .collect();
    decay_core(enc.h(), enc.w(), enc.dim(), &fused)
}

/// Pearson correlation between Euclidean grid distance and cosine
/// dissimilarity (1 − cos) of the stabilized 4-channel features over all
/// unaggregated patch pairs.
pub fn dissimilarity_correlation(field: &FeatureField) -> Result<f64, AnalysisError> {
    let (h, w) = (field.h(), field.w());
    let n = h * w;
    if n < 2 {
        return Err(AnalysisError::GridTooSmall { needed: 2, got: n });
    }
    let rows: Vec<[f64; 4]> = field.as_slice().iter().map(|f| f.as_array()).collect();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) {
        return Err(AnalysisError::ZeroVector);
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    let mut dissim = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        let (ia, ja) = (a / w, a % w);
        for b in (a + 1)..n {
            let (ib, jb) = (b / w, b % w);
            let di = ia as f64 - ib as f64;
            let dj = ja as f64 - jb as f64;
            dists.push((di * di + dj * dj).sqrt());
            let dot: f64 = rows[a].iter().zip(rows[b]).map(|(x, y)| x * y).sum();
            dissim.push(1.0 - dot / (norms[a] * norms[b]));
        }
    }
    Ok(pearson(&dists, &dissim))
}

/// Componentwise statistics of a feature field: mean absolute value, standard
/// deviation of the signed values, saturation fraction (|f| > 0.99) and
/// near-zero fraction (|f| < 0.01).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeatureStats {
    pub mean_abs: f64,
    pub std: f64,
    pub sat_frac: f64,
    pub zero_frac: f64,
}

pub fn feature_stats(field: &FeatureField) -> FeatureStats {
    let values: Vec<f64> = field.components().collect();
    let n = values.len() as f64;
    let mean_abs = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sat = values.iter().filter(|v| v.abs() > 0.99).count() as f64 / n;
    let zero = values.iter().filter(|v| v.abs() < 0.01).count() as f64 / n;
    FeatureStats {
        mean_abs,
        std: var.sqrt(),
        sat_frac: sat,
        zero_frac: zero,
    }
}

/// Outcome of the local-attenuation verification.
#[derive(Debug, Clone, Serialize)]
pub struct AttenuationReport {
    pub n_base: usize,
    pub radii: Vec<f64>,
    /// Samples where 1 − s(z, δ) < −1e-12 (should be zero).
    pub violations: usize,
    /// Smallest observed 1 − s across all samples.
    pub min_gap: f64,
    /// max over samples of (1 − s)/|δ|² at the two smallest radii.
    pub c_hat: [f64; 2],
    /// Per-base-point R² of the least-squares fit 1 − s̄(r) = c·r² over the
    /// radii within the fit window.
    pub fit_r2: Vec<f64>,
    /// Per-base-point fitted curvature constants c.
    pub fit_c: Vec<f64>,
    /// Ratios (1 − s̄(r/2)) / (1 − s̄(r)) wherever consecutive radii double
    /// inside the fit window (quadratic decay puts these near 1/4).
    pub quarter_ratios: Vec<f64>,
}

/// Verify quadratic local attenuation of normalized projected encodings
/// q(z) = p(z)/∥p(z)∥ with p(z) = W·f̃(z) + b.
///
/// Samples `n_base` quasi-random base points whose lattice distance stays
/// at least `domain_margin` plus the largest radius, then measures
/// s(z, δ) = ⟨q(z), q(z+δ)⟩ over 16 angles per radius.
pub fn local_attenuation_check(
    cfg: &EncoderConfig,
    domain_margin: f64,
    n_base: usize,
    delta_radii: &[f64],
) -> Result<AttenuationReport, AnalysisError> {
    const N_ANGLES: usize = 16;
    const FIT_RADIUS_MAX: f64 = 0.05;
    if delta_radii.len() < 2 {
        return Err(AnalysisError::BadAttenuationSetup(
            "need at least two radii".into(),
        ));
    }
    let mut radii = delta_radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if radii[0] <= 0.0 {
        return Err(AnalysisError::BadAttenuationSetup("radii must be positive".into()));
    }
    let r_largest = *radii.last().unwrap();
    let enc = GridEncoder::new(cfg);
    let spec = ProjectionSpec::seeded(cfg.proj_dim as usize, cfg.proj_seed);
    let lat = cfg.effective_lattice();

    let normalized = |z: Complex64| -> Result<Vec<f64>, AnalysisError> {
        let p = spec.affine(enc.features_at_complex(z));
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < DEFAULT_NORM_FLOOR {
            return Err(AnalysisError::NormFloorViolated { norm, floor: DEFAULT_NORM_FLOOR });
        }
        Ok(p.into_iter().map(|v| v / norm).collect())
    };

    let mut seq = QuasiRandom2::new();
    let mut bases = Vec::with_capacity(n_base);
    let mut attempts = 0usize;
    while bases.len() < n_base && attempts < n_base.saturating_mul(10_000) {
        attempts += 1;
        let (u, v) = seq.next_point();
        if !(0.1..=0.9).contains(&u) || !(0.1..=0.9).contains(&v) {
            continue;
        }
        let z = map_to_complex(u, v, cfg);
        if nearest_lattice_distance(z, &lat) >= domain_margin + r_largest {
            bases.push(z);
        }
    }
    if bases.len() < n_base {
        return Err(AnalysisError::BadAttenuationSetup(format!(
            "could only place {} of {} base points at margin {domain_margin}",
            bases.len(),
            n_base
        )));
    }

    let mut violations = 0usize;
    let mut min_gap = f64::INFINITY;
    let mut c_hat = [0.0f64; 2];
    let mut fit_r2 = Vec::with_capacity(n_base);
    let mut fit_c = Vec::with_capacity(n_base);
    let mut quarter_ratios = Vec::new();
    for &z in &bases {
        let q0 = normalized(z)?;
        let mut gap_by_radius = Vec::with_capacity(radii.len());
        for (ri, &r) in radii.iter().enumerate() {
            let mut gap_sum = 0.0;
            for a in 0..N_ANGLES {
                let theta = 2.0 * std::f64::consts::PI * a as f64 / N_ANGLES as f64;
                let dz = Complex64::from_polar(r, theta);
                let q1 = normalized(z + dz)?;
                let s: f64 = q0.iter().zip(&q1).map(|(x, y)| x * y).sum();
                let gap = 1.0 - s;
                min_gap = min_gap.min(gap);
                if gap < -1e-12 {
                    violations += 1;
                }
                gap_sum += gap;
                if ri < 2 {
                    c_hat[ri] = c_hat[ri].max(gap / (r * r));
                }
            }
            gap_by_radius.push(gap_sum / N_ANGLES as f64);
        }
        // Least-squares c for (1 - sbar) = c r^2 over the fit window.
        let fit: Vec<(f64, f64)> = radii
            .iter()
            .zip(&gap_by_radius)
            .filter(|(r, _)| **r <= FIT_RADIUS_MAX)
            .map(|(r, g)| (*r, *g))
            .collect();
        if fit.len() >= 2 {
            let num: f64 = fit.iter().map(|(r, g)| g * r * r).sum();
            let den: f64 = fit.iter().map(|(r, _)| r.powi(4)).sum();
            let c = num / den;
            let mean_g: f64 = fit.iter().map(|(_, g)| g).sum::<f64>() / fit.len() as f64;
            let ss_tot: f64 = fit.iter().map(|(_, g)| (g - mean_g) * (g - mean_g)).sum();
            let ss_res: f64 = fit.iter().map(|(r, g)| (g - c * r * r).powi(2)).sum();
            fit_c.push(c);
            fit_r2.push(if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 });
        }
        // Quadratic decay check on consecutive radius halvings.
        for i in 0..radii.len() - 1 {
            if (radii[i + 1] / radii[i] - 2.0).abs() < 1e-9
                && radii[i + 1] <= FIT_RADIUS_MAX
                && gap_by_radius[i + 1] > 0.0
            {
                quarter_ratios.push(gap_by_radius[i] / gap_by_radius[i + 1]);
            }
        }
    }

    Ok(AttenuationReport {
        n_base,
        radii,
        violations,
        min_gap,
        c_hat,
        fit_r2,
        fit_c,
        quarter_ratios,
    })
}
