//! Pre-training encoding pipeline: patch-grid normalization, complex mapping,
//! 4-channel feature extraction, tanh stabilization, linear projection with
//! LayerNorm and global position scaling.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeParams;
use crate::util::{inverse_softplus, softplus};
use crate::wp::WpEvaluator;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("patch index ({i}, {j}) out of range for a {h}x{w} grid")]
    IndexOutOfRange { i: u32, j: u32, h: u32, w: u32 },
    #[error("projection dimension mismatch: spec has {spec}, config wants {config}")]
    DimensionMismatch { spec: usize, config: usize },
}

/// Configuration of the pre-training encoder.
///
/// `alpha_scale_raw` and `alpha_learn` are stored pre-activation; the
/// effective values are `softplus(alpha_scale_raw)` and ω₃′ =
/// `softplus(alpha_learn)`, keeping both strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub alpha_scale_raw: f64,
    pub alpha_learn: f64,
    pub beta_pos: f64,
    pub grid_h: u32,
    pub grid_w: u32,
    pub proj_dim: u32,
    pub proj_seed: u64,
    pub lattice: LatticeParams,
}

impl EncoderConfig {
    /// Effective tanh compression factor α_scale.
    pub fn alpha_scale(&self) -> f64 {
        softplus(self.alpha_scale_raw)
    }

    /// Effective imaginary half-period ω₃′.
    pub fn omega3_prime(&self) -> f64 {
        softplus(self.alpha_learn)
    }

    /// Lattice actually used for evaluation: the configured lattice with
    /// ω₃′ taken from `alpha_learn`.
    pub fn effective_lattice(&self) -> LatticeParams {
        let mut lat = self.lattice.clone();
        lat.omega3_im = self.omega3_prime();
        lat
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha_u = alpha;
        self.alpha_v = alpha;
        self
    }

    pub fn with_alpha_scale(mut self, alpha_scale: f64) -> Self {
        self.alpha_scale_raw = inverse_softplus(alpha_scale);
        self
    }

    pub fn with_grid(mut self, h: u32, w: u32) -> Self {
        self.grid_h = h;
        self.grid_w = w;
        self
    }
}

impl Default for EncoderConfig {
    /// Defaults: α_u = α_v = 0.4, α_scale = 0.15, square lemniscatic lattice
    /// (ω₃′ initialized to ω₁), β_pos = 1, 14×14 grid, d = 192.
    fn default() -> Self {
        let lattice = LatticeParams::lemniscatic();
        Self {
            alpha_u: 0.4,
            alpha_v: 0.4,
            alpha_scale_raw: inverse_softplus(0.15),
            alpha_learn: inverse_softplus(lattice.omega3_im),
            beta_pos: 1.0,
            grid_h: 14,
            grid_w: 14,
            proj_dim: 192,
            proj_seed: 42,
            lattice,
        }
    }
}

/// The 4-channel positional feature (Re ℘, Im ℘, Re ℘′, Im ℘′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVec4 {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl FeatureVec4 {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { f1: a[0], f2: a[1], f3: a[2], f4: a[3] }
    }
}

/// Row-major H×W grid of 4-channel features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    h: usize,
    w: usize,
    data: Vec<FeatureVec4>,
}

impl FeatureField {
    pub fn new(h: usize, w: usize, data: Vec<FeatureVec4>) -> Self {
        assert_eq!(data.len(), h * w);
        Self { h, w, data }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn at(&self, i: usize, j: usize) -> FeatureVec4 {
        self.data[i * self.w + j]
    }

    pub fn as_slice(&self) -> &[FeatureVec4] {
        &self.data
    }

    /// All H·W·4 components in row-major, channel-interleaved order.
    pub fn components(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().flat_map(|f| f.as_array())
    }
}

/// Row-major H×W grid of d-dimensional encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct Encodings {
    h: usize,
    w: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Encodings {
    pub fn new(h: usize, w: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), h * w * dim);
        Self { h, w, dim, data }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_positions(&self) -> usize {
        self.h * self.w
    }

    pub fn row(&self, pos: usize) -> &[f64] {
        &self.data[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Linear projection to the model dimension plus LayerNorm parameters.
///
/// Deterministic given the seed: weights are standard normal scaled by 1/2,
/// bias zero, identity LayerNorm affine, ε = 1e-5.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    /// d×4 weight matrix, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub ln_gain: Vec<f64>,
    pub ln_bias: Vec<f64>,
    pub ln_eps: f64,
}

impl ProjectionSpec {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..dim * 4)
            .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            weights,
            bias: vec![0.0; dim],
            ln_gain: vec![1.0; dim],
            ln_bias: vec![0.0; dim],
            ln_eps: 1e-5,
        }
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    /// Affine part only: y = W·f + b.
    pub fn affine(&self, f: FeatureVec4) -> Vec<f64> {
        let fa = f.as_array();
        self.weights
            .chunks_exact(4)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(fa).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Patch-center normalization u = (j + 0.5)/W, v = (i + 0.5)/H.
pub fn normalize_coords(i: u32, j: u32, h: u32, w: u32) -> Result<(f64, f64), EncoderError> {
    if i >= h || j >= w {
        return Err(EncoderError::IndexOutOfRange { i, j, h, w });
    }
    Ok(((j as f64 + 0.5) / w as f64, (i as f64 + 0.5) / h as f64))
}

/// Complex mapping z = α_u·u·2ω₁ + i·α_v·v·2ω₃′ (a real-linear isomorphism
/// of the plane for nonzero scale factors).
pub fn map_to_complex(u: f64, v: f64, cfg: &EncoderConfig) -> Complex64 {
    Complex64::new(
        cfg.alpha_u * u * 2.0 * cfg.lattice.omega1,
        cfg.alpha_v * v * 2.0 * cfg.omega3_prime(),
    )
}

/// Componentwise stabilization f̃ = tanh(α_scale · f).
pub fn stabilize(f: FeatureVec4, cfg: &EncoderConfig) -> FeatureVec4 {
    let a = cfg.alpha_scale();
    FeatureVec4 {
        f1: (a * f.f1).tanh(),
        f2: (a * f.f2).tanh(),
        f3: (a * f.f3).tanh(),
        f4: (a * f.f4).tanh(),
    }
}

/// Encoder bound to one lattice evaluator; use for batch work so the sorted
/// point set is built once.
#[derive(Debug, Clone)]
pub struct GridEncoder {
    cfg: EncoderConfig,
    eval: WpEvaluator,
}

impl GridEncoder {
    pub fn new(cfg: &EncoderConfig) -> Self {
        let eval = WpEvaluator::new(&cfg.effective_lattice());
        Self { cfg: cfg.clone(), eval }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn evaluator(&self) -> &WpEvaluator {
        &self.eval
    }

    /// Unstabilized 4-channel feature at a complex point. Pole substitution
    /// propagates from the evaluator (both channels become C_large + 0i).
    pub fn raw_features_at(&self, z: Complex64) -> FeatureVec4 {
        let p = self.eval.wp(z).value;
        let dp = self.eval.wp_prime(z).value;
        FeatureVec4 { f1: p.re, f2: p.im, f3: dp.re, f4: dp.im }
    }

    /// Stabilized feature at normalized coordinates.
    pub fn features_at(&self, u: f64, v: f64) -> FeatureVec4 {
        self.features_at_complex(map_to_complex(u, v, &self.cfg))
    }

    /// Stabilized feature at an arbitrary complex point.
    pub fn features_at_complex(&self, z: Complex64) -> FeatureVec4 {
        stabilize(self.raw_features_at(z), &self.cfg)
    }

    /// Row-major stabilized feature field over the configured grid.
    pub fn encode_grid(&self) -> FeatureField {
        let (h, w) = (self.cfg.grid_h, self.cfg.grid_w);
        let mut data = Vec::with_capacity((h * w) as usize);
        for i in 0..h {
            for j in 0..w {
                let (u, v) = normalize_coords(i, j, h, w).expect("indices in range");
                data.push(self.features_at(u, v));
            }
        }
        FeatureField::new(h as usize, w as usize, data)
    }
}

/// Unstabilized features of one point (convenience wrapper; builds an
/// evaluator per call).
pub fn raw_features(z: Complex64, cfg: &EncoderConfig) -> FeatureVec4 {
    GridEncoder::new(cfg).raw_features_at(z)
}

/// Stabilized feature field over the configured grid.
pub fn encode_grid(cfg: &EncoderConfig) -> FeatureField {
    GridEncoder::new(cfg).encode_grid()
}

/// Per-position projection: y = W·f̃ + b, LayerNorm with the configured affine
/// parameters, then global scaling by β_pos.
pub fn project(
    field: &FeatureField,
    spec: &ProjectionSpec,
    cfg: &EncoderConfig,
) -> Result<Encodings, EncoderError> {
    let dim = spec.dim();
    if dim != cfg.proj_dim as usize {
        return Err(EncoderError::DimensionMismatch { spec: dim, config: cfg.proj_dim as usize });
    }
    let mut data = Vec::with_capacity(field.as_slice().len() * dim);
    for &f in field.as_slice() {
        let y = spec.affine(f);
        let mean = y.iter().sum::<f64>() / dim as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dim as f64;
        let inv = 1.0 / (var + spec.ln_eps).sqrt();
        for (k, yk) in y.iter().enumerate() {
            let ln = spec.ln_gain[k] * (yk - mean) * inv + spec.ln_bias[k];
            data.push(cfg.beta_pos * ln);
        }
    }
    Ok(Encodings::new(field.h(), field.w(), dim, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_corner_values() {
        let (u, v) = normalize_coords(0, 0, 14, 14).unwrap();
        assert!((u - 0.5 / 14.0).abs() < 1e-15 && (v - 0.5 / 14.0).abs() < 1e-15);
        let (u, v) = normalize_coords(13, 13, 14, 14).unwrap();
        assert!((u - 13.5 / 14.0).abs() < 1e-15 && (v - 13.5 / 14.0).abs() < 1e-15);
        let (u, v) = normalize_coords(2, 2, 5, 5).unwrap();
        assert_eq!((u, v), (0.5, 0.5));
        assert!(normalize_coords(14, 0, 14, 14).is_err());
    }

    #[test]
    fn map_center_value() {
        let cfg = EncoderConfig::default();
        let z = map_to_complex(0.5, 0.5, &cfg);
        // 0.4 * 0.5 * 2w1 = 0.4 * w1 ~ 1.0488
        assert!((z.re - 1.0488).abs() < 1e-3);
        assert!((z.im - 1.0488).abs() < 1e-3);
    }

    #[test]
    fn map_is_linear() {
        let cfg = EncoderConfig::default();
        let (a, b) = (0.3, 0.7);
        let (u1, v1) = (0.2, 0.9);
        let (u2, v2) = (0.8, 0.1);
        let lhs = map_to_complex(a * u1 + b * u2, a * v1 + b * v2, &cfg);
        let rhs = a * map_to_complex(u1, v1, &cfg) + b * map_to_complex(u2, v2, &cfg);
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(map_to_complex(1e-12, 1e-12, &cfg).norm() < 1e-10);
    }

    #[test]
    fn raw_features_real_axis() {
        let cfg = EncoderConfig::default();
        let enc = GridEncoder::new(&cfg);
        let f = enc.raw_features_at(Complex64::new(0.9, 0.0));
        assert!(f.f2.abs() < 1e-12 * (1.0 + f.f1.abs()));
        assert!(f.f4.abs() < 1e-12 * (1.0 + f.f3.abs()));
        // Conjugate point flips the imaginary channels.
        let a = enc.raw_features_at(Complex64::new(0.6, 0.4));
        let b = enc.raw_features_at(Complex64::new(0.6, -0.4));
        assert!((a.f2 + b.f2).abs() < 1e-9 && (a.f4 + b.f4).abs() < 1e-9);
        assert!((a.f1 - b.f1).abs() < 1e-9 && (a.f3 - b.f3).abs() < 1e-9);
    }

    #[test]
    fn stabilize_properties() {
        let cfg = EncoderConfig::default();
        let zero = stabilize(FeatureVec4::from_array([0.0; 4]), &cfg);
        assert_eq!(zero.as_array(), [0.0; 4]);
        let sat = stabilize(FeatureVec4::from_array([1e3, -1e3, 0.0, 0.0]), &cfg);
        assert!(sat.f1 >= 1.0 - 1e-15 && sat.f1 <= 1.0);
        assert!(sat.f2 <= -1.0 + 1e-15 && sat.f2 >= -1.0);
        // Monotone and sign-preserving.
        let a = stabilize(FeatureVec4::from_array([0.5, -0.5, 2.0, -2.0]), &cfg);
        assert!(a.f1 > 0.0 && a.f2 < 0.0 && a.f3 > a.f1 && a.f4 < a.f2);
    }

    #[test]
    fn grid_defaults_no_pole_hits() {
        let cfg = EncoderConfig::default();
        let lat = cfg.effective_lattice();
        let mut min_dist = f64::INFINITY;
        for i in 0..14 {
            for j in 0..14 {
                let (u, v) = normalize_coords(i, j, 14, 14).unwrap();
                let z = map_to_complex(u, v, &cfg);
                min_dist = min_dist.min(crate::lattice::nearest_lattice_distance(z, &lat));
            }
        }
        assert!(min_dist >= 0.07, "min lattice distance {min_dist}");
        // No pole substitution anywhere; components stay bounded. The
        // derivative channels saturate to 1.0 in binary64 at the patches
        // nearest the origin (tanh of ~250), which is the expected
        // stabilized behavior, not a pole hit.
        let enc = GridEncoder::new(&cfg);
        let field = encode_grid(&cfg);
        for i in 0..14 {
            for j in 0..14 {
                let (u, v) = normalize_coords(i, j, 14, 14).unwrap();
                let z = map_to_complex(u, v, &cfg);
                assert!(!enc.evaluator().wp(z).is_pole_substituted);
            }
        }
        for f in field.components() {
            assert!(f.is_finite() && f.abs() <= 1.0);
        }
    }

    #[test]
    fn one_by_one_grid() {
        let cfg = EncoderConfig::default().with_grid(1, 1);
        let field = encode_grid(&cfg);
        let enc = GridEncoder::new(&cfg);
        assert_eq!(field.at(0, 0), enc.features_at(0.5, 0.5));
    }

    #[test]
    fn transpose_symmetry_on_square_lattice() {
        // For the square lattice with alpha_u = alpha_v, transposing the grid
        // maps z to i*conj(z), a lattice symmetry:
        // f1 -> -f1, f2 -> f2, f3 <-> f4.
        let cfg = EncoderConfig::default();
        let field = encode_grid(&cfg);
        for i in 0..14 {
            for j in 0..14 {
                let a = field.at(i, j);
                let b = field.at(j, i);
                assert!((a.f1 + b.f1).abs() < 1e-9);
                assert!((a.f2 - b.f2).abs() < 1e-9);
                assert!((a.f3 - b.f4).abs() < 1e-9);
                assert!((a.f4 - b.f3).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mirror_antisymmetry_only_at_unit_alpha() {
        // Horizontal mirror u -> 1-u maps z to -conj(z) + 2*alpha_u*w1, which
        // is a lattice symmetry only when 2*alpha_u*w1 is a period, i.e.
        // alpha_u = 1. There f2 and f3 flip sign; at the 0.4 default they do
        // not.
        let unit = EncoderConfig::default().with_alpha(1.0);
        let field = encode_grid(&unit);
        for i in 0..14 {
            for j in 0..14 {
                let a = field.at(i, j);
                let b = field.at(i, 13 - j);
                assert!((a.f1 - b.f1).abs() < 1e-9);
                assert!((a.f2 + b.f2).abs() < 1e-9);
                assert!((a.f3 + b.f3).abs() < 1e-9);
                assert!((a.f4 - b.f4).abs() < 1e-9);
            }
        }
        let field04 = encode_grid(&EncoderConfig::default());
        let mut max_dev = 0.0f64;
        for i in 0..14 {
            for j in 0..14 {
                max_dev = max_dev.max((field04.at(i, j).f2 + field04.at(i, 13 - j).f2).abs());
            }
        }
        assert!(max_dev > 0.1, "mirror antisymmetry should fail at alpha = 0.4");
    }

    #[test]
    fn projection_seeded_deterministic() {
        let a = ProjectionSpec::seeded(192, 7);
        let b = ProjectionSpec::seeded(192, 7);
        assert_eq!(a, b);
        let c = ProjectionSpec::seeded(192, 8);
        assert_ne!(a.weights, c.weights);
        assert!(a.bias.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn project_layernorm_and_beta() {
        let cfg = EncoderConfig::default().with_grid(4, 4);
        let field = encode_grid(&cfg);
        let spec = ProjectionSpec::seeded(cfg.proj_dim as usize, cfg.proj_seed);
        let enc = project(&field, &spec, &cfg).unwrap();
        for pos in 0..enc.n_positions() {
            let row = enc.row(pos);
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / row.len() as f64;
            assert!(mean.abs() < 1e-9);
            // Variance is v/(v + eps) of the pre-normalization variance,
            // i.e. slightly below 1, more so for small activations.
            assert!(var <= 1.0 + 1e-12 && var > 0.9, "var = {var}");
        }
        let mut zero = cfg.clone();
        zero.beta_pos = 0.0;
        let enc0 = project(&field, &spec, &zero).unwrap();
        assert!(enc0.as_slice().iter().all(|&v| v == 0.0));

        // Cosine similarity between positions is invariant to beta_pos > 0.
        let mut scaled = cfg.clone();
        scaled.beta_pos = 3.7;
        let enc2 = project(&field, &spec, &scaled).unwrap();
        let cos = |e: &Encodings, a: usize, b: usize| {
            let (x, y) = (e.row(a), e.row(b));
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            dot / (x.iter().map(|v| v * v).sum::<f64>().sqrt()
                * y.iter().map(|v| v * v).sum::<f64>().sqrt())
        };
        assert!((cos(&enc, 0, 9) - cos(&enc2, 0, 9)).abs() < 1e-12);
    }

    #[test]
    fn project_rejects_dim_mismatch() {
        let cfg = EncoderConfig::default().with_grid(2, 2);
        let field = encode_grid(&cfg);
        let spec = ProjectionSpec::seeded(16, 0);
        assert!(matches!(
            project(&field, &spec, &cfg),
            Err(EncoderError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pole_guard_inert_on_default_grid() {
        let base = encode_grid(&EncoderConfig::default());
        for kappa in [1.0, 5.0, 15.0, 30.0, 60.0, 120.0] {
            let mut cfg = EncoderConfig::default();
            cfg.lattice.kappa = kappa;
            let field = encode_grid(&cfg);
            assert_eq!(
                field.components().map(f64::to_bits).collect::<Vec<_>>(),
                base.components().map(f64::to_bits).collect::<Vec<_>>(),
                "kappa = {kappa} changed the field"
            );
        }
    }
}
