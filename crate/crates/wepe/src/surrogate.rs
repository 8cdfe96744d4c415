//! Fine-tuning surrogate field: a bounded stand-in for ℘ built from a
//! regularized radial term, Fourier-like directional corrections, a radial
//! derivative proxy, and the sigmoid-gated blend with pre-trained embeddings.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{Encodings, FeatureField, FeatureVec4, ProjectionSpec};
use crate::lattice::LEMNISCATIC_OMEGA1;
use crate::util::{inverse_softplus, sigmoid, softplus};

/// Positive floor added to the softplus that parameterizes ω₃′.
pub const OMEGA3_SOFTPLUS_OFFSET: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("shape mismatch: left has {left} elements, right has {right}")]
    ShapeMismatch { left: usize, right: usize },
}

/// Parameters of the fine-tuning surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Real half-period, fixed from pre-training.
    pub omega1: f64,
    /// Pre-activation for ω₃′ = softplus(omega3_raw) + 0.1.
    pub omega3_raw: f64,
    /// Horizontal phase perturbation ε_u.
    pub eps_u: f64,
    /// Vertical phase perturbation ε_v.
    pub eps_v: f64,
    /// Radial shape parameter β > 0.
    pub beta: f64,
    /// Amplitudes of the field correction (K terms).
    pub a_k: Vec<f64>,
    /// Amplitudes of the derivative-proxy correction (K′ terms).
    pub b_k: Vec<f64>,
    /// Imaginary-channel mixing coefficient of the field.
    pub eta: f64,
    /// Imaginary-channel mixing coefficient of the derivative proxy.
    pub eta_prime: f64,
    /// tanh compression factor α > 0.
    pub alpha: f64,
    /// Radius clamp ε in the regularized radial terms.
    pub r_eps: f64,
    /// Gate pre-activation; λ = sigmoid(lambda_raw).
    pub lambda_raw: f64,
}

impl SurrogateConfig {
    /// Effective imaginary half-period ω₃′ = softplus(omega3_raw) + 0.1.
    pub fn omega3_prime(&self) -> f64 {
        softplus(self.omega3_raw) + OMEGA3_SOFTPLUS_OFFSET
    }

    /// Gate value λ = sigmoid(lambda_raw) ∈ (0, 1).
    pub fn lambda(&self) -> f64 {
        sigmoid(self.lambda_raw)
    }
}

impl Default for SurrogateConfig {
    /// Defaults: square geometry at the pre-training half-period, K = K′ = 3
    /// amplitudes 0.1/k², ε_u = ε_v = 0.01, β = 0.1, η = η′ = 0.5, α = 0.15,
    /// r_eps = 1e-4.
    fn default() -> Self {
        let amps = vec![0.1, 0.1 / 4.0, 0.1 / 9.0];
        Self {
            omega1: LEMNISCATIC_OMEGA1,
            omega3_raw: inverse_softplus(LEMNISCATIC_OMEGA1 - OMEGA3_SOFTPLUS_OFFSET),
            eps_u: 0.01,
            eps_v: 0.01,
            beta: 0.10,
            a_k: amps.clone(),
            b_k: amps,
            eta: 0.5,
            eta_prime: 0.5,
            alpha: 0.15,
            r_eps: 1e-4,
            lambda_raw: 0.0,
        }
    }
}

/// Fine-tuning coordinate map
/// z = ω₁u + ε_u·sin(2πu) + i·(ω₃′v + ε_v·cos(2πv)).
pub fn ft_map(u: f64, v: f64, cfg: &SurrogateConfig) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    Complex64::new(
        cfg.omega1 * u + cfg.eps_u * (two_pi * u).sin(),
        cfg.omega3_prime() * v + cfg.eps_v * (two_pi * v).cos(),
    )
}

fn polar_parts(z: Complex64, cfg: &SurrogateConfig) -> (f64, f64, f64, f64) {
    let r_safe = z.norm().max(cfg.r_eps);
    let theta = z.im.atan2(z.re);
    let u_prime = z.re / cfg.omega1;
    let v_prime = z.im / cfg.omega3_prime();
    (r_safe, theta, u_prime, v_prime)
}

/// Surrogate complex field
/// (M·cosθ + C) + i·(M·sinθ + η·C) with M = 1/(max(|z|, ε)² + β) and the
/// exponentially damped Fourier-like correction C. Finite everywhere.
pub fn surrogate_field(z: Complex64, cfg: &SurrogateConfig) -> Complex64 {
    let (r, theta, u_p, v_p) = polar_parts(z, cfg);
    let m = 1.0 / (r * r + cfg.beta);
    let pi = std::f64::consts::PI;
    let mut c = 0.0;
    for (k, &a) in cfg.a_k.iter().enumerate() {
        let kf = (k + 1) as f64;
        c += a
            * ((kf * pi * u_p).cos() * (-kf * pi * v_p.abs()).exp()
                + (kf * pi * v_p).sin() * (-kf * pi * u_p.abs()).exp());
    }
    Complex64::new(m * theta.cos() + c, m * theta.sin() + cfg.eta * c)
}

/// Derivative proxy
/// (M′·cosθ + C′) + i·(M′·sinθ + η′·C′) with M′ = −2/(max(|z|, ε)³ + β).
pub fn surrogate_deriv(z: Complex64, cfg: &SurrogateConfig) -> Complex64 {
    let (r, theta, u_p, v_p) = polar_parts(z, cfg);
    let m = -2.0 / (r * r * r + cfg.beta);
    let pi = std::f64::consts::PI;
    let mut c = 0.0;
    for (k, &b) in cfg.b_k.iter().enumerate() {
        let kf = (k + 1) as f64;
        c += b
            * kf
            * (-(kf * pi * u_p).sin() * (-kf * pi * v_p.abs()).exp()
                + (kf * pi * v_p).cos() * (-kf * pi * u_p.abs()).exp());
    }
    Complex64::new(m * theta.cos() + c, m * theta.sin() + cfg.eta_prime * c)
}

/// Four stabilized features tanh(α·{Re, Im}) of the surrogate field and its
/// derivative proxy at ft_map(u, v).
pub fn ft_features(u: f64, v: f64, cfg: &SurrogateConfig) -> FeatureVec4 {
    let z = ft_map(u, v, cfg);
    let field = surrogate_field(z, cfg);
    let deriv = surrogate_deriv(z, cfg);
    FeatureVec4 {
        f1: (cfg.alpha * field.re).tanh(),
        f2: (cfg.alpha * field.im).tanh(),
        f3: (cfg.alpha * deriv.re).tanh(),
        f4: (cfg.alpha * deriv.im).tanh(),
    }
}

/// Fine-tuning projection head: per-position y = W·f + b + b_off, without
/// normalization. Pass an empty `b_off` for a zero offset.
pub fn project_finetune(
    field: &FeatureField,
    spec: &ProjectionSpec,
    b_off: &[f64],
) -> Result<Encodings, SurrogateError> {
    let dim = spec.dim();
    if !b_off.is_empty() && b_off.len() != dim {
        return Err(SurrogateError::ShapeMismatch { left: b_off.len(), right: dim });
    }
    let mut data = Vec::with_capacity(field.as_slice().len() * dim);
    for &f in field.as_slice() {
        let y = spec.affine(f);
        for (k, v) in y.into_iter().enumerate() {
            data.push(v + b_off.get(k).copied().unwrap_or(0.0));
        }
    }
    Ok(Encodings::new(field.h(), field.w(), dim, data))
}

/// Convex blend λ·e_wepe + (1−λ)·e_learned with λ = sigmoid(lambda_raw).
///
/// Both matrices are row-major N×d flattened; the class-token row is excluded
/// by contract (callers supply patch rows only).
pub fn hybrid_blend(
    e_wepe: &[f64],
    e_learned: &[f64],
    lambda_raw: f64,
) -> Result<Vec<f64>, SurrogateError> {
    if e_wepe.len() != e_learned.len() {
        return Err(SurrogateError::ShapeMismatch {
            left: e_wepe.len(),
            right: e_learned.len(),
        });
    }
    let lambda = sigmoid(lambda_raw);
    Ok(e_wepe
        .iter()
        .zip(e_learned)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ft_map_center() {
        let cfg = SurrogateConfig::default();
        let z = ft_map(0.5, 0.5, &cfg);
        // sin(pi) = 0, cos(pi) = -1.
        assert!((z.re - 0.5 * cfg.omega1).abs() < 1e-12);
        assert!((z.im - (0.5 * cfg.omega3_prime() - 0.01)).abs() < 1e-12);
    }

    #[test]
    fn ft_map_affine_when_unperturbed() {
        let cfg = SurrogateConfig { eps_u: 0.0, eps_v: 0.0, ..Default::default() };
        let z = ft_map(0.3, 0.8, &cfg);
        assert!((z.re - 0.3 * cfg.omega1).abs() < 1e-15);
        assert!((z.im - 0.8 * cfg.omega3_prime()).abs() < 1e-15);
    }

    #[test]
    fn ft_map_keeps_patch_rows_above_the_kink() {
        // eps_v < omega3' * 0.5/H keeps Im z > 0 for every patch center, so
        // the |v'| factors never cross their non-smooth point.
        let cfg = SurrogateConfig::default();
        assert!(cfg.eps_v < cfg.omega3_prime() * 0.5 / 14.0);
        for i in 0..14 {
            let v = (i as f64 + 0.5) / 14.0;
            for j in 0..14 {
                let u = (j as f64 + 0.5) / 14.0;
                let z = ft_map(u, v, &cfg);
                assert!(z.im > 0.0 && z.re > 0.0, "patch ({i}, {j}) maps to {z}");
            }
        }
    }

    #[test]
    fn ft_map_monotone_in_u() {
        let cfg = SurrogateConfig::default();
        // Derivative w1 + 2*pi*eps_u*cos >= w1 - 2*pi*eps_u > 0.
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let re = ft_map(u, 0.5, &cfg).re;
            assert!(re > prev);
            prev = re;
        }
    }

    #[test]
    fn field_at_origin_is_finite_formula() {
        let cfg = SurrogateConfig::default();
        let out = surrogate_field(Complex64::new(0.0, 0.0), &cfg);
        let m = 1.0 / (cfg.r_eps * cfg.r_eps + cfg.beta);
        let c0: f64 = cfg.a_k.iter().sum();
        assert!((out.re - (m + c0)).abs() < 1e-12);
        assert!((out.im - cfg.eta * c0).abs() < 1e-12);
    }

    #[test]
    fn field_large_beta_limit() {
        let cfg = SurrogateConfig { beta: 1e12, ..Default::default() };
        let z = Complex64::new(0.8, 0.9);
        let out = surrogate_field(z, &cfg);
        let (_, _, u_p, v_p) = polar_parts(z, &cfg);
        let pi = std::f64::consts::PI;
        let c: f64 = cfg
            .a_k
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let kf = (k + 1) as f64;
                a * ((kf * pi * u_p).cos() * (-kf * pi * v_p.abs()).exp()
                    + (kf * pi * v_p).sin() * (-kf * pi * u_p.abs()).exp())
            })
            .sum();
        assert!((out.re - c).abs() < 1e-10);
        assert!((out.im - cfg.eta * c).abs() < 1e-10);
    }

    #[test]
    fn deriv_radial_term_negative_and_finite_at_origin() {
        let cfg = SurrogateConfig::default();
        let out = surrogate_deriv(Complex64::new(0.0, 0.0), &cfg);
        assert!(out.re.is_finite() && out.im.is_finite());
        let m = -2.0 / (cfg.r_eps.powi(3) + cfg.beta);
        assert!(m < 0.0);
        // theta = 0 at the origin, so Re includes the full M'.
        let c0: f64 = cfg
            .b_k
            .iter()
            .enumerate()
            .map(|(k, &b)| b * (k + 1) as f64)
            .sum();
        assert!((out.re - (m + c0)).abs() < 1e-12);
    }

    #[test]
    fn deriv_empty_amplitudes() {
        let cfg = SurrogateConfig { b_k: vec![], ..Default::default() };
        let z = Complex64::new(0.4, 0.7);
        let out = surrogate_deriv(z, &cfg);
        let (r, theta, _, _) = polar_parts(z, &cfg);
        let m = -2.0 / (r * r * r + cfg.beta);
        assert!((out.re - m * theta.cos()).abs() < 1e-15);
        assert!((out.im - m * theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn features_zero_alpha() {
        let cfg = SurrogateConfig { alpha: 0.0, ..Default::default() };
        let f = ft_features(0.3, 0.6, &cfg);
        assert_eq!(f.as_array(), [0.0; 4]);
    }

    #[test]
    fn features_bounded_and_nondegenerate_on_grid() {
        let cfg = SurrogateConfig::default();
        let mut f2 = Vec::new();
        let mut f4 = Vec::new();
        for i in 0..14 {
            for j in 0..14 {
                let u = (j as f64 + 0.5) / 14.0;
                let v = (i as f64 + 0.5) / 14.0;
                let f = ft_features(u, v, &cfg);
                for c in f.as_array() {
                    assert!(c.is_finite() && c.abs() < 1.0);
                }
                f2.push(f.f2);
                f4.push(f.f4);
            }
        }
        let var = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
        };
        assert!(var(&f2) > 0.0, "imaginary field channel is degenerate");
        assert!(var(&f4) > 0.0, "imaginary derivative channel is degenerate");
    }

    #[test]
    fn doubling_alpha_increases_magnitudes() {
        let cfg = SurrogateConfig::default();
        let mut cfg2 = cfg.clone();
        cfg2.alpha = 2.0 * cfg.alpha;
        for (u, v) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.7)] {
            let a = ft_features(u, v, &cfg);
            let b = ft_features(u, v, &cfg2);
            for (x, y) in a.as_array().into_iter().zip(b.as_array()) {
                if x != 0.0 {
                    assert!(y.abs() > x.abs());
                }
            }
        }
    }

    #[test]
    fn blend_midpoint_and_limits() {
        let wepe = [1.0, 2.0, 3.0, 4.0];
        let learned = [5.0, 6.0, 7.0, 8.0];
        let mid = hybrid_blend(&wepe, &learned, 0.0).unwrap();
        assert_eq!(mid, vec![3.0, 4.0, 5.0, 6.0]);
        assert_eq!(hybrid_blend(&wepe, &learned, -1e9).unwrap(), learned.to_vec());
        assert_eq!(hybrid_blend(&wepe, &learned, 1e9).unwrap(), wepe.to_vec());
        assert_eq!(
            hybrid_blend(&wepe, &learned, f64::NEG_INFINITY).unwrap(),
            learned.to_vec()
        );
    }

    #[test]
    fn finetune_projection_offset() {
        let cfg = SurrogateConfig::default();
        let mut data = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                data.push(ft_features((j as f64 + 0.5) / 4.0, (i as f64 + 0.5) / 4.0, &cfg));
            }
        }
        let field = FeatureField::new(4, 4, data);
        let spec = ProjectionSpec::seeded(8, 3);
        let plain = project_finetune(&field, &spec, &[]).unwrap();
        let off = vec![0.5; 8];
        let shifted = project_finetune(&field, &spec, &off).unwrap();
        for (a, b) in plain.as_slice().iter().zip(shifted.as_slice()) {
            assert!((b - a - 0.5).abs() < 1e-12);
        }
        assert!(project_finetune(&field, &spec, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn blend_shape_mismatch() {
        assert!(matches!(
            hybrid_blend(&[1.0, 2.0], &[1.0], 0.0),
            Err(SurrogateError::ShapeMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn omega3_parameterization_positive_floor() {
        let cfg = SurrogateConfig::default();
        assert!((cfg.omega3_prime() - LEMNISCATIC_OMEGA1).abs() < 1e-10);
        let mut low = cfg;
        low.omega3_raw = -1e3;
        assert!(low.omega3_prime() >= OMEGA3_SOFTPLUS_OFFSET);
    }
}
