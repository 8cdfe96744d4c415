//! Weierstrass ℘ and ℘′ by truncated, modulus-ordered lattice summation,
//! plus the Laurent-series oracle, the differential-equation residual, the
//! addition formula and the a-priori truncation bound.

use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{enumerate_sorted_lattice, reduce_to_cell, LatticeParams};

/// Default floor on |℘(z₁) − ℘(z₂)| below which the addition formula is
/// treated as degenerate (z₁ ≡ ±z₂ mod Λ).
pub const DEFAULT_DEGENERACY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum WpError {
    #[error("degenerate arguments: |wp(z1) - wp(z2)| = {difference:e} is below the floor {floor:e}")]
    DegenerateArguments { difference: f64, floor: f64 },
    #[error("evaluation point too close to the lattice: distance {distance:e} < required {required:e}")]
    PoleProximity { distance: f64, required: f64 },
    #[error("Laurent expansion undefined at z = 0")]
    LaurentAtOrigin,
    #[error("|z| = {modulus} outside the Laurent radius {radius}")]
    LaurentOutOfRadius { modulus: f64, radius: f64 },
    #[error("n_terms must be in 1..=4, got {0}")]
    LaurentBadTermCount(u32),
}

/// Result of one ℘ or ℘′ evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpValue {
    pub value: Complex64,
    /// True when the point fell inside the pole guard and `value` is the
    /// substitute constant C_large.
    pub is_pole_substituted: bool,
    /// A-priori truncation bound 2·C_Λ·|z*|/R_max for this evaluation.
    pub trunc_bound: f64,
}

/// Reusable evaluator: owns the sorted point set so batch work does not
/// re-enumerate the lattice per call.
#[derive(Debug, Clone)]
pub struct WpEvaluator {
    params: LatticeParams,
    points: Vec<Complex64>,
    r_max: f64,
}

fn clip(t: Complex64, m_clip: f64) -> Complex64 {
    let a = t.norm();
    if a > m_clip {
        t * (m_clip / a)
    } else {
        t
    }
}

impl WpEvaluator {
    pub fn new(params: &LatticeParams) -> Self {
        let points = enumerate_sorted_lattice(params);
        let r_max = points.last().map(|w| w.norm()).unwrap_or(0.0);
        Self {
            params: params.clone(),
            points,
            r_max,
        }
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    /// Largest modulus in the enumerated point set.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// A-priori truncation bound 2·C_Λ·|z|/R_max with C_Λ = 2π/(2ω₁)².
    pub fn truncation_bound(&self, z: Complex64) -> f64 {
        let a = 2.0 * self.params.omega1;
        let c_lambda = 2.0 * std::f64::consts::PI / (a * a);
        2.0 * c_lambda * z.norm() / self.r_max
    }

    fn pole_value(&self, zr: Complex64) -> WpValue {
        WpValue {
            value: Complex64::new(self.params.c_large, 0.0),
            is_pole_substituted: true,
            trunc_bound: self.truncation_bound(zr),
        }
    }

    /// ℘(z): reduce into the origin-centered cell, then accumulate the
    /// modulus-sorted terms 1/(z−ω)² − 1/ω² after the leading 1/z², each
    /// clipped to M_clip.
    pub fn wp(&self, z: Complex64) -> WpValue {
        let zr = reduce_to_cell(z, &self.params);
        if zr.norm() < self.params.pole_guard_radius() {
            return self.pole_value(zr);
        }
        let m_clip = self.params.m_clip;
        let mut acc = clip((zr * zr).inv(), m_clip);
        for &w in &self.points {
            let d = zr - w;
            let t = (d * d).inv() - (w * w).inv();
            acc += clip(t, m_clip);
        }
        WpValue {
            value: acc,
            is_pole_substituted: false,
            trunc_bound: self.truncation_bound(zr),
        }
    }

    /// ℘′(z): same reduction, pole and clipping policy over the same sorted
    /// point set, summing −2/(z−ω)³ after the leading −2/z³.
    pub fn wp_prime(&self, z: Complex64) -> WpValue {
        let zr = reduce_to_cell(z, &self.params);
        if zr.norm() < self.params.pole_guard_radius() {
            return self.pole_value(zr);
        }
        let m_clip = self.params.m_clip;
        let mut acc = clip(-2.0 * (zr * zr * zr).inv(), m_clip);
        for &w in &self.points {
            let d = zr - w;
            acc += clip(-2.0 * (d * d * d).inv(), m_clip);
        }
        WpValue {
            value: acc,
            is_pole_substituted: false,
            trunc_bound: self.truncation_bound(zr),
        }
    }

    /// Relative residual of the differential equation
    /// (℘′)² = 4℘³ − g₂℘ − g₃, as |(℘′)² − 4℘³ + g₂℘ + g₃| / (1 + |℘|³).
    ///
    /// Rejects points closer to the lattice than 10·κ·ε.
    pub fn check_differential_eq(&self, z: Complex64) -> Result<f64, WpError> {
        let dist = crate::lattice::nearest_lattice_distance(z, &self.params);
        let required = 10.0 * self.params.pole_guard_radius();
        if dist < required {
            return Err(WpError::PoleProximity { distance: dist, required });
        }
        let p = self.wp(z).value;
        let dp = self.wp_prime(z).value;
        let lhs = dp * dp;
        let rhs = 4.0 * p * p * p - self.params.g2 * p - Complex64::new(self.params.g3, 0.0);
        Ok((lhs - rhs).norm() / (1.0 + p.norm().powi(3)))
    }

    /// ℘(z₁ + z₂) from the addition formula
    /// −℘(z₁) − ℘(z₂) + ¼((℘′(z₁) − ℘′(z₂)) / (℘(z₁) − ℘(z₂)))².
    pub fn wp_addition_with_floor(
        &self,
        z1: Complex64,
        z2: Complex64,
        floor: f64,
    ) -> Result<Complex64, WpError> {
        let guard = self.params.pole_guard_radius();
        for z in [z1, z2] {
            let dist = crate::lattice::nearest_lattice_distance(z, &self.params);
            if dist < guard {
                return Err(WpError::PoleProximity { distance: dist, required: guard });
            }
        }
        let p1 = self.wp(z1).value;
        let p2 = self.wp(z2).value;
        let dp1 = self.wp_prime(z1).value;
        let dp2 = self.wp_prime(z2).value;
        addition_rhs((p1, dp1), (p2, dp2), floor)
    }

    pub fn wp_addition(&self, z1: Complex64, z2: Complex64) -> Result<Complex64, WpError> {
        self.wp_addition_with_floor(z1, z2, DEFAULT_DEGENERACY_FLOOR)
    }
}

fn addition_rhs(
    (p1, dp1): (Complex64, Complex64),
    (p2, dp2): (Complex64, Complex64),
    floor: f64,
) -> Result<Complex64, WpError> {
    let denom = p1 - p2;
    if denom.norm() < floor {
        return Err(WpError::DegenerateArguments { difference: denom.norm(), floor });
    }
    let slope = (dp1 - dp2) / denom;
    Ok(-p1 - p2 + 0.25 * slope * slope)
}

/// ℘(z_j − z_i) recovered from the two absolute pairs (℘, ℘′) at z_i and
/// z_j via the addition formula with (℘(−z_i), ℘′(−z_i)) = (℘(z_i), −℘′(z_i)):
/// −℘(z_j) − ℘(z_i) + ¼((℘′(z_j) + ℘′(z_i)) / (℘(z_j) − ℘(z_i)))².
pub fn relative_wp_with_floor(
    p_i: (Complex64, Complex64),
    p_j: (Complex64, Complex64),
    floor: f64,
) -> Result<Complex64, WpError> {
    addition_rhs((p_j.0, p_j.1), (p_i.0, -p_i.1), floor)
}

pub fn relative_wp(
    p_i: (Complex64, Complex64),
    p_j: (Complex64, Complex64),
) -> Result<Complex64, WpError> {
    relative_wp_with_floor(p_i, p_j, DEFAULT_DEGENERACY_FLOOR)
}

/// Partial sum of the Laurent expansion
/// ℘(z) = 1/z² + g₂/20·z² + g₃/28·z⁴ + g₂²/1200·z⁶ + ···,
/// with `n_terms` of the listed terms (4 reaches z⁶). Valid for
/// 0 < |z| ≤ 0.25·min(2ω₁, 2ω₃′).
pub fn wp_laurent(z: Complex64, params: &LatticeParams, n_terms: u32) -> Result<Complex64, WpError> {
    if !(1..=4).contains(&n_terms) {
        return Err(WpError::LaurentBadTermCount(n_terms));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(WpError::LaurentAtOrigin);
    }
    let radius = 0.25 * (2.0 * params.omega1).min(2.0 * params.omega3_im);
    if r > radius {
        return Err(WpError::LaurentOutOfRadius { modulus: r, radius });
    }
    let z2 = z * z;
    let mut acc = z2.inv();
    if n_terms >= 2 {
        acc += params.g2 / 20.0 * z2;
    }
    if n_terms >= 3 {
        acc += params.g3 / 28.0 * z2 * z2;
    }
    if n_terms >= 4 {
        acc += params.g2 * params.g2 / 1200.0 * z2 * z2 * z2;
    }
    Ok(acc)
}

// Free-function forms for one-off evaluations.

pub fn wp(z: Complex64, params: &LatticeParams) -> WpValue {
    WpEvaluator::new(params).wp(z)
}

pub fn wp_prime(z: Complex64, params: &LatticeParams) -> WpValue {
    WpEvaluator::new(params).wp_prime(z)
}

pub fn check_differential_eq(z: Complex64, params: &LatticeParams) -> Result<f64, WpError> {
    WpEvaluator::new(params).check_differential_eq(z)
}

pub fn wp_addition(
    z1: Complex64,
    z2: Complex64,
    params: &LatticeParams,
) -> Result<Complex64, WpError> {
    WpEvaluator::new(params).wp_addition(z1, z2)
}

pub fn truncation_bound(z: Complex64, params: &LatticeParams) -> f64 {
    WpEvaluator::new(params).truncation_bound(z)
}
