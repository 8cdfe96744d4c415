//! Period lattice definition, enumeration and geometry.
//!
//! The lattice is Λ = {2mω₁ + 2nω₃ : m, n ∈ Z} with ω₁ real and ω₃ = i·ω₃′
//! purely imaginary, i.e. a rectangular lattice. All summation code consumes
//! the modulus-sorted enumeration produced here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Real half-period of the square lattice whose elliptic invariants are
/// (g₂, g₃) = (1/4, 0): the lemniscate constant Γ²(1/4)/(2√(2π)).
pub const LEMNISCATIC_OMEGA1: f64 = 2.62205755429212;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid lattice parameter: {0}")]
    InvalidParameter(String),
}

/// Half-periods, elliptic invariants, truncation window and numerical-safety
/// constants for one lattice.
///
/// Serializes to/from JSON with exactly these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    /// Real half-period ω₁ (> 0).
    pub omega1: f64,
    /// Imaginary half-period magnitude ω₃′ (> 0), so ω₃ = i·ω₃′.
    pub omega3_im: f64,
    /// Elliptic invariant g₂ of the differential equation.
    pub g2: f64,
    /// Elliptic invariant g₃.
    pub g3: f64,
    /// Truncation window half-width M ≥ 1 along the real period direction.
    pub trunc_m: u32,
    /// Truncation window half-width N ≥ 1 along the imaginary direction.
    pub trunc_n: u32,
    /// Pole threshold ε.
    pub epsilon: f64,
    /// Pole multiplier κ; points within κ·ε of the lattice are substituted.
    pub kappa: f64,
    /// Pole substitute constant C_large.
    pub c_large: f64,
    /// Per-term clip bound M_clip for the summation.
    pub m_clip: f64,
}

impl LatticeParams {
    /// The lemniscatic preset: square lattice at the lemniscate constant,
    /// invariants (g₂, g₃) = (1/4, 0), truncation M = N = 12 and default
    /// safety constants.
    ///
    /// Note g₂ = 1/4 exactly: for Λ = {2mω₁ + 2nω₃} with ω₁ = ω₃′ =
    /// 2.62205755429212 one has g₂ = 60 Σ′ ω⁻⁴ = 1/4 and g₃ = 140 Σ′ ω⁻⁶ = 0
    /// (see [`lattice_invariants`]). The unit-invariant square lattice
    /// g₂ = 1 would instead have half-period Γ²(1/4)/(4√π) ≈ 1.854.
    pub fn lemniscatic() -> Self {
        Self {
            omega1: LEMNISCATIC_OMEGA1,
            omega3_im: LEMNISCATIC_OMEGA1,
            g2: 0.25,
            g3: 0.0,
            trunc_m: 12,
            trunc_n: 12,
            epsilon: 1e-8,
            kappa: 15.0,
            c_large: 1e3,
            m_clip: 1e6,
        }
    }

    /// Same lattice with a different truncation window.
    pub fn with_truncation(mut self, m: u32, n: u32) -> Self {
        self.trunc_m = m;
        self.trunc_n = n;
        self
    }

    /// Distance below which an evaluation point counts as a pole.
    pub fn pole_guard_radius(&self) -> f64 {
        self.kappa * self.epsilon
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let positive = [
            ("omega1", self.omega1),
            ("omega3_im", self.omega3_im),
            ("epsilon", self.epsilon),
            ("kappa", self.kappa),
            ("c_large", self.c_large),
            ("m_clip", self.m_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LatticeError::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.trunc_m < 1 || self.trunc_n < 1 {
            return Err(LatticeError::InvalidParameter(
                "trunc_m and trunc_n must be >= 1".into(),
            ));
        }
        if !self.g2.is_finite() || !self.g3.is_finite() {
            return Err(LatticeError::InvalidParameter("g2/g3 must be finite".into()));
        }
        Ok(())
    }
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self::lemniscatic()
    }
}

/// All nonzero lattice points ω = 2mω₁ + 2niω₃′ with |m| ≤ M, |n| ≤ N,
/// sorted ascending by modulus, ties broken by (m, n) lexicographic order.
///
/// The count is (2M+1)(2N+1) − 1 and the set is closed under negation.
pub fn enumerate_sorted_lattice(params: &LatticeParams) -> Vec<Complex64> {
    let m = params.trunc_m as i64;
    let n = params.trunc_n as i64;
    let mut pts = Vec::with_capacity(((2 * m + 1) * (2 * n + 1) - 1) as usize);
    for mi in -m..=m {
        for ni in -n..=n {
            if mi == 0 && ni == 0 {
                continue;
            }
            let w = Complex64::new(2.0 * mi as f64 * params.omega1, 2.0 * ni as f64 * params.omega3_im);
            pts.push((w.norm(), mi, ni, w));
        }
    }
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    pts.into_iter().map(|(_, _, _, w)| w).collect()
}

/// Reduce `z` into the origin-centered fundamental cell
/// [−ω₁, ω₁) × [−ω₃′, ω₃′). Exact for rectangular lattices.
pub fn reduce_to_cell(z: Complex64, params: &LatticeParams) -> Complex64 {
    let px = 2.0 * params.omega1;
    let py = 2.0 * params.omega3_im;
    let x = z.re - ((z.re + params.omega1) / px).floor() * px;
    let y = z.im - ((z.im + params.omega3_im) / py).floor() * py;
    Complex64::new(x, y)
}

/// Distance from `z` to the nearest lattice point.
///
/// Within the origin-centered cell the nearest lattice point is the origin
/// (componentwise, |x − 2mω₁| ≥ ω₁ ≥ |x| for m ≠ 0), so this is |z| after
/// reduction; exact for rectangular lattices.
pub fn nearest_lattice_distance(z: Complex64, params: &LatticeParams) -> f64 {
    reduce_to_cell(z, params).norm()
}

/// Elliptic invariants of the lattice computed directly from the defining
/// sums g₂ = 60 Σ′ ω⁻⁴, g₃ = 140 Σ′ ω⁻⁶ over a window of half-width
/// `window` cells. The ω⁻⁴ tail decays like 1/R², so window ≈ 200 gives
/// ~6 significant digits.
pub fn lattice_invariants(params: &LatticeParams, window: u32) -> (f64, f64) {
    let big = params.clone().with_truncation(window, window);
    let mut s4 = Complex64::new(0.0, 0.0);
    let mut s6 = Complex64::new(0.0, 0.0);
    for w in enumerate_sorted_lattice(&big).into_iter().rev() {
        let w2 = w * w;
        let w4 = w2 * w2;
        s4 += w4.inv();
        s6 += (w4 * w2).inv();
    }
    (60.0 * s4.re, 140.0 * s6.re)
}
