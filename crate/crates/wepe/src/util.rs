//! Small numeric helpers shared across the crate.

/// Numerically stable softplus, `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`]: returns `x` such that `softplus(x) = y`. Requires `y > 0`.
pub fn inverse_softplus(y: f64) -> f64 {
    assert!(y > 0.0, "inverse_softplus requires a positive argument");
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Logistic sigmoid, `1 / (1 + exp(-x))`.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Deterministic low-discrepancy sequence over the unit square (additive
/// recurrence on the plastic constant). Successive calls to `next` cover
/// (0,1)^2 quasi-uniformly.
#[derive(Debug, Clone)]
pub struct QuasiRandom2 {
    x: f64,
    y: f64,
}

// Plastic constant g: inverse powers drive the 2D Kronecker sequence.
const PLASTIC: f64 = 1.324_717_957_244_746;

impl QuasiRandom2 {
    pub fn new() -> Self {
        Self { x: 0.5, y: 0.5 }
    }

    pub fn next_point(&mut self) -> (f64, f64) {
        self.x = (self.x + 1.0 / PLASTIC) % 1.0;
        self.y = (self.y + 1.0 / (PLASTIC * PLASTIC)) % 1.0;
        (self.x, self.y)
    }
}

impl Default for QuasiRandom2 {
    fn default() -> Self {
        Self::new()
    }
}

/// Two-pass Pearson correlation coefficient.
///
/// Means first, then centered products; avoids the catastrophic cancellation
/// of the one-pass `E[xy] - E[x]E[y]` form. Returns NaN for degenerate
/// (constant) inputs or mismatched/short slices.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}
