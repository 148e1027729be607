//! The weighted Poincaré inequality on [0, ℓ] and the 1D composite
//! Gauss-Legendre quadrature behind it.

use super::GeometryError;
use serde::Serialize;

/// 16-point Gauss-Legendre nodes/weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Composite Gauss-Legendre quadrature, 32 nodes per unit length by default
/// (two 16-point panels per unit).
pub fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for k in 0..8 {
            total += GL16_W[k] * (f(mid + half * GL16_X[k]) + f(mid - half * GL16_X[k]));
        }
    }
    total * (b - a) / (2.0 * panels as f64)
}

pub fn default_panels(len: f64) -> usize {
    ((len * 2.0).ceil() as usize).max(2)
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// lhs = ∫₀^ℓ φ²/(R+t)^{2+δ} dt against rhs = 4/((1+δ)² R^{2δ}) ∫₀^ℓ φ′² dt.
/// `phi` must vanish at ℓ; `dphi` is its derivative.
pub fn weighted_poincare_check(
    r: f64,
    delta: f64,
    len: f64,
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
) -> Result<PoincareReport, GeometryError> {
    if r <= 0.0 || delta <= 0.0 || len <= 0.0 {
        return Err(GeometryError::Admissibility(format!(
            "need R, δ, ℓ > 0 (got {r}, {delta}, {len})"
        )));
    }
    let tail = phi(len).abs();
    if tail > 1e-10 * (1.0 + phi(0.0).abs()) {
        return Err(GeometryError::Admissibility(format!("φ(ℓ) = {tail} ≠ 0")));
    }
    let panels = default_panels(len);
    let lhs = integrate(0.0, len, panels, |t| {
        let p = phi(t);
        p * p / (r + t).powf(2.0 + delta)
    });
    let grad = integrate(0.0, len, panels, |t| {
        let dp = dphi(t);
        dp * dp
    });
    let rhs = 4.0 / ((1.0 + delta) * (1.0 + delta) * r.powf(2.0 * delta)) * grad;
    let tol = 1e-12 * (lhs.abs() + rhs.abs()) + 1e-300;
    Ok(PoincareReport { lhs, rhs, pass: lhs <= rhs + tol })
}
