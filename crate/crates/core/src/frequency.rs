//! Frequency diagnostics: the boundary mass X(r), the energy pairing E(r) in
//! surface form, the weighted frequency function F(r), the derivative
//! identity, decay-exponent fits and the L² classification.
//!
//! Level sets: for the flat metric the geodesic distance spheres to S_{R₀}
//! are exactly the coordinate spheres of radius r + R₀, which is how the
//! quadrature realizes them; for mildly perturbed metrics the same coordinate
//! spheres are used with the metric area element, with the geodesic-level-set
//! path (geometry::DistanceField) available as the cross-check reference.

use crate::forms::{area_density_ratio, OneForm3, SphereQuadrature};
use crate::geometry::{ChartPoint3, GeometryError, MetricField3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrequencyError {
    #[error("schedule must be strictly increasing and positive")]
    BadSchedule,
    #[error("frequency undefined: X(r) = {x} at r = {r} (either ω ≡ 0 or the dichotomy radius is not reached)")]
    FrequencyUndefined { r: f64, x: f64 },
    #[error("window [{0}, {1}] lies outside the schedule")]
    WindowOutsideSchedule(f64, f64),
    #[error("monotonicity scan requires k > empirical C₂ ({k} ≤ {c2})")]
    WeightTooSmall { k: f64, c2: f64 },
    #[error("schedule too short for centered 4-point differencing")]
    ScheduleTooShort,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Forms(#[from] crate::forms::FormsError),
}

/// Configuration of the diagnostics run.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyConfig {
    /// base sphere radius R₀ (r is distance from S_{R₀})
    pub r0: f64,
    /// decay exponent δ of the metric
    pub delta: f64,
    /// weight constant k in F; defaults to 2·max(C₂, 1) once C₂ is measured
    pub k: f64,
    /// strictly increasing r schedule
    pub schedule: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl FrequencyConfig {
    pub fn geometric(r0: f64, delta: f64, k: f64, r_lo: f64, r_hi: f64, ratio: f64) -> Self {
        let mut schedule = vec![r_lo];
        while *schedule.last().unwrap() < r_hi {
            let next = schedule.last().unwrap() * ratio;
            schedule.push(next);
        }
        FrequencyConfig { r0, delta, k, schedule, n_theta: 64, n_phi: 128 }
    }

    pub fn validate(&self) -> Result<(), FrequencyError> {
        if self.schedule.is_empty()
            || self.schedule[0] <= 0.0
            || self.schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(FrequencyError::BadSchedule);
        }
        Ok(())
    }
}

/// Sampled diagnostics over the schedule. `f` and `dx_dr` entries are None
/// where undefined (X = 0, or differencing margins).
#[derive(Clone, Debug, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub beta_pairing: Vec<f64>,
    pub f: Vec<Option<f64>>,
    pub dx_dr: Vec<Option<f64>>,
    pub r0: f64,
    pub delta: f64,
    pub k: f64,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// X(r) = (r+R₀)⁻² ∫_{S_r} |ω|²_g dσ_g.
pub fn compute_x(
    omega: &OneForm3,
    metric: &MetricField3,
    cfg: &FrequencyConfig,
    r: f64,
) -> Result<f64, FrequencyError> {
    let rho = r + cfg.r0;
    let quad = SphereQuadrature::new(rho, cfg.n_theta, cfg.n_phi);
    let mut total = 0.0;
    for (p, w) in &quad.nodes {
        let mjet = metric.jet(*p)?;
        let jet = omega.jet(*p);
        let mut n2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                n2 += mjet.ginv[i][j] * (jet.w[i] * jet.w[j].conj()).re;
            }
        }
        total += w * area_density_ratio(metric, *p)? * n2;
    }
    Ok(total / (rho * rho))
}

/// Surface form of E and the raw β-pairing ∫ g(β, ω) dσ:
/// E(r) = −(r+R₀)⁻³ ∫_{S_r} g(β, ω) dσ with β_j = (r+R₀) n^i ∇_i ω_j,
/// n the unit g-normal of the sphere (the gradient of the distance function).
pub fn compute_e_surface(
    omega: &OneForm3,
    metric: &MetricField3,
    cfg: &FrequencyConfig,
    r: f64,
) -> Result<(f64, f64), FrequencyError> {
    let rho = r + cfg.r0;
    let quad = SphereQuadrature::new(rho, cfg.n_theta, cfg.n_phi);
    let mut pairing = 0.0;
    for (p, w) in &quad.nodes {
        let mjet = metric.jet(*p)?;
        let jet = omega.jet(*p);
        // unit g-normal (raised): n^i = g^{ij} ∂_j ρ / |∇ρ|_g
        let pr = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let drho = [p[0] / pr, p[1] / pr, p[2] / pr];
        let mut nup = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                nup[i] += mjet.ginv[i][j] * drho[j];
            }
        }
        let mut norm2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                norm2 += mjet.g[i][j] * nup[i] * nup[j];
            }
        }
        let ninv = norm2.sqrt().recip();
        for v in nup.iter_mut() {
            *v *= ninv;
        }
        // β_j = ρ n^i ∇_i ω_j with the covariant derivative
        let mut beta = [Complex64::new(0.0, 0.0); 3];
        for j in 0..3 {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                let mut cov = jet.d1[i][j];
                for k in 0..3 {
                    cov -= mjet.gamma[k][i][j] * jet.w[k];
                }
                s += nup[i] * cov;
            }
            beta[j] = rho * s;
        }
        // Hermitian pairing Re g^{jk} β_j ω̄_k (real fields: plain pairing)
        let mut pair = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                pair += mjet.ginv[j][k] * (beta[j] * jet.w[k].conj()).re;
            }
        }
        pairing += w * area_density_ratio(metric, *p)? * pair;
    }
    Ok((-pairing / (rho * rho * rho), pairing))
}

/// F(r) = (r+R₀) exp(2k/(r+R₀)^δ) E(r) / X(r); errors when X(r) vanishes.
pub fn compute_f(x: f64, e: f64, cfg: &FrequencyConfig, r: f64) -> Result<f64, FrequencyError> {
    if x <= 0.0 {
        return Err(FrequencyError::FrequencyUndefined { r, x });
    }
    let rho = r + cfg.r0;
    Ok(rho * (2.0 * cfg.k / rho.powf(cfg.delta)).exp() * e / x)
}

/// Build the full profile over the schedule by quadrature.
pub fn sample_profile(
    omega: &OneForm3,
    metric: &MetricField3,
    cfg: &FrequencyConfig,
) -> Result<RadialProfile, FrequencyError> {
    cfg.validate()?;
    let rows: Result<Vec<(f64, f64, f64)>, FrequencyError> = cfg
        .schedule
        .par_iter()
        .map(|&r| {
            let x = compute_x(omega, metric, cfg, r)?;
            let (e, pairing) = compute_e_surface(omega, metric, cfg, r)?;
            Ok((x, e, pairing))
        })
        .collect();
    let rows = rows?;
    let x: Vec<f64> = rows.iter().map(|t| t.0).collect();
    let e: Vec<f64> = rows.iter().map(|t| t.1).collect();
    let beta_pairing: Vec<f64> = rows.iter().map(|t| t.2).collect();
    let dx_dr = stencil_derivatives(&cfg.schedule, &x);
    let f = x
        .iter()
        .zip(&e)
        .zip(&cfg.schedule)
        .map(|((&xv, &ev), &r)| compute_f(xv, ev, cfg, r).ok())
        .collect();
    Ok(RadialProfile {
        r: cfg.schedule.clone(),
        x,
        e,
        beta_pairing,
        f,
        dx_dr,
        r0: cfg.r0,
        delta: cfg.delta,
        k: cfg.k,
    })
}

/// Analytic profile generator: bypasses quadrature entirely so the
/// profile-level operations can be tested in isolation. Optional analytic
/// dX/dr; when absent the same 4-point stencil as the sampled path is used.
pub fn synth_profile(
    cfg: &FrequencyConfig,
    x_fn: impl Fn(f64) -> f64,
    e_fn: impl Fn(f64) -> f64,
    dx_fn: Option<&dyn Fn(f64) -> f64>,
) -> Result<RadialProfile, FrequencyError> {
    cfg.validate()?;
    let x: Vec<f64> = cfg.schedule.iter().map(|&r| x_fn(r + cfg.r0)).collect();
    let e: Vec<f64> = cfg.schedule.iter().map(|&r| e_fn(r + cfg.r0)).collect();
    let dx_dr = match dx_fn {
        Some(df) => cfg.schedule.iter().map(|&r| Some(df(r + cfg.r0))).collect(),
        None => stencil_derivatives(&cfg.schedule, &x),
    };
    let f = x
        .iter()
        .zip(&e)
        .zip(&cfg.schedule)
        .map(|((&xv, &ev), &r)| compute_f(xv, ev, cfg, r).ok())
        .collect();
    Ok(RadialProfile {
        r: cfg.schedule.clone(),
        x,
        e,
        beta_pairing: vec![0.0; cfg.schedule.len()],
        f,
        dx_dr,
        r0: cfg.r0,
        delta: cfg.delta,
        k: cfg.k,
    })
}

/// Centered 4-point Lagrange derivative on the (nonuniform) schedule, nodes
/// {i−2, i−1, i+1, i+2}; None at the margins.
fn stencil_derivatives(r: &[f64], x: &[f64]) -> Vec<Option<f64>> {
    let n = r.len();
    let mut out = vec![None; n];
    if n < 5 {
        return out;
    }
    for i in 2..n - 2 {
        let pts = [i - 2, i - 1, i + 1, i + 2];
        let xs: Vec<f64> = pts.iter().map(|&q| r[q]).collect();
        let ys: Vec<f64> = pts.iter().map(|&q| x[q]).collect();
        let mut d = 0.0;
        for m in 0..4 {
            let others: Vec<f64> = (0..4).filter(|&q| q != m).map(|q| xs[q]).collect();
            let denom: f64 = others.iter().map(|o| xs[m] - o).product();
            let mut num = 0.0;
            for skip in 0..3 {
                let mut term = 1.0;
                for (q, o) in others.iter().enumerate() {
                    if q != skip {
                        term *= r[i] - o;
                    }
                }
                num += term;
            }
            d += ys[m] * num / denom;
        }
        out[i] = Some(d);
    }
    out
}

/// Per-radius report of the derivative identity |X′ + 2E| vs C₂X/(r+R₀)^{1+δ}.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeIdentityReport {
    /// (r, ratio) with ratio = |X′+2E|·(r+R₀)^{1+δ}/X
    pub ratios: Vec<(f64, f64)>,
    /// sup of the ratios = empirical C₂, exported as the k threshold
    pub c2: f64,
}

pub fn check_derivative_identity(
    profile: &RadialProfile,
) -> Result<DerivativeIdentityReport, FrequencyError> {
    let mut ratios = Vec::new();
    let mut c2 = 0.0f64;
    let mut any = false;
    for i in 0..profile.len() {
        let Some(xp) = profile.dx_dr[i] else { continue };
        any = true;
        let x = profile.x[i];
        if x <= 0.0 {
            return Err(FrequencyError::FrequencyUndefined { r: profile.r[i], x });
        }
        let rho = profile.r[i] + profile.r0;
        let ratio = (xp + 2.0 * profile.e[i]).abs() * rho.powf(1.0 + profile.delta) / x;
        c2 = c2.max(ratio);
        ratios.push((profile.r[i], ratio));
    }
    if !any {
        return Err(FrequencyError::ScheduleTooShort);
    }
    Ok(DerivativeIdentityReport { ratios, c2 })
}

/// Least-squares slope of log X against log(r+R₀) over the window,
/// reported as p = −slope/2 with the max-abs fit residual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub p: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

pub fn fit_decay_exponent(
    profile: &RadialProfile,
    window: (f64, f64),
) -> Result<DecayFit, FrequencyError> {
    let sel: Vec<usize> = (0..profile.len())
        .filter(|&i| profile.r[i] >= window.0 && profile.r[i] <= window.1)
        .collect();
    if sel.len() < 3 {
        return Err(FrequencyError::WindowOutsideSchedule(window.0, window.1));
    }
    for &i in &sel {
        if profile.x[i] <= 0.0 {
            return Err(FrequencyError::FrequencyUndefined { r: profile.r[i], x: profile.x[i] });
        }
    }
    let xs: Vec<f64> = sel.iter().map(|&i| (profile.r[i] + profile.r0).ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|&i| profile.x[i].ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| (b - slope * a - intercept).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit { p: -slope / 2.0, residual, window, points: sel.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum L2Class {
    InL2Consistent,
    NotInL2,
    Inconclusive,
}

/// Classification record with the evidence the verdict is based on.
#[derive(Debug, Clone, Serialize)]
pub struct L2Classification {
    pub class: L2Class,
    pub p: f64,
    /// R² of the linear fit of the partial sums of ∫ (r+R₀)² X dr against r
    pub growth_r2: f64,
    /// last-quarter increment over total increment; small = saturated
    pub saturation_fraction: f64,
    pub partial_sums: Vec<f64>,
    /// the paper-consistent note for the non-L² verdict
    pub note: String,
}

/// Trapezoid partial sums of ∫ (r+R₀)² X dr over the schedule plus the
/// integral test: p < 3/2 with linearly growing sums ⇒ not in L²;
/// p > 3/2 with saturating sums ⇒ consistent with L²; otherwise inconclusive.
pub fn classify_l2(profile: &RadialProfile, fit: &DecayFit) -> L2Classification {
    let n = profile.len();
    let mut sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    sums.push(0.0);
    for i in 1..n {
        let rho0 = profile.r[i - 1] + profile.r0;
        let rho1 = profile.r[i] + profile.r0;
        let f0 = rho0 * rho0 * profile.x[i - 1];
        let f1 = rho1 * rho1 * profile.x[i];
        acc += 0.5 * (f0 + f1) * (profile.r[i] - profile.r[i - 1]);
        sums.push(acc);
    }
    // linear fit of sums against r
    let xs = &profile.r;
    let nf = n as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = sums.iter().sum();
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let sxy: f64 = xs.iter().zip(&sums).map(|(a, b)| a * b).sum();
    let syy: f64 = sums.iter().map(|v| v * v).sum();
    let cov = nf * sxy - sx * sy;
    let growth_r2 = if syy * nf - sy * sy > 0.0 {
        cov * cov / ((nf * sxx - sx * sx) * (nf * syy - sy * sy))
    } else {
        0.0
    };
    let total = sums[n - 1] - sums[0];
    let q3 = sums[(3 * (n - 1)) / 4];
    let saturation_fraction = if total > 0.0 { (sums[n - 1] - q3) / total } else { 0.0 };
    let saturated = saturation_fraction < 0.20;
    let growing_linearly = growth_r2 >= 0.99;
    let (class, note) = if fit.p < 1.5 && growing_linearly && !saturated {
        (
            L2Class::NotInL2,
            "partial sums grow linearly and the fitted exponent sits below 3/2; nonzero L² solutions would force F(∞) ≥ 3/2".to_string(),
        )
    } else if fit.p > 1.5 && saturated {
        (L2Class::InL2Consistent, "partial sums saturate and the exponent exceeds 3/2".to_string())
    } else {
        (L2Class::Inconclusive, "neither criterion is met decisively".to_string())
    };
    L2Classification {
        class,
        p: fit.p,
        growth_r2,
        saturation_fraction,
        partial_sums: sums,
        note,
    }
}

/// Monotonicity scan of F: list of (r, F, ΔF to the previous radius) plus the
/// increase locations. The monotonicity lemma assumes ω ∈ L²; off-hypothesis
/// exemplars get their behavior recorded, never asserted.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityScan {
    pub rows: Vec<(f64, f64, f64)>,
    pub violations: Vec<f64>,
    pub c2_used: f64,
}

pub fn monotonicity_scan(
    profile: &RadialProfile,
) -> Result<MonotonicityScan, FrequencyError> {
    let ident = check_derivative_identity(profile)?;
    if profile.k <= ident.c2 {
        return Err(FrequencyError::WeightTooSmall { k: profile.k, c2: ident.c2 });
    }
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut prev: Option<f64> = None;
    for i in 0..profile.len() {
        let Some(f) = profile.f[i] else {
            return Err(FrequencyError::FrequencyUndefined { r: profile.r[i], x: profile.x[i] });
        };
        let df = prev.map(|p| f - p).unwrap_or(0.0);
        if df > 0.0 && prev.is_some() {
            violations.push(profile.r[i]);
        }
        rows.push((profile.r[i], f, df));
        prev = Some(f);
    }
    Ok(MonotonicityScan { rows, violations, c2_used: ident.c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{field_by_name, make_ck_field};
    use crate::geometry::flat_metric;
    use approx::assert_relative_eq;

    fn small_cfg(r_lo: f64, r_hi: f64, ratio: f64) -> FrequencyConfig {
        let mut cfg = FrequencyConfig::geometric(0.0, 1.0, 2.0, r_lo, r_hi, ratio);
        cfg.n_theta = 32;
        cfg.n_phi = 64;
        cfg
    }

    #[test]
    fn x_of_zero_field_is_zero() {
        let m = flat_metric();
        let w = field_by_name("zero").unwrap();
        let cfg = small_cfg(1.0, 2.0, 1.2);
        assert_eq!(compute_x(&w, &m, &cfg, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn x_of_constant_dx_flat() {
        // ω = dx at r = 3, R₀ = 0: X = (1/9)·|dx|²·36π = 4π
        let m = flat_metric();
        let w = field_by_name("dx").unwrap();
        let cfg = small_cfg(1.0, 4.0, 1.2);
        let x = compute_x(&w, &m, &cfg, 3.0).unwrap();
        assert_relative_eq!(x, 4.0 * std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn e_surface_matches_radial_closed_form() {
        // radial test field ω = h(ρ) dρ with h(ρ) = 1/ρ:
        // |ω|² = 1/ρ², β = ρ h′(ρ) dρ, g(β,ω) = ρ h′h = −1/ρ²,
        // E = −ρ⁻³·(−1/ρ²·4πρ²) = 4π/ρ³
        let m = flat_metric();
        let w = OneForm3::real("radial", |p| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            [p[0] / r2, p[1] / r2, p[2] / r2]
        });
        let cfg = small_cfg(1.0, 6.0, 1.2);
        let (e, _) = compute_e_surface(&w, &m, &cfg, 5.0).unwrap();
        assert_relative_eq!(e, 4.0 * std::f64::consts::PI / 125.0, max_relative = 1e-10);
    }

    #[test]
    fn e_zero_for_zero_field() {
        let m = flat_metric();
        let w = field_by_name("zero").unwrap();
        let cfg = small_cfg(1.0, 2.0, 1.2);
        let (e, _) = compute_e_surface(&w, &m, &cfg, 1.5).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn f_guard_on_vanishing_x() {
        let cfg = small_cfg(1.0, 2.0, 1.2);
        assert!(matches!(
            compute_f(0.0, 1.0, &cfg, 1.5),
            Err(FrequencyError::FrequencyUndefined { .. })
        ));
    }

    #[test]
    fn synthetic_power_law_fit_exact() {
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 10.0, 100.0, 1.05);
        let profile = synth_profile(&cfg, |rho| 7.0 * rho.powf(-4.0), |_| 0.0, None).unwrap();
        let fit = fit_decay_exponent(&profile, (10.0, 100.0)).unwrap();
        assert!((fit.p - 2.0).abs() < 1e-6, "p = {}", fit.p);
    }

    #[test]
    fn synthetic_exact_e_gives_zero_identity_ratio() {
        // E = −X′/2 exactly with analytic derivatives: ratio vanishes
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 10.0, 100.0, 1.05);
        let profile = synth_profile(
            &cfg,
            |rho| rho.powf(-3.0),
            |rho| 1.5 * rho.powf(-4.0),
            Some(&|rho| -3.0 * rho.powf(-4.0)),
        )
        .unwrap();
        let rep = check_derivative_identity(&profile).unwrap();
        assert!(rep.c2 < 1e-12, "C2 = {}", rep.c2);
    }

    #[test]
    fn synthetic_interior_zero_raises_on_f() {
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 10.0, 100.0, 1.05);
        let profile = synth_profile(
            &cfg,
            |rho| (rho - 50.0).max(0.0) * rho.powf(-4.0),
            |_| 0.0,
            None,
        )
        .unwrap();
        // the dichotomy guard trips on the vanishing subinterval
        assert!(profile.f.iter().any(|f| f.is_none()));
        assert!(matches!(
            monotonicity_scan(&profile),
            Err(FrequencyError::FrequencyUndefined { .. })
        ));
    }

    #[test]
    fn classification_synthetic_families() {
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 50.0, 200.0, 1.05);
        // X = ρ⁻⁴: saturating sums, p = 2 > 3/2
        let p4 = synth_profile(&cfg, |rho| rho.powf(-4.0), |rho| 2.0 * rho.powf(-5.0), None).unwrap();
        let fit4 = fit_decay_exponent(&p4, (50.0, 200.0)).unwrap();
        let c4 = classify_l2(&p4, &fit4);
        assert_eq!(c4.class, L2Class::InL2Consistent, "evidence: {c4:?}");
        // X = ρ⁻³: borderline log growth
        let p3 = synth_profile(&cfg, |rho| rho.powf(-3.0), |rho| 1.5 * rho.powf(-4.0), None).unwrap();
        let fit3 = fit_decay_exponent(&p3, (50.0, 200.0)).unwrap();
        let c3 = classify_l2(&p3, &fit3);
        assert_eq!(c3.class, L2Class::Inconclusive, "evidence: {c3:?}");
        // X = ρ⁻²: linear growth, p = 1 < 3/2
        let p2 = synth_profile(&cfg, |rho| rho.powf(-2.0), |rho| rho.powf(-3.0), None).unwrap();
        let fit2 = fit_decay_exponent(&p2, (50.0, 200.0)).unwrap();
        let c2 = classify_l2(&p2, &fit2);
        assert_eq!(c2.class, L2Class::NotInL2, "evidence: {c2:?}");
    }

    #[test]
    fn window_outside_schedule_rejected() {
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 10.0, 50.0, 1.05);
        let profile = synth_profile(&cfg, |rho| rho.powf(-2.0), |_| 0.0, None).unwrap();
        assert!(fit_decay_exponent(&profile, (200.0, 400.0)).is_err());
    }

    #[test]
    fn synthetic_l2_profile_f_nonincreasing() {
        // X = ρ⁻⁴ with the identity-consistent E = −X′/2 = 2ρ⁻⁵ and zero
        // error term: F = 2·exp(2k/ρ^δ) is non-increasing
        let cfg = FrequencyConfig::geometric(0.0, 0.5, 2.0, 10.0, 100.0, 1.05);
        let profile = synth_profile(
            &cfg,
            |rho| rho.powf(-4.0),
            |rho| 2.0 * rho.powf(-5.0),
            Some(&|rho| -4.0 * rho.powf(-5.0)),
        )
        .unwrap();
        let scan = monotonicity_scan(&profile).unwrap();
        assert!(scan.violations.is_empty(), "violations at {:?}", scan.violations);
    }

    #[test]
    fn f_scaling_invariance() {
        // replacing ω by cω leaves F invariant pointwise
        let m = flat_metric();
        let w = make_ck_field(1.0, 1, 0).unwrap();
        let w2 = w.scaled(3.0);
        let mut cfg = small_cfg(8.0, 16.0, 1.1);
        cfg.r0 = 2.0;
        let p1 = sample_profile(&w, &m, &cfg).unwrap();
        let p2 = sample_profile(&w2, &m, &cfg).unwrap();
        for i in 0..p1.len() {
            assert_relative_eq!(p2.x[i], 9.0 * p1.x[i], max_relative = 1e-12);
            assert_relative_eq!(p2.e[i], 9.0 * p1.e[i], max_relative = 1e-12);
            if let (Some(f1), Some(f2)) = (p1.f[i], p2.f[i]) {
                assert_relative_eq!(f1, f2, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn ck_profile_brute_force_quadrature_oracle() {
        // dense lat-long trapezoid/Simpson oracle for X at a few radii
        let m = flat_metric();
        let w = make_ck_field(1.0, 1, 0).unwrap();
        let mut cfg = small_cfg(18.0, 22.0, 1.05);
        cfg.r0 = 2.0;
        cfg.n_theta = 64;
        cfg.n_phi = 128;
        let r = 20.0;
        let x = compute_x(&w, &m, &cfg, r).unwrap();
        // brute force: uniform θ Simpson × uniform φ trapezoid
        let rho = r + cfg.r0;
        let (nth, nph) = (2400usize, 400usize);
        let mut total = 0.0;
        for it in 0..=nth {
            let th = std::f64::consts::PI * it as f64 / nth as f64;
            let simpson = if it == 0 || it == nth {
                1.0
            } else if it % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let mut ring = 0.0;
            for ip in 0..nph {
                let ph = 2.0 * std::f64::consts::PI * ip as f64 / nph as f64;
                let p = [rho * th.sin() * ph.cos(), rho * th.sin() * ph.sin(), rho * th.cos()];
                let jet = w.jet(p);
                let n2: f64 = jet.w.iter().map(|c| c.norm_sqr()).sum();
                ring += n2;
            }
            total += simpson * th.sin() * ring;
        }
        total *= std::f64::consts::PI / nth as f64 / 3.0 * (2.0 * std::f64::consts::PI / nph as f64)
            * rho
            * rho;
        let oracle = total / (rho * rho);
        assert_relative_eq!(x, oracle, max_relative = 1e-8);
    }
}
