//! Charts, 3-metrics with exact derivatives, curvature, asymptotic-flatness
//! audits, distance functions to coordinate spheres and the weighted Poincaré
//! inequality.
//!
//! Index conventions, used everywhere in this crate:
//!   Christoffels  Γ^a_{ij} = ½ g^{ad}(∂_i g_{dj} + ∂_j g_{di} − ∂_d g_{ij})
//!   Riemann       R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}
//!   Ricci         R_{bd} = R^a_{bad},  scalar  R = g^{bd} R_{bd}
//! The scalar Laplacian sign convention is Δ = −g^{ij}∇_i∇_j (nonnegative).

pub mod distance;
pub mod fmm;
pub mod poincare;

use crate::dual::{radius, seed, Dual2};
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

pub type D3 = Dual2<3>;
pub type ChartPoint3 = [f64; 3];

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric '{0}' is singular at the evaluated point")]
    SingularMetric(String),
    #[error("metric '{0}' is not Riemannian positive definite at the evaluated point")]
    NotPositiveDefinite(String),
    #[error("point lies outside the chart domain: {0}")]
    OutsideChart(String),
    #[error("empty sample schedule")]
    EmptySchedule,
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("geodesic solver did not converge (R may be below the configured R0 threshold): {0}")]
    GeodesicNoConvergence(String),
    #[error("boundary point: |x| = R, the one-sided report is not defined")]
    BoundaryPoint,
    #[error("admissibility: {0}")]
    Admissibility(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Signature {
    Riemannian,
    Lorentzian,
}

/// A 3-metric given as a closed-form chart map evaluated in dual arithmetic,
/// carrying its declared asymptotic-flatness parameters.
#[derive(Clone)]
pub struct MetricField3 {
    pub name: String,
    pub signature: Signature,
    /// Declared constants of the decay bound |g−δ| + |x||∂g| + |x|²|∂²g| ≤ C*·|x|^−δ.
    pub cstar: f64,
    pub delta: f64,
    eval: Arc<dyn Fn(&[D3; 3]) -> [[D3; 3]; 3] + Send + Sync>,
}

/// Everything the pointwise operators need about the metric at one point.
#[derive(Clone, Debug)]
pub struct MetricJet3 {
    pub g: [[f64; 3]; 3],
    /// dg[k][i][j] = ∂_k g_{ij}
    pub dg: [[[f64; 3]; 3]; 3],
    /// d2g[k][l][i][j] = ∂_k ∂_l g_{ij}
    pub d2g: [[[[f64; 3]; 3]; 3]; 3],
    pub ginv: [[f64; 3]; 3],
    pub det: f64,
    pub sqrt_det: f64,
    /// gamma[a][i][j] = Γ^a_{ij}
    pub gamma: [[[f64; 3]; 3]; 3],
    /// dgamma[k][a][i][j] = ∂_k Γ^a_{ij}
    pub dgamma: [[[[f64; 3]; 3]; 3]; 3],
    /// ricci[i][j], symmetric
    pub ricci: [[f64; 3]; 3],
    pub scalar: f64,
}

pub(crate) fn inv3(m: &[[f64; 3]; 3]) -> Option<([[f64; 3]; 3], f64)> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let c = |a: usize, b: usize, c_: usize, d: usize| m[a][b] * m[c_][d] - m[a][d] * m[c_][b];
    let adj = [
        [c(1, 1, 2, 2), c(0, 2, 2, 1), c(0, 1, 1, 2)],
        [c(1, 2, 2, 0), c(0, 0, 2, 2), c(0, 2, 1, 0)],
        [c(1, 0, 2, 1), c(0, 1, 2, 0), c(0, 0, 1, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    Some((out, det))
}

/// Cholesky success = positive definiteness.
fn is_spd(m: &[[f64; 3]; 3]) -> bool {
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

impl MetricField3 {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[D3; 3]) -> [[D3; 3]; 3] + Send + Sync + 'static,
        cstar: f64,
        delta: f64,
    ) -> Self {
        MetricField3 {
            name: name.into(),
            signature: Signature::Riemannian,
            cstar,
            delta,
            eval: Arc::new(eval),
        }
    }

    pub fn components(&self, p: &[D3; 3]) -> [[D3; 3]; 3] {
        (self.eval)(p)
    }

    /// Evaluate metric, Christoffels and curvature at `p` from exact first and
    /// second derivatives.
    pub fn jet(&self, p: ChartPoint3) -> Result<MetricJet3, GeometryError> {
        let comp = (self.eval)(&seed(p));
        let mut g = [[0.0; 3]; 3];
        let mut dg = [[[0.0; 3]; 3]; 3];
        let mut d2g = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let c = comp[i][j];
                if !c.is_finite() {
                    return Err(GeometryError::OutsideChart(format!("{:?}", p)));
                }
                g[i][j] = c.val;
                for k in 0..3 {
                    dg[k][i][j] = c.grad[k];
                    for l in 0..3 {
                        d2g[k][l][i][j] = c.hess[k][l];
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..i {
                if (g[i][j] - g[j][i]).abs() > 1e-12 * (1.0 + g[i][j].abs()) {
                    return Err(GeometryError::OutsideChart("asymmetric metric".into()));
                }
            }
        }
        let (ginv, det) = inv3(&g).ok_or_else(|| GeometryError::SingularMetric(self.name.clone()))?;
        if self.signature == Signature::Riemannian && !is_spd(&g) {
            return Err(GeometryError::NotPositiveDefinite(self.name.clone()));
        }
        // dginv[k] = -ginv dg[k] ginv
        let mut dginv = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            s -= ginv[i][a] * dg[k][a][b] * ginv[b][j];
                        }
                    }
                    dginv[k][i][j] = s;
                }
            }
        }
        let mut gamma = [[[0.0; 3]; 3]; 3];
        for a in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for d in 0..3 {
                        s += ginv[a][d] * (dg[i][d][j] + dg[j][d][i] - dg[d][i][j]);
                    }
                    gamma[a][i][j] = 0.5 * s;
                }
            }
        }
        let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..3 {
            for a in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for d in 0..3 {
                            s += dginv[k][a][d] * (dg[i][d][j] + dg[j][d][i] - dg[d][i][j])
                                + ginv[a][d]
                                    * (d2g[k][i][d][j] + d2g[k][j][d][i] - d2g[k][d][i][j]);
                        }
                        dgamma[k][a][i][j] = 0.5 * s;
                    }
                }
            }
        }
        let mut ricci = [[0.0; 3]; 3];
        for b in 0..3 {
            for d in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    s += dgamma[a][a][d][b] - dgamma[d][a][a][b];
                    for e in 0..3 {
                        s += gamma[a][a][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][a][b];
                    }
                }
                ricci[b][d] = s;
            }
        }
        // enforce the analytic symmetry against round-off
        for b in 0..3 {
            for d in 0..b {
                let m = 0.5 * (ricci[b][d] + ricci[d][b]);
                ricci[b][d] = m;
                ricci[d][b] = m;
            }
        }
        let mut scalar = 0.0;
        for b in 0..3 {
            for d in 0..3 {
                scalar += ginv[b][d] * ricci[b][d];
            }
        }
        Ok(MetricJet3 { g, dg, d2g, ginv, det, sqrt_det: det.sqrt(), gamma, dgamma, ricci, scalar })
    }

    /// Lowered Riemann tensor R_{abcd} at `p`.
    pub fn riemann_lowered(&self, p: ChartPoint3) -> Result<[[[[f64; 3]; 3]; 3]; 3], GeometryError> {
        let jet = self.jet(p)?;
        let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let mut s = jet.dgamma[c][a][d][b] - jet.dgamma[d][a][c][b];
                        for e in 0..3 {
                            s += jet.gamma[a][c][e] * jet.gamma[e][d][b]
                                - jet.gamma[a][d][e] * jet.gamma[e][c][b];
                        }
                        rm[a][b][c][d] = s;
                    }
                }
            }
        }
        let mut lowered = [[[[0.0; 3]; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let mut s = 0.0;
                        for e in 0..3 {
                            s += jet.g[a][e] * rm[e][b][c][d];
                        }
                        lowered[a][b][c][d] = s;
                    }
                }
            }
        }
        Ok(lowered)
    }
}

// ---------------------------------------------------------------------------
// named metrics
// ---------------------------------------------------------------------------

pub(crate) fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// The flat metric δ_ij.
pub fn flat_metric() -> MetricField3 {
    MetricField3::new(
        "flat",
        |_p| {
            let mut g = [[D3::constant(0.0); 3]; 3];
            for i in 0..3 {
                g[i][i] = D3::constant(1.0);
            }
            g
        },
        1.0,
        1.0,
    )
}

/// Conformally flat metric (1 + m/(2r))^power δ_ij. power = 4 is scalar-flat.
pub fn conformal_metric(m: f64, power: i32) -> MetricField3 {
    MetricField3::new(
        format!("conformal:m={m},p={power}"),
        move |p| {
            let r = radius(p);
            let phi = (1.0 + m / 2.0 / r).powi(power);
            let mut g = [[D3::constant(0.0); 3]; 3];
            for i in 0..3 {
                g[i][i] = phi;
            }
            g
        },
        4.0 * m.abs().max(1.0),
        1.0,
    )
}

/// g = (1 + r^(-1/2)) δ_ij, decays at rate δ = 1/2.
pub fn powertail_metric() -> MetricField3 {
    MetricField3::new(
        "powertail",
        |p| {
            let r = radius(p);
            let f = 1.0 + r.powf(-0.5);
            let mut g = [[D3::constant(0.0); 3]; 3];
            for i in 0..3 {
                g[i][i] = f;
            }
            g
        },
        3.0,
        0.5,
    )
}

/// g = (1 + ln r / r^0.1) δ_ij; fails any declared decay rate above 0.1.
pub fn logtail_metric(declared_delta: f64, declared_cstar: f64) -> MetricField3 {
    MetricField3::new(
        "logtail",
        |p| {
            let r = radius(p);
            let f = 1.0 + r.ln() / r.powf(0.1);
            let mut g = [[D3::constant(0.0); 3]; 3];
            for i in 0..3 {
                g[i][i] = f;
            }
            g
        },
        declared_cstar,
        declared_delta,
    )
}

/// Scattering-form 3-metric x^{-4} dx² + x^{-2} h in a chart (x, θ, φ) with h
/// the round sphere metric. Valid away from the poles.
pub fn scattering_model_metric() -> MetricField3 {
    MetricField3::new(
        "scattering",
        |p| {
            let x = p[0];
            let th = p[1];
            let mut g = [[D3::constant(0.0); 3]; 3];
            g[0][0] = x.powi(-4);
            g[1][1] = x.powi(-2);
            g[2][2] = x.powi(-2) * th.sin() * th.sin();
            g
        },
        1.0,
        1.0,
    )
}

/// Conformal rescaling ĝ = V^{-2} g of a base metric by a positive lapse.
pub fn rescaled_metric(
    base: &MetricField3,
    lapse: impl Fn(&[D3; 3]) -> D3 + Send + Sync + 'static,
) -> MetricField3 {
    let inner = base.eval.clone();
    MetricField3::new(
        format!("{}^rescaled", base.name),
        move |p| {
            let g0 = inner(p);
            let v = lapse(p);
            let w = (v * v).recip();
            let mut g = [[D3::constant(0.0); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = g0[i][j] * w;
                }
            }
            g
        },
        base.cstar,
        base.delta,
    )
}

/// Registry lookup used by the CLI: `flat`, `conformal:m=1` (power 4 default),
/// `conformal:m=1,p=2`, `powertail`, `logtail:delta=0.5,cstar=10`, `scattering`.
pub fn metric_by_name(spec: &str) -> Result<MetricField3, GeometryError> {
    let (head, args) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let get = |key: &str, default: f64| -> f64 {
        args.and_then(|a| {
            a.split(',').find_map(|kv| {
                let (k, v) = kv.split_once('=')?;
                (k == key).then(|| v.parse().ok()).flatten()
            })
        })
        .unwrap_or(default)
    };
    match head {
        "flat" => Ok(flat_metric()),
        "conformal" => Ok(conformal_metric(get("m", 1.0), get("p", 4.0) as i32)),
        "powertail" => Ok(powertail_metric()),
        "logtail" => Ok(logtail_metric(get("delta", 0.5), get("cstar", 10.0))),
        "scattering" => Ok(scattering_model_metric()),
        other => Err(GeometryError::UnknownMetric(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// asymptotic flatness audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessAudit {
    pub metric: String,
    pub delta: f64,
    pub cstar: f64,
    pub max_weighted_deviation: f64,
    pub worst_radius: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Sup over sample points of |x|^δ (|g−δ_ij| + |x||∂g| + |x|²|∂²g|), compared
/// against the declared C*. Component norms are max-abs.
pub fn audit_asymptotic_flatness(
    metric: &MetricField3,
    sample_radii: &[f64],
    directions_per_radius: usize,
    seed_val: u64,
) -> Result<FlatnessAudit, GeometryError> {
    if sample_radii.is_empty() || directions_per_radius == 0 {
        return Err(GeometryError::EmptySchedule);
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed_val);
    let mut worst = 0.0f64;
    let mut worst_radius = sample_radii[0];
    let mut samples = 0;
    for &r in sample_radii {
        for _ in 0..directions_per_radius {
            let dir = random_unit(&mut rng);
            let p = [r * dir[0], r * dir[1], r * dir[2]];
            let jet = metric.jet(p)?;
            let mut a0 = 0.0f64;
            let mut a1 = 0.0f64;
            let mut a2 = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    a0 = a0.max((jet.g[i][j] - kron(i, j)).abs());
                    for k in 0..3 {
                        a1 = a1.max(jet.dg[k][i][j].abs());
                        for l in 0..3 {
                            a2 = a2.max(jet.d2g[k][l][i][j].abs());
                        }
                    }
                }
            }
            let dev = r.powf(metric.delta) * (a0 + r * a1 + r * r * a2);
            if dev > worst {
                worst = dev;
                worst_radius = r;
            }
            samples += 1;
        }
    }
    Ok(FlatnessAudit {
        metric: metric.name.clone(),
        delta: metric.delta,
        cstar: metric.cstar,
        max_weighted_deviation: worst,
        worst_radius,
        samples,
        pass: worst <= metric.cstar,
    })
}

pub fn random_unit<R: rand::Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub use distance::{check_hessian_bands, DistanceField, DistanceJet, DistanceMethod, HessianBandReport};
pub use poincare::{weighted_poincare_check, PoincareReport};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_christoffels_vanish() {
        let m = flat_metric();
        let jet = m.jet([0.3, -1.2, 2.0]).unwrap();
        for a in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(jet.gamma[a][i][j], 0.0);
                }
            }
        }
        assert_eq!(jet.scalar, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(jet.ricci[i][j], 0.0);
            }
        }
    }

    #[test]
    fn conformal4_is_scalar_flat() {
        // (1 + 1/(2r))^4 δ is the time-symmetric slice family: R = 0 exactly.
        let m = conformal_metric(1.0, 4);
        for p in [[2.0, 0.0, 0.0], [1.0, 1.5, -0.4], [0.5, -0.3, 0.9]] {
            let jet = m.jet(p).unwrap();
            assert!(jet.scalar.abs() < 1e-10, "R = {} at {:?}", jet.scalar, p);
        }
    }

    #[test]
    fn conformal2_scalar_matches_symbolic_oracle() {
        // For (1 + m/(2r))^2 δ the scalar curvature is 8 m² / (m + 2r)^4;
        // closed form obtained by an independent symbolic differentiation run.
        let m = conformal_metric(1.0, 2);
        let jet = m.jet([2.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(jet.scalar, 8.0 / 625.0, max_relative = 1e-11);
        let p = [1.1, -0.7, 0.4];
        let r = (p.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let expect = 8.0 / (1.0 + 2.0 * r).powi(4);
        assert_relative_eq!(m.jet(p).unwrap().scalar, expect, max_relative = 1e-10);
    }

    #[test]
    fn scattering_metric_components_match_direct_form() {
        let m = scattering_model_metric();
        let p = [0.2, 1.1, 0.7];
        let jet = m.jet(p).unwrap();
        assert_relative_eq!(jet.g[0][0], 0.2f64.powi(-4), max_relative = 1e-14);
        assert_relative_eq!(jet.g[1][1], 0.2f64.powi(-2), max_relative = 1e-14);
        assert_relative_eq!(jet.g[2][2], 0.2f64.powi(-2) * 1.1f64.sin().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn audit_flat_passes_with_zero_deviation() {
        let m = flat_metric();
        let audit = audit_asymptotic_flatness(&m, &[5.0, 10.0, 100.0], 16, 7).unwrap();
        assert_eq!(audit.max_weighted_deviation, 0.0);
        assert!(audit.pass);
    }

    #[test]
    fn audit_powertail_passes() {
        let m = powertail_metric();
        let audit = audit_asymptotic_flatness(&m, &[4.0, 16.0, 64.0, 256.0], 24, 11).unwrap();
        assert!(audit.pass, "deviation {} vs C* {}", audit.max_weighted_deviation, audit.cstar);
        assert!(audit.max_weighted_deviation > 0.0);
    }

    #[test]
    fn audit_logtail_fails_declared_half_rate() {
        let m = logtail_metric(0.5, 10.0);
        let audit =
            audit_asymptotic_flatness(&m, &[10.0, 100.0, 1000.0, 10000.0], 8, 3).unwrap();
        assert!(!audit.pass);
    }

    #[test]
    fn empty_schedule_rejected() {
        let m = flat_metric();
        assert!(matches!(
            audit_asymptotic_flatness(&m, &[], 4, 0),
            Err(GeometryError::EmptySchedule)
        ));
    }

    #[test]
    fn dual_derivatives_match_central_differences_on_registry() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let metrics =
            [flat_metric(), conformal_metric(1.0, 4), conformal_metric(0.5, 2), powertail_metric()];
        let h = 1e-5;
        for trial in 0..1000 {
            let m = &metrics[trial % metrics.len()];
            let dir = random_unit(&mut rng);
            let r = rng.gen_range(1.0..20.0);
            let p = [r * dir[0], r * dir[1], r * dir[2]];
            let jet = m.jet(p).unwrap();
            let k = trial % 3;
            let (i, j) = (trial / 3 % 3, trial / 9 % 3);
            let mut pp = p;
            let mut pm = p;
            pp[k] += h;
            pm[k] -= h;
            let fd =
                (m.jet(pp).unwrap().g[i][j] - m.jet(pm).unwrap().g[i][j]) / (2.0 * h);
            let exact = jet.dg[k][i][j];
            assert!(
                (fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                "metric {} comp ({i},{j}) d{k}: fd {fd} vs dual {exact}",
                m.name
            );
        }
    }
}
