//! Distance to a coordinate sphere, its gradient and Hessian.
//!
//! Primary method: radial geodesic shooting with a Newton correction on the
//! endpoint (the metrics here are near-flat, so the radial ray is an excellent
//! initial guess). The Hessian is transported along the found geodesic by the
//! matrix Riccati equation with the sphere's shape operator as initial data,
//! in a parallel-transported orthonormal frame. Fast marching on a Cartesian
//! grid (see [`super::fmm`]) is the fallback and cross-check path.

use super::{ChartPoint3, GeometryError, MetricField3};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DistanceMethod {
    GeodesicShooting,
    FastMarching,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceJet {
    pub d: f64,
    /// Lowered gradient (∇d)_i = g_ij γ'^j at the evaluation point.
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    /// | |∇d|_g − 1 |, reported for every evaluation.
    pub eikonal_residual: f64,
    /// Foot point of the minimizing geodesic on the sphere.
    pub foot: [f64; 3],
}

/// Distance to the coordinate sphere of radius `R`.
pub struct DistanceField<'a> {
    pub metric: &'a MetricField3,
    pub radius: f64,
    pub method: DistanceMethod,
    /// Below this sphere radius the lemma's "large R" hypothesis is not
    /// claimed; the solver may refuse to converge. Default 10.
    pub r0_threshold: f64,
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn g_dot(g: &[[f64; 3]; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += g[i][j] * a[i] * b[j];
        }
    }
    s
}

struct GeoState {
    x: [f64; 3],
    v: [f64; 3],
    /// two parallel-transported frame vectors orthogonal to v
    e: [[f64; 3]; 2],
    /// 2x2 symmetric Hessian (shape operator of the level sets) in that frame
    s: [[f64; 2]; 2],
}

impl<'a> DistanceField<'a> {
    pub fn new(metric: &'a MetricField3, radius: f64) -> Self {
        DistanceField { metric, radius, method: DistanceMethod::GeodesicShooting, r0_threshold: 10.0 }
    }

    pub fn eval(&self, x: ChartPoint3) -> Result<DistanceJet, GeometryError> {
        let rx = norm3(&x);
        if rx < self.radius - 1e-12 {
            return Err(GeometryError::OutsideChart(format!(
                "|x| = {rx} inside the sphere R = {}",
                self.radius
            )));
        }
        if self.method == DistanceMethod::FastMarching {
            return super::fmm::fmm_distance(self.metric, self.radius, x);
        }
        if rx - self.radius <= 1e-12 {
            // on the sphere itself
            let jet = self.metric.jet(x)?;
            let (nu, _s0) = sphere_normal_shape(self.metric, x)?;
            let mut grad = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    grad[i] += jet.g[i][j] * nu[j];
                }
            }
            return Ok(DistanceJet {
                d: 0.0,
                grad,
                hess: [[0.0; 3]; 3],
                eikonal_residual: 0.0,
                foot: x,
            });
        }
        self.shoot(x)
    }

    /// Geodesic from the sphere foot point, Newton-corrected until the
    /// endpoint matches `x`. The foot point is parametrized on the tangent
    /// plane of the radial initial guess, which stays non-degenerate for all
    /// directions (a polar parametrization would break down on the axis).
    fn shoot(&self, x: ChartPoint3) -> Result<DistanceJet, GeometryError> {
        let rx = norm3(&x);
        let basis = tangent_basis(&x);
        let mut su = [0.0f64, 0.0];
        let mut t = self.estimate_radial_length(rx)?;
        let mut solved = false;
        for iter in 0..40 {
            let end = self.integrate_endpoint(&basis, su, t)?;
            let res = [end[0] - x[0], end[1] - x[1], end[2] - x[2]];
            let rn = norm3(&res);
            if rn <= 1e-11 * (1.0 + rx) {
                solved = true;
                break;
            }
            // finite-difference Jacobian of the endpoint map
            let hs = 1e-7;
            let ht = 1e-7 * (1.0 + t.abs());
            let e1 = self.integrate_endpoint(&basis, [su[0] + hs, su[1]], t)?;
            let e2 = self.integrate_endpoint(&basis, [su[0], su[1] + hs], t)?;
            let e3 = self.integrate_endpoint(&basis, su, t + ht)?;
            let mut jac = [[0.0; 3]; 3];
            for i in 0..3 {
                jac[i][0] = (e1[i] - end[i]) / hs;
                jac[i][1] = (e2[i] - end[i]) / hs;
                jac[i][2] = (e3[i] - end[i]) / ht;
            }
            let (inv, _) = super::inv3(&jac).ok_or_else(|| {
                GeometryError::GeodesicNoConvergence("singular shooting Jacobian".into())
            })?;
            let mut step = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    step[i] -= inv[i][j] * res[j];
                }
            }
            // damped Newton for the first iterations
            let damp = if iter < 2 { 0.8 } else { 1.0 };
            su[0] += damp * step[0];
            su[1] += damp * step[1];
            t += damp * step[2];
            if !(su[0].is_finite() && su[1].is_finite() && t.is_finite()) || t <= 0.0 {
                return Err(GeometryError::GeodesicNoConvergence(format!(
                    "diverged at iteration {iter} (R = {} vs threshold {})",
                    self.radius, self.r0_threshold
                )));
            }
        }
        if !solved {
            return Err(GeometryError::GeodesicNoConvergence(format!(
                "no endpoint match after Newton iterations (R = {} vs threshold {})",
                self.radius, self.r0_threshold
            )));
        }
        // final integration carrying frame + Riccati
        let st = self.integrate_full(&basis, su, t)?;
        let jet = self.metric.jet(st.x)?;
        let speed = g_dot(&jet.g, &st.v, &st.v).sqrt();
        let mut grad = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                grad[i] += jet.g[i][j] * st.v[j] / speed;
            }
        }
        // Hessian from the 2x2 frame representation: H = Σ s_ab e^a ⊗ e^b
        let mut elow = [[0.0; 3]; 2];
        for a in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    elow[a][i] += jet.g[i][j] * st.e[a][j];
                }
            }
        }
        let mut hess = [[0.0; 3]; 3];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        hess[i][j] += st.s[a][b] * elow[a][i] * elow[b][j];
                    }
                }
            }
        }
        Ok(DistanceJet {
            d: t,
            grad,
            hess,
            eikonal_residual: (speed - 1.0).abs(),
            foot: foot_point(self.radius, &basis, su),
        })
    }

    /// Arclength of the radial ray from the sphere to coordinate radius rx.
    fn estimate_radial_length(&self, rx: f64) -> Result<f64, GeometryError> {
        let n = 64;
        let mut s = 0.0;
        for k in 0..n {
            let r = self.radius + (rx - self.radius) * (k as f64 + 0.5) / n as f64;
            let jet = self.metric.jet([r, 0.0, 0.0])?;
            // radial direction; metrics in the registry are isotropic enough
            // for a first guess
            s += (jet.g[0][0]).sqrt() * (rx - self.radius) / n as f64;
        }
        Ok(s)
    }

    fn integrate_endpoint(
        &self,
        basis: &TangentBasis,
        su: [f64; 2],
        t: f64,
    ) -> Result<[f64; 3], GeometryError> {
        let (x, v) = self.initial_data(basis, su)?;
        let steps = step_count(t);
        let h = t / steps as f64;
        let mut x = x;
        let mut v = v;
        for _ in 0..steps {
            self.rk4_step(&mut x, &mut v, h)?;
        }
        Ok(x)
    }

    fn integrate_full(
        &self,
        basis: &TangentBasis,
        su: [f64; 2],
        t: f64,
    ) -> Result<GeoState, GeometryError> {
        let (x0, v0) = self.initial_data(basis, su)?;
        let q = foot_point(self.radius, basis, su);
        let (_, s0) = sphere_normal_shape(self.metric, q)?;
        // orthonormal tangent frame at the foot point, g-orthogonal to v0
        let jet0 = self.metric.jet(x0)?;
        let mut e = [[0.0; 3]; 2];
        let trial = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut found = 0;
        for tr in trial.iter() {
            if found == 2 {
                break;
            }
            let mut w = *tr;
            // Gram-Schmidt against v0 and previous frame vectors in g
            let c = g_dot(&jet0.g, &w, &v0);
            for i in 0..3 {
                w[i] -= c * v0[i];
            }
            for a in 0..found {
                let c = g_dot(&jet0.g, &w, &e[a]);
                for i in 0..3 {
                    w[i] -= c * e[a][i];
                }
            }
            let n = g_dot(&jet0.g, &w, &w).sqrt();
            if n > 1e-6 {
                for i in 0..3 {
                    e[found][i] = w[i] / n;
                }
                found += 1;
            }
        }
        assert_eq!(found, 2);
        // shape operator restricted to the frame
        let mut s = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += s0[i][j] * e[a][i] * e[b][j];
                    }
                }
                s[a][b] = acc;
            }
        }
        let mut st = GeoState { x: x0, v: v0, e, s };
        let steps = step_count(t);
        let h = t / steps as f64;
        for _ in 0..steps {
            self.transport_step(&mut st, h)?;
        }
        Ok(st)
    }

    fn initial_data(
        &self,
        basis: &TangentBasis,
        su: [f64; 2],
    ) -> Result<([f64; 3], [f64; 3]), GeometryError> {
        let q = foot_point(self.radius, basis, su);
        let (nu, _) = sphere_normal_shape(self.metric, q)?;
        Ok((q, nu))
    }

    fn rk4_step(&self, x: &mut [f64; 3], v: &mut [f64; 3], h: f64) -> Result<(), GeometryError> {
        let f = |x: &[f64; 3], v: &[f64; 3]| -> Result<([f64; 3], [f64; 3]), GeometryError> {
            let jet = self.metric.jet(*x)?;
            let mut acc = [0.0; 3];
            for a in 0..3 {
                let mut s = 0.0;
                for b in 0..3 {
                    for c in 0..3 {
                        s += jet.gamma[a][b][c] * v[b] * v[c];
                    }
                }
                acc[a] = -s;
            }
            Ok((*v, acc))
        };
        let (k1x, k1v) = f(x, v)?;
        let x2 = add_scaled(x, &k1x, h / 2.0);
        let v2 = add_scaled(v, &k1v, h / 2.0);
        let (k2x, k2v) = f(&x2, &v2)?;
        let x3 = add_scaled(x, &k2x, h / 2.0);
        let v3 = add_scaled(v, &k2v, h / 2.0);
        let (k3x, k3v) = f(&x3, &v3)?;
        let x4 = add_scaled(x, &k3x, h);
        let v4 = add_scaled(v, &k3v, h);
        let (k4x, k4v) = f(&x4, &v4)?;
        for i in 0..3 {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        Ok(())
    }

    /// One RK4 step of the coupled system: geodesic, parallel frame, Riccati
    /// S' = −S² − R(e_a, γ')γ'·e_b.
    fn transport_step(&self, st: &mut GeoState, h: f64) -> Result<(), GeometryError> {
        type Full = ([f64; 3], [f64; 3], [[f64; 3]; 2], [[f64; 2]; 2]);
        let f = |x: &[f64; 3], v: &[f64; 3], e: &[[f64; 3]; 2], s: &[[f64; 2]; 2]| -> Result<Full, GeometryError> {
            let jet = self.metric.jet(*x)?;
            let rm = self.metric.riemann_lowered(*x)?;
            let mut acc = [0.0; 3];
            for a in 0..3 {
                let mut sum = 0.0;
                for b in 0..3 {
                    for c in 0..3 {
                        sum += jet.gamma[a][b][c] * v[b] * v[c];
                    }
                }
                acc[a] = -sum;
            }
            let mut de = [[0.0; 3]; 2];
            for a in 0..2 {
                for m in 0..3 {
                    let mut sum = 0.0;
                    for b in 0..3 {
                        for c in 0..3 {
                            sum += jet.gamma[m][b][c] * v[b] * e[a][c];
                        }
                    }
                    de[a][m] = -sum;
                }
            }
            // Rt[a][b] = <R(e_a, v) v, e_b> = R_{mjkl} e_b^m v^j e_a^k v^l
            // with [∇_k, ∇_l] w^m = R^m_{jkl} w^j and R_{mjkl} = g_{mn} R^n_{jkl}.
            let mut rt = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let mut sum = 0.0;
                    for m in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                for l in 0..3 {
                                    sum += rm[m][j][k][l] * e[b][m] * v[j] * e[a][k] * v[l];
                                }
                            }
                        }
                    }
                    rt[a][b] = sum;
                }
            }
            let mut ds = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let mut s2 = 0.0;
                    for c in 0..2 {
                        s2 += s[a][c] * s[c][b];
                    }
                    ds[a][b] = -s2 - rt[a][b];
                }
            }
            Ok((*v, acc, de, ds))
        };
        let y0 = (st.x, st.v, st.e, st.s);
        let k1 = f(&y0.0, &y0.1, &y0.2, &y0.3)?;
        let y1 = advance(&y0, &k1, h / 2.0);
        let k2 = f(&y1.0, &y1.1, &y1.2, &y1.3)?;
        let y2 = advance(&y0, &k2, h / 2.0);
        let k3 = f(&y2.0, &y2.1, &y2.2, &y2.3)?;
        let y3 = advance(&y0, &k3, h);
        let k4 = f(&y3.0, &y3.1, &y3.2, &y3.3)?;
        let combine = |a: &Full, b: &Full, c: &Full, d: &Full| -> Full {
            let mut out = *a;
            for i in 0..3 {
                out.0[i] = (a.0[i] + 2.0 * b.0[i] + 2.0 * c.0[i] + d.0[i]) / 6.0;
                out.1[i] = (a.1[i] + 2.0 * b.1[i] + 2.0 * c.1[i] + d.1[i]) / 6.0;
            }
            for a_ in 0..2 {
                for i in 0..3 {
                    out.2[a_][i] =
                        (a.2[a_][i] + 2.0 * b.2[a_][i] + 2.0 * c.2[a_][i] + d.2[a_][i]) / 6.0;
                }
                for b_ in 0..2 {
                    out.3[a_][b_] = (a.3[a_][b_]
                        + 2.0 * b.3[a_][b_]
                        + 2.0 * c.3[a_][b_]
                        + d.3[a_][b_])
                        / 6.0;
                }
            }
            out
        };
        let k = combine(&k1, &k2, &k3, &k4);
        let next = advance(&y0, &k, h);
        st.x = next.0;
        st.v = next.1;
        st.e = next.2;
        st.s = next.3;
        Ok(())
    }
}

fn step_count(t: f64) -> usize {
    ((t * 24.0).ceil() as usize).max(192)
}

fn add_scaled(a: &[f64; 3], b: &[f64; 3], c: f64) -> [f64; 3] {
    [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]]
}

type FullState = ([f64; 3], [f64; 3], [[f64; 3]; 2], [[f64; 2]; 2]);

fn advance(y: &FullState, k: &FullState, h: f64) -> FullState {
    let mut out = *y;
    for i in 0..3 {
        out.0[i] += h * k.0[i];
        out.1[i] += h * k.1[i];
    }
    for a in 0..2 {
        for i in 0..3 {
            out.2[a][i] += h * k.2[a][i];
        }
        for b in 0..2 {
            out.3[a][b] += h * k.3[a][b];
        }
    }
    out
}

struct TangentBasis {
    nhat: [f64; 3],
    t1: [f64; 3],
    t2: [f64; 3],
}

fn tangent_basis(x: &[f64; 3]) -> TangentBasis {
    let r = norm3(x);
    let nhat = [x[0] / r, x[1] / r, x[2] / r];
    let mut t1 = if nhat[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = t1[0] * nhat[0] + t1[1] * nhat[1] + t1[2] * nhat[2];
    for i in 0..3 {
        t1[i] -= c * nhat[i];
    }
    let n1 = norm3(&t1);
    for v in t1.iter_mut() {
        *v /= n1;
    }
    let t2 = [
        nhat[1] * t1[2] - nhat[2] * t1[1],
        nhat[2] * t1[0] - nhat[0] * t1[2],
        nhat[0] * t1[1] - nhat[1] * t1[0],
    ];
    TangentBasis { nhat, t1, t2 }
}

fn foot_point(radius: f64, basis: &TangentBasis, su: [f64; 2]) -> [f64; 3] {
    let mut w = [0.0; 3];
    for i in 0..3 {
        w[i] = basis.nhat[i] + su[0] * basis.t1[i] + su[1] * basis.t2[i];
    }
    let n = norm3(&w);
    [radius * w[0] / n, radius * w[1] / n, radius * w[2] / n]
}

/// Outward g-unit normal of the coordinate sphere through `q`, and the shape
/// operator (Hess_g |x| / |∇|x||_g) as a full 3x3 bilinear form.
fn sphere_normal_shape(
    metric: &MetricField3,
    q: [f64; 3],
) -> Result<([f64; 3], [[f64; 3]; 3]), GeometryError> {
    let jet = metric.jet(q)?;
    let r = norm3(&q);
    let df = [q[0] / r, q[1] / r, q[2] / r];
    // Hess f for f = |x|: (δ_ij − x_i x_j / r²)/r, minus Christoffel term
    let mut hf = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let euclid = (super::kron(i, j) - q[i] * q[j] / (r * r)) / r;
            let mut gam = 0.0;
            for k in 0..3 {
                gam += jet.gamma[k][i][j] * df[k];
            }
            hf[i][j] = euclid - gam;
        }
    }
    // |grad f|_g and the unit normal ν^i = g^{ij} ∂_j f / |∇f|
    let mut gradup = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            gradup[i] += jet.ginv[i][j] * df[j];
        }
    }
    let gnorm = g_dot(&jet.g, &gradup, &gradup).sqrt();
    let nu = [gradup[0] / gnorm, gradup[1] / gnorm, gradup[2] / gnorm];
    let mut shape = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            shape[i][j] = hf[i][j] / gnorm;
        }
    }
    Ok((nu, shape))
}

// ---------------------------------------------------------------------------
// Hessian bands
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct HessianBandPoint {
    pub point: [f64; 3],
    pub d: f64,
    pub eigenvalues: [f64; 2],
    /// |λ − 1/(R+d)| · (R+d)^{1+δ} per tangential eigenvalue
    pub band_constants: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianBandReport {
    pub metric: String,
    pub radius: f64,
    pub delta: f64,
    /// smallest C1 making every sampled eigenvalue sit inside the band
    pub c1: f64,
    pub points: Vec<HessianBandPoint>,
}

/// Tangential Hessian eigenvalues against the bands 1/(R+d) ± C1/(R+d)^{1+δ};
/// reports the smallest admissible C1 found over the samples.
pub fn check_hessian_bands(
    metric: &MetricField3,
    radius: f64,
    delta: f64,
    sample_points: &[ChartPoint3],
) -> Result<HessianBandReport, GeometryError> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(GeometryError::Admissibility(format!(
            "band check requires δ in (0,1), got {delta}"
        )));
    }
    let field = DistanceField::new(metric, radius);
    let mut pts = Vec::new();
    let mut c1 = 0.0f64;
    for &p in sample_points {
        if (norm3(&p) - radius).abs() < 1e-9 {
            return Err(GeometryError::BoundaryPoint);
        }
        let jet = field.eval(p)?;
        // tangential eigenvalues: the Riccati S is built in an orthonormal
        // frame, so eigenvalues of the 2x2 block equal eigenvalues of ∇²d|h.
        // Recover them from the full Hessian restricted to the frame via its
        // invariants: trace and determinant of h^{-1}∇²d on the tangent space.
        let eigs = tangential_eigs(metric, &jet, p)?;
        let w = radius + jet.d;
        let bc = [
            (eigs[0] - 1.0 / w).abs() * w.powf(1.0 + delta),
            (eigs[1] - 1.0 / w).abs() * w.powf(1.0 + delta),
        ];
        c1 = c1.max(bc[0]).max(bc[1]);
        pts.push(HessianBandPoint { point: p, d: jet.d, eigenvalues: eigs, band_constants: bc });
    }
    Ok(HessianBandReport { metric: metric.name.clone(), radius, delta, c1, points: pts })
}

fn tangential_eigs(
    metric: &MetricField3,
    jet: &DistanceJet,
    p: ChartPoint3,
) -> Result<[f64; 2], GeometryError> {
    let mjet = metric.jet(p)?;
    // raise the gradient to get the geodesic direction
    let mut v = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            v[i] += mjet.ginv[i][j] * jet.grad[j];
        }
    }
    // orthonormal frame orthogonal to v
    let mut e = [[0.0; 3]; 2];
    let mut found = 0;
    for tr in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        if found == 2 {
            break;
        }
        let mut w = tr;
        let c = g_dot(&mjet.g, &w, &v);
        for i in 0..3 {
            w[i] -= c * v[i];
        }
        for a in 0..found {
            let c = g_dot(&mjet.g, &w, &e[a]);
            for i in 0..3 {
                w[i] -= c * e[a][i];
            }
        }
        let n = g_dot(&mjet.g, &w, &w).sqrt();
        if n > 1e-6 {
            for i in 0..3 {
                e[found][i] = w[i] / n;
            }
            found += 1;
        }
    }
    let mut s = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += jet.hess[i][j] * e[a][i] * e[b][j];
                }
            }
            s[a][b] = acc;
        }
    }
    let tr = s[0][0] + s[1][1];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    Ok([tr / 2.0 - disc, tr / 2.0 + disc])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{conformal_metric, flat_metric};
    use approx::assert_relative_eq;

    #[test]
    fn flat_distance_is_exact() {
        let m = flat_metric();
        let f = DistanceField::new(&m, 10.0);
        let x = [15.0, 16.0, 12.0];
        let jet = f.eval(x).unwrap();
        let rx = norm3(&x);
        assert!((jet.d - (rx - 10.0)).abs() < 1e-10, "d = {}", jet.d);
        assert!(jet.eikonal_residual < 1e-12);
        // gradient is the unit radial direction
        for i in 0..3 {
            assert_relative_eq!(jet.grad[i], x[i] / rx, epsilon = 1e-10);
        }
    }

    #[test]
    fn flat_hessian_eigenvalues() {
        let m = flat_metric();
        let f = DistanceField::new(&m, 10.0);
        let x = [25.0, 0.0, 0.0];
        let jet = f.eval(x).unwrap();
        assert!((jet.d - 15.0).abs() < 1e-10);
        let eigs = tangential_eigs(&m, &jet, x).unwrap();
        assert_relative_eq!(eigs[0], 1.0 / 25.0, max_relative = 1e-8);
        assert_relative_eq!(eigs[1], 1.0 / 25.0, max_relative = 1e-8);
        // Hessian annihilates the gradient
        let mut hv = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                hv[i] += jet.hess[i][j] * jet.grad[j];
            }
        }
        assert!(norm3(&hv) < 1e-10);
    }

    #[test]
    fn on_sphere_distance_is_zero() {
        let m = flat_metric();
        let f = DistanceField::new(&m, 10.0);
        let jet = f.eval([10.0, 0.0, 0.0]).unwrap();
        assert_eq!(jet.d, 0.0);
    }

    #[test]
    fn conformal_distance_matches_radial_closed_form() {
        // (1+m/(2r))^4 δ is spherically symmetric: the minimizing geodesic
        // from x to the sphere is radial, so
        // d = ∫_R^{|x|} (1+m/(2s))² ds = (|x|−R) + m ln(|x|/R) − m²/4 (1/|x| − 1/R).
        let m = conformal_metric(1.0, 4);
        let f = DistanceField::new(&m, 20.0);
        let x = [0.0, 0.0, 60.0];
        let jet = f.eval(x).unwrap();
        let (rr, rx) = (20.0f64, 60.0f64);
        let exact = (rx - rr) + 1.0 * (rx / rr).ln() - 0.25 * (1.0 / rx - 1.0 / rr);
        assert!(
            (jet.d - exact).abs() < 1e-6,
            "d = {} vs exact {} (err {:.2e})",
            jet.d,
            exact,
            (jet.d - exact).abs()
        );
        assert!(jet.eikonal_residual < 1e-8);
    }

    #[test]
    fn conformal_hessian_matches_gradient_differences() {
        let m = conformal_metric(1.0, 4);
        let f = DistanceField::new(&m, 20.0);
        let x = [30.0, 20.0, 15.0];
        let jet = f.eval(x).unwrap();
        let h = 1e-4;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let gp = f.eval(xp).unwrap().grad;
            let gm = f.eval(xm).unwrap().grad;
            for i in 0..3 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                // Hess(d)_{ki} = ∂_k ∂_i d − Γ^l_{ki} ∂_l d
                let mjet = m.jet(x).unwrap();
                let mut gam = 0.0;
                for l in 0..3 {
                    gam += mjet.gamma[l][k][i] * jet.grad[l];
                }
                let cov = fd - gam;
                assert!(
                    (cov - jet.hess[k][i]).abs() < 5e-5,
                    "H[{k}][{i}] riccati {} vs fd {}",
                    jet.hess[k][i],
                    cov
                );
            }
        }
    }

    #[test]
    fn band_check_flat_any_c1() {
        let m = flat_metric();
        let report =
            check_hessian_bands(&m, 10.0, 0.9, &[[25.0, 0.0, 0.0], [0.0, 40.0, 0.0]]).unwrap();
        assert!(report.c1 < 1e-6, "flat band constant {}", report.c1);
    }

    #[test]
    fn band_check_rejects_boundary_point() {
        let m = flat_metric();
        let err = check_hessian_bands(&m, 10.0, 0.9, &[[10.0, 0.0, 0.0]]);
        assert!(matches!(err, Err(GeometryError::BoundaryPoint)));
    }

    #[test]
    fn band_check_requires_delta_below_one() {
        let m = flat_metric();
        assert!(check_hessian_bands(&m, 10.0, 1.0, &[[25.0, 0.0, 0.0]]).is_err());
    }
}
