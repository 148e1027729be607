//! Differential-form calculus on 3-manifolds, the 4D operations needed by the
//! inheritance checks, and sphere/shell quadrature.
//!
//! Orientation is right-handed: ε_{123} = +√det g in 3D. Complex fields are
//! pairs of real fields; operators act component-wise on the real and
//! imaginary parts. The codifferential sign is fixed so that Δ_H = δd + dδ is
//! nonnegative on flat space (δω = −∇^i ω_i on 1-forms).

use crate::dual::{seed, Dual2};
use crate::geometry::{ChartPoint3, GeometryError, MetricField3, MetricJet3};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

pub type D3 = Dual2<3>;
pub type D4 = Dual2<4>;
type Evaluator3 = Arc<dyn Fn(&[D3; 3]) -> [D3; 3] + Send + Sync>;

#[derive(Debug, Error)]
pub enum FormsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("empty quadrature")]
    EmptyQuadrature,
    #[error("unknown field '{0}'")]
    UnknownField(String),
    #[error("invalid mode (l, m) = ({0}, {1}): {2}")]
    InvalidMode(i64, i64, String),
}

/// A possibly complex 1-form on a 3-chart, evaluated in dual arithmetic so
/// first and second derivatives are exact.
#[derive(Clone)]
pub struct OneForm3 {
    pub name: String,
    re: Evaluator3,
    im: Option<Evaluator3>,
}

/// Value + first + second derivatives of a 1-form at a point.
/// `d1[k][i]` = ∂_k ω_i, `d2[k][l][i]` = ∂_k ∂_l ω_i.
#[derive(Clone, Debug)]
pub struct OneFormJet {
    pub w: [Complex64; 3],
    pub d1: [[Complex64; 3]; 3],
    pub d2: [[[Complex64; 3]; 3]; 3],
}

impl OneForm3 {
    pub fn real(name: impl Into<String>, re: impl Fn(&[D3; 3]) -> [D3; 3] + Send + Sync + 'static) -> Self {
        OneForm3 { name: name.into(), re: Arc::new(re), im: None }
    }

    pub fn complex(
        name: impl Into<String>,
        re: impl Fn(&[D3; 3]) -> [D3; 3] + Send + Sync + 'static,
        im: impl Fn(&[D3; 3]) -> [D3; 3] + Send + Sync + 'static,
    ) -> Self {
        OneForm3 { name: name.into(), re: Arc::new(re), im: Some(Arc::new(im)) }
    }

    pub fn is_complex(&self) -> bool {
        self.im.is_some()
    }

    pub fn jet(&self, p: ChartPoint3) -> OneFormJet {
        let sp = seed(p);
        let re = (self.re)(&sp);
        let im = self.im.as_ref().map(|f| f(&sp));
        let mut out = OneFormJet {
            w: [Complex64::new(0.0, 0.0); 3],
            d1: [[Complex64::new(0.0, 0.0); 3]; 3],
            d2: [[[Complex64::new(0.0, 0.0); 3]; 3]; 3],
        };
        for i in 0..3 {
            let ri = re[i];
            let ii = im.as_ref().map(|v| v[i]).unwrap_or(D3::constant(0.0));
            out.w[i] = Complex64::new(ri.val, ii.val);
            for k in 0..3 {
                out.d1[k][i] = Complex64::new(ri.grad[k], ii.grad[k]);
                for l in 0..3 {
                    out.d2[k][l][i] = Complex64::new(ri.hess[k][l], ii.hess[k][l]);
                }
            }
        }
        out
    }

    /// Pointwise values only.
    pub fn at(&self, p: ChartPoint3) -> [Complex64; 3] {
        self.jet(p).w
    }

    pub fn scaled(&self, c: f64) -> OneForm3 {
        let re = self.re.clone();
        let im = self.im.clone();
        OneForm3 {
            name: format!("{}*{}", c, self.name),
            re: Arc::new(move |p| {
                let v = re(p);
                [v[0] * c, v[1] * c, v[2] * c]
            }),
            im: im.map(|f| {
                let f = f.clone();
                let g: Evaluator3 = Arc::new(move |p: &[D3; 3]| {
                    let v = f(p);
                    [v[0] * c, v[1] * c, v[2] * c]
                });
                g
            }),
        }
    }

    pub fn add(&self, other: &OneForm3) -> OneForm3 {
        let (r1, r2) = (self.re.clone(), other.re.clone());
        let (i1, i2) = (self.im.clone(), other.im.clone());
        OneForm3 {
            name: format!("{}+{}", self.name, other.name),
            re: Arc::new(move |p| {
                let a = r1(p);
                let b = r2(p);
                [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
            }),
            im: if i1.is_none() && i2.is_none() {
                None
            } else {
                Some(Arc::new(move |p: &[D3; 3]| {
                    let a = i1.as_ref().map(|f| f(p)).unwrap_or([D3::constant(0.0); 3]);
                    let b = i2.as_ref().map(|f| f(p)).unwrap_or([D3::constant(0.0); 3]);
                    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
                }))
            },
        }
    }

    /// Gauge twist e^{iaχ}ω of a real 1-form.
    pub fn gauge_twisted(
        real_form: &OneForm3,
        a: f64,
        chi: impl Fn(&[D3; 3]) -> D3 + Send + Sync + Clone + 'static,
    ) -> OneForm3 {
        let re = real_form.re.clone();
        let re2 = real_form.re.clone();
        let chi2 = chi.clone();
        OneForm3 {
            name: format!("twist({})", real_form.name),
            re: Arc::new(move |p| {
                let w = re(p);
                let c = (chi(p) * a).cos();
                [w[0] * c, w[1] * c, w[2] * c]
            }),
            im: Some(Arc::new(move |p: &[D3; 3]| {
                let w = re2(p);
                let s = (chi2(p) * a).sin();
                [w[0] * s, w[1] * s, w[2] * s]
            })),
        }
    }
}

/// A real scalar field on the 3-chart with exact first and second derivatives.
#[derive(Clone)]
pub struct ScalarField3 {
    pub name: String,
    eval: Arc<dyn Fn(&[D3; 3]) -> D3 + Send + Sync>,
}

#[derive(Clone, Copy, Debug)]
pub struct ScalarJet {
    pub v: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl ScalarField3 {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[D3; 3]) -> D3 + Send + Sync + 'static) -> Self {
        ScalarField3 { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn one() -> Self {
        Self::new("1", |_| D3::constant(1.0))
    }

    pub fn jet(&self, p: ChartPoint3) -> ScalarJet {
        let d = (self.eval)(&seed(p));
        ScalarJet { v: d.val, grad: d.grad, hess: d.hess }
    }

    pub fn at(&self, p: ChartPoint3) -> f64 {
        (self.eval)(&seed(p)).val
    }

    pub fn eval_dual(&self, p: &[D3; 3]) -> D3 {
        (self.eval)(p)
    }
}

impl OneForm3 {
    /// Pointwise product s·ω (derivatives via dual arithmetic).
    pub fn scalar_mul(&self, s: &ScalarField3) -> OneForm3 {
        let re = self.re.clone();
        let im = self.im.clone();
        let se = s.eval.clone();
        let se2 = s.eval.clone();
        OneForm3 {
            name: format!("{}*{}", s.name, self.name),
            re: Arc::new(move |p| {
                let v = re(p);
                let c = se(p);
                [v[0] * c, v[1] * c, v[2] * c]
            }),
            im: im.map(|f| {
                let g: Evaluator3 = Arc::new(move |p: &[D3; 3]| {
                    let v = f(p);
                    let c = se2(p);
                    [v[0] * c, v[1] * c, v[2] * c]
                });
                g
            }),
        }
    }
}

/// An antisymmetric 2-form on a 4-chart with exact derivatives.
#[derive(Clone)]
pub struct TwoForm4 {
    pub name: String,
    eval: Arc<dyn Fn(&[D4; 4]) -> [[D4; 4]; 4] + Send + Sync>,
}

#[derive(Clone, Debug)]
pub struct TwoForm4Jet {
    pub f: [[f64; 4]; 4],
    /// d1[k][i][j] = ∂_k F_{ij}
    pub d1: [[[f64; 4]; 4]; 4],
}

impl TwoForm4 {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[D4; 4]) -> [[D4; 4]; 4] + Send + Sync + 'static,
    ) -> Self {
        TwoForm4 { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn jet(&self, p: [f64; 4]) -> TwoForm4Jet {
        let comp = (self.eval)(&seed(p));
        let mut f = [[0.0; 4]; 4];
        let mut d1 = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                f[i][j] = comp[i][j].val;
                for k in 0..4 {
                    d1[k][i][j] = comp[i][j].grad[k];
                }
            }
        }
        TwoForm4Jet { f, d1 }
    }

    pub fn components(&self, p: &[D4; 4]) -> [[D4; 4]; 4] {
        (self.eval)(p)
    }
}

// ---------------------------------------------------------------------------
// pointwise 3D operators (assembled from jets; all metric-exact)
// ---------------------------------------------------------------------------

/// (dω)_{ij} = ∂_i ω_j − ∂_j ω_i at a point, from the jet.
pub fn exterior_derivative(jet: &OneFormJet) -> [[Complex64; 3]; 3] {
    let mut d = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = jet.d1[i][j] - jet.d1[j][i];
        }
    }
    d
}

fn eps_sym(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Hodge star of a 2-form to a 1-form: (*F)_i = ½ ε_i^{jk} F_{jk}
/// with ε_i^{jk} = √det g [ibc] g^{bj} g^{ck}.
pub fn hodge_star_two_form(mjet: &MetricJet3, f: &[[Complex64; 3]; 3]) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let mut s = Complex64::new(0.0, 0.0);
        for b in 0..3 {
            for c in 0..3 {
                let e = eps_sym(i, b, c);
                if e == 0.0 {
                    continue;
                }
                for j in 0..3 {
                    for k in 0..3 {
                        s += 0.5 * e * mjet.sqrt_det * mjet.ginv[b][j] * mjet.ginv[c][k] * f[j][k];
                    }
                }
            }
        }
        out[i] = s;
    }
    out
}

/// Hodge star of a 1-form to a 2-form: (*ω)_{ij} = ε_{ijk} g^{kl} ω_l.
pub fn hodge_star_one_form(mjet: &MetricJet3, w: &[Complex64; 3]) -> [[Complex64; 3]; 3] {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..3 {
                for l in 0..3 {
                    let e = eps_sym(i, j, k);
                    if e != 0.0 {
                        s += e * mjet.sqrt_det * mjet.ginv[k][l] * w[l];
                    }
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// Curl as a 1-form: (*dω)_i, needs first derivatives only.
pub fn star_d(mjet: &MetricJet3, jet: &OneFormJet) -> [Complex64; 3] {
    let d = exterior_derivative(jet);
    hodge_star_two_form(mjet, &d)
}

/// Codifferential on 1-forms: δω = −(1/√g) ∂_i (√g g^{ij} ω_j).
/// Needs ∂g through the jet; sign fixed so Δ_H ≥ 0 on flat space.
pub fn codifferential(metric: &MetricField3, jet: &OneFormJet, p: ChartPoint3) -> Result<Complex64, FormsError> {
    let mjet = metric.jet(p)?;
    // ∂_i(√g g^{ij}): from dg via d(√g) = ½ √g g^{ab} ∂g_ab and
    // ∂ g^{ij} = −g^{ia} ∂g_ab g^{bj}
    let mut div = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            // coefficient c_ij = ∂_i(√g g^{ij})/√g = ½ g^{ab}∂_i g_ab g^{ij} − g^{ia}∂_i g_ab g^{bj}
            let mut c = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    c += 0.5 * mjet.ginv[a][b] * mjet.dg[i][a][b] * mjet.ginv[i][j]
                        - mjet.ginv[i][a] * mjet.dg[i][a][b] * mjet.ginv[b][j];
                }
            }
            div += c * jet.w[j] + mjet.ginv[i][j] * jet.d1[i][j];
        }
    }
    Ok(-div)
}

/// Codifferential of a 2-form from its values and first derivatives:
/// (δF)_k = −g_{kj} (1/√g) ∂_i(√g g^{ia} g^{jb} F_{ab}).
pub fn codifferential_two_form(
    mjet: &MetricJet3,
    f: &[[Complex64; 3]; 3],
    df: &[[[Complex64; 3]; 3]; 3],
) -> [Complex64; 3] {
    let dginv = dginv_of(mjet);
    let dsqrt = dsqrtg_of(mjet);
    let mut up = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    s += (dsqrt[i] * mjet.ginv[i][a] * mjet.ginv[j][b]
                        + mjet.sqrt_det * dginv[i][i][a] * mjet.ginv[j][b]
                        + mjet.sqrt_det * mjet.ginv[i][a] * dginv[i][j][b])
                        * f[a][b]
                        + mjet.sqrt_det * mjet.ginv[i][a] * mjet.ginv[j][b] * df[i][a][b];
                }
            }
        }
        up[j] = -s / mjet.sqrt_det;
    }
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        for j in 0..3 {
            out[k] += mjet.g[k][j] * up[j];
        }
    }
    out
}

/// δ(dω): the curl-curl part of the Hodge Laplacian.
pub fn delta_d(metric: &MetricField3, jet: &OneFormJet, p: ChartPoint3) -> Result<[Complex64; 3], FormsError> {
    let mjet = metric.jet(p)?;
    let mut f = [[Complex64::new(0.0, 0.0); 3]; 3];
    let mut df = [[[Complex64::new(0.0, 0.0); 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            f[a][b] = jet.d1[a][b] - jet.d1[b][a];
            for i in 0..3 {
                df[i][a][b] = jet.d2[i][a][b] - jet.d2[i][b][a];
            }
        }
    }
    Ok(codifferential_two_form(&mjet, &f, &df))
}

/// d(δω): the gradient-of-divergence part of the Hodge Laplacian. Equals
/// −d(∇_iω^i) with this crate's codifferential sign.
pub fn d_codifferential(
    metric: &MetricField3,
    jet: &OneFormJet,
    p: ChartPoint3,
) -> Result<[Complex64; 3], FormsError> {
    let mjet = metric.jet(p)?;
    let dginv = dginv_of(&mjet);
    let dsqrt = dsqrtg_of(&mjet);
    let d2ginv = d2ginv_of(&mjet, &dginv);
    let d2sqrt = d2sqrtg_of(&mjet, &dsqrt);
    let mut d_delta = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        // ∂_i [ (1/√g) ∂_a(√g g^{ab} ω_b) ]
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                let t1 = dsqrt[a] * mjet.ginv[a][b] + mjet.sqrt_det * dginv[a][a][b];
                let dt1 = d2sqrt[i][a] * mjet.ginv[a][b]
                    + dsqrt[a] * dginv[i][a][b]
                    + dsqrt[i] * dginv[a][a][b]
                    + mjet.sqrt_det * d2ginv[i][a][a][b];
                let inv = 1.0 / mjet.sqrt_det;
                let dinv = -dsqrt[i] / (mjet.sqrt_det * mjet.sqrt_det);
                s += dinv * (t1 * jet.w[b] + mjet.sqrt_det * mjet.ginv[a][b] * jet.d1[a][b])
                    + inv
                        * (dt1 * jet.w[b]
                            + t1 * jet.d1[i][b]
                            + dsqrt[i] * mjet.ginv[a][b] * jet.d1[a][b]
                            + mjet.sqrt_det * dginv[i][a][b] * jet.d1[a][b]
                            + mjet.sqrt_det * mjet.ginv[a][b] * jet.d2[i][a][b]);
            }
        }
        d_delta[i] = -s;
    }
    Ok(d_delta)
}

/// Hodge Laplacian on 1-forms: Δ_H ω = δdω + dδω. Needs second derivatives.
pub fn hodge_laplacian(
    metric: &MetricField3,
    jet: &OneFormJet,
    p: ChartPoint3,
) -> Result<[Complex64; 3], FormsError> {
    let dd = delta_d(metric, jet, p)?;
    let dc = d_codifferential(metric, jet, p)?;
    Ok(std::array::from_fn(|i| dd[i] + dc[i]))
}

/// Rough (connection) Laplacian ∇^i∇_i ω_j, from covariant derivatives.
pub fn rough_laplacian(
    metric: &MetricField3,
    jet: &OneFormJet,
    p: ChartPoint3,
) -> Result<[Complex64; 3], FormsError> {
    let mjet = metric.jet(p)?;
    // ∇_i ω_j = ∂_i ω_j − Γ^l_{ij} ω_l
    // ∇_k ∇_i ω_j = ∂_k(∇_i ω_j) − Γ^m_{ki} ∇_m ω_j − Γ^m_{kj} ∇_i ω_m
    let cov1 = |i: usize, j: usize| -> Complex64 {
        let mut s = jet.d1[i][j];
        for l in 0..3 {
            s -= mjet.gamma[l][i][j] * jet.w[l];
        }
        s
    };
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            for i in 0..3 {
                // ∂_k (∇_i ω_j)
                let mut dk = jet.d2[k][i][j];
                for l in 0..3 {
                    dk -= mjet.dgamma[k][l][i][j] * jet.w[l] + mjet.gamma[l][i][j] * jet.d1[k][l];
                }
                let mut cov2 = dk;
                for m in 0..3 {
                    cov2 -= mjet.gamma[m][k][i] * cov1(m, j) + mjet.gamma[m][k][j] * cov1(i, m);
                }
                s += mjet.ginv[k][i] * cov2;
            }
        }
        out[j] = s;
    }
    Ok(out)
}

fn dginv_of(mjet: &MetricJet3) -> [[[f64; 3]; 3]; 3] {
    let mut dginv = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s -= mjet.ginv[i][a] * mjet.dg[k][a][b] * mjet.ginv[b][j];
                    }
                }
                dginv[k][i][j] = s;
            }
        }
    }
    dginv
}

fn d2ginv_of(mjet: &MetricJet3, dginv: &[[[f64; 3]; 3]; 3]) -> [[[[f64; 3]; 3]; 3]; 3] {
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            s -= dginv[k][i][a] * mjet.dg[l][a][b] * mjet.ginv[b][j]
                                + mjet.ginv[i][a] * mjet.d2g[k][l][a][b] * mjet.ginv[b][j]
                                + mjet.ginv[i][a] * mjet.dg[l][a][b] * dginv[k][b][j];
                        }
                    }
                    out[k][l][i][j] = s;
                }
            }
        }
    }
    out
}

fn dsqrtg_of(mjet: &MetricJet3) -> [f64; 3] {
    let mut d = [0.0; 3];
    for k in 0..3 {
        let mut tr = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                tr += mjet.ginv[a][b] * mjet.dg[k][a][b];
            }
        }
        d[k] = 0.5 * mjet.sqrt_det * tr;
    }
    d
}

fn d2sqrtg_of(mjet: &MetricJet3, dsqrt: &[f64; 3]) -> [[f64; 3]; 3] {
    let dginv = dginv_of(mjet);
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            let mut tr_l = 0.0;
            let mut dtr = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    tr_l += mjet.ginv[a][b] * mjet.dg[l][a][b];
                    dtr += dginv[k][a][b] * mjet.dg[l][a][b]
                        + mjet.ginv[a][b] * mjet.d2g[k][l][a][b];
                }
            }
            out[k][l] = 0.5 * (dsqrt[k] * tr_l + mjet.sqrt_det * dtr);
        }
    }
    out
}

/// 4D Lie derivative of a 2-form along a vector field with exact derivatives:
/// (L_K F)_{ij} = K^k ∂_k F_{ij} + F_{kj} ∂_i K^k + F_{ik} ∂_j K^k.
pub fn lie_derivative_4d(
    fjet: &TwoForm4Jet,
    k_val: &[f64; 4],
    dk: &[[f64; 4]; 4], // dk[i][k] = ∂_i K^k
) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += k_val[k] * fjet.d1[k][i][j] + fjet.f[k][j] * dk[i][k] + fjet.f[i][k] * dk[j][k];
            }
            out[i][j] = s;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// sphere quadrature
// ---------------------------------------------------------------------------

/// Nodes on a coordinate sphere: Gauss-Legendre in cos θ × uniform in φ.
/// Weights are flat-measure (they sum to 4πr²); metric area corrections are
/// applied at integrand time.
#[derive(Clone, Debug, Serialize)]
pub struct SphereQuadrature {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// (point, flat weight) pairs
    pub nodes: Vec<([f64; 3], f64)>,
    /// exact for spherical polynomials up to this degree
    pub exactness_degree: usize,
}

impl SphereQuadrature {
    pub fn new(radius: f64, n_theta: usize, n_phi: usize) -> Self {
        let (xi, glw) = gauss_legendre(n_theta);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for j in 0..n_theta {
            let ct = xi[j];
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..n_phi {
                let ph = (k as f64 + 0.5) * dphi;
                let p = [radius * st * ph.cos(), radius * st * ph.sin(), radius * ct];
                nodes.push((p, glw[j] * dphi * radius * radius));
            }
        }
        SphereQuadrature {
            radius,
            n_theta,
            n_phi,
            nodes,
            exactness_degree: (2 * n_theta - 1).min(n_phi - 1),
        }
    }

    pub fn default_for(radius: f64) -> Self {
        Self::new(radius, 64, 128)
    }
}

/// ∫_{S_r} f dσ_g: flat weights times the metric area density √det h / r²
/// (h = induced metric on the coordinate sphere).
pub fn sphere_integral(
    integrand: impl Fn(ChartPoint3) -> Complex64 + Sync,
    metric: &MetricField3,
    quad: &SphereQuadrature,
) -> Result<Complex64, FormsError> {
    if quad.nodes.is_empty() {
        return Err(FormsError::EmptyQuadrature);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (p, w) in &quad.nodes {
        let dens = area_density_ratio(metric, *p)?;
        total += integrand(*p) * *w * dens;
    }
    Ok(total)
}

/// √det h(p) / r² for the coordinate sphere through p.
pub fn area_density_ratio(metric: &MetricField3, p: ChartPoint3) -> Result<f64, FormsError> {
    let mjet = metric.jet(p)?;
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    // two flat tangent vectors to the sphere at p
    let n = [p[0] / r, p[1] / r, p[2] / r];
    let mut t1 = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = t1[0] * n[0] + t1[1] * n[1] + t1[2] * n[2];
    for i in 0..3 {
        t1[i] -= c * n[i];
    }
    let n1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    for v in t1.iter_mut() {
        *v /= n1;
    }
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    let dot = |a: &[f64; 3], b: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += mjet.g[i][j] * a[i] * b[j];
            }
        }
        s
    };
    let h11 = dot(&t1, &t1);
    let h12 = dot(&t1, &t2);
    let h22 = dot(&t2, &t2);
    Ok((h11 * h22 - h12 * h12).sqrt())
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on
/// Legendre polynomials.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, xi);
            let dx = p / dp;
            xi -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, xi);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    (x, w)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

// ---------------------------------------------------------------------------
// named fields
// ---------------------------------------------------------------------------

/// The ABC curl eigenfield (A = B = C = 1): *dω = ω on flat space.
pub fn abc_field() -> OneForm3 {
    OneForm3::real("abc", |p| {
        let [x, y, z] = *p;
        [z.sin() + y.cos(), x.sin() + z.cos(), y.sin() + x.cos()]
    })
}

fn spherical_j1(z: D3) -> D3 {
    z.sin() / (z * z) - z.cos() / z
}

/// Chandrasekhar–Kendall l = 1 curl eigenfield with eigenvalue `a`, regular at
/// the origin, components O(1/r) at infinity. `axis` 0,1,2 selects the real
/// m ∈ {+1, −1, 0} harmonic (x, y, z respectively).
fn ck_l1(a: f64, axis: usize) -> OneForm3 {
    OneForm3::real(format!("ck:l=1,axis={axis},a={a}"), move |p| {
        let r = crate::dual::radius(p);
        let f = spherical_j1(r * a) / r;
        // f'(r) with j1'(s) = sin s/s + 2 cos s/s² − 2 sin s/s³
        let s = r * a;
        let j1p = s.sin() / s + 2.0 * s.cos() / (s * s) - 2.0 * s.sin() / (s * s * s);
        let fp = (j1p * a * r - spherical_j1(s)) / (r * r);
        let u = p[axis];
        // T = f ê_axis × x, S = a⁻¹ ∇×T; closed forms verified against a
        // symbolic curl oracle
        let e1 = (axis + 1) % 3;
        let e2 = (axis + 2) % 3;
        let mut t = [D3::constant(0.0); 3];
        t[e1] = -f * p[e2];
        t[e2] = f * p[e1];
        let mut sv = [D3::constant(0.0); 3];
        let quer = p[e1] * p[e1] + p[e2] * p[e2];
        sv[axis] = (f * 2.0 + fp * quer / r) / a;
        sv[e1] = -(fp * u * p[e1] / r) / a;
        sv[e2] = -(fp * u * p[e2] / r) / a;
        [t[0] + sv[0], t[1] + sv[1], t[2] + sv[2]]
    })
}

/// Build a curl eigenfield exemplar; l = 1 is implemented, with m ∈ {−1,0,1}.
pub fn make_ck_field(a: f64, l: i64, m: i64) -> Result<OneForm3, FormsError> {
    if a == 0.0 {
        return Err(FormsError::InvalidMode(l, m, "eigenvalue a must be nonzero".into()));
    }
    if l < 1 {
        return Err(FormsError::InvalidMode(l, m, "l must be a positive integer".into()));
    }
    if m.abs() > l {
        return Err(FormsError::InvalidMode(l, m, "|m| > l".into()));
    }
    if l != 1 {
        return Err(FormsError::InvalidMode(l, m, "only the l = 1 family is implemented".into()));
    }
    let axis = match m {
        0 => 2,
        1 => 0,
        -1 => 1,
        _ => unreachable!(),
    };
    Ok(ck_l1(a, axis))
}

/// Mirror of a field under z-reflection: pullback R*ω with R = diag(1,1,−1).
/// Flips the curl eigenvalue sign.
pub fn mirrored(form: &OneForm3) -> OneForm3 {
    let re = form.re.clone();
    let im = form.im.clone();
    let refl = |f: Evaluator3| -> Evaluator3 {
        Arc::new(move |p: &[D3; 3]| {
            let q = [p[0], p[1], -p[2]];
            let v = f(&q);
            [v[0], v[1], -v[2]]
        })
    };
    OneForm3 {
        name: format!("mirror({})", form.name),
        re: refl(re),
        im: im.map(refl),
    }
}

/// Field registry for the CLI: `abc`, `ck:l=1,m=0,a=1.0`, `zero`, `dx`.
pub fn field_by_name(spec: &str) -> Result<OneForm3, FormsError> {
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
        "abc" => Ok(abc_field()),
        "ck" => make_ck_field(get("a", 1.0), get("l", 1.0) as i64, get("m", 0.0) as i64),
        "zero" => Ok(OneForm3::real("zero", |_| [D3::constant(0.0); 3])),
        "dx" => Ok(OneForm3::real("dx", |_| {
            [D3::constant(1.0), D3::constant(0.0), D3::constant(0.0)]
        })),
        other => Err(FormsError::UnknownField(other.to_string())),
    }
}
