//! Banded matrices with measure-weighted adjoints, a partial-pivoting banded
//! LU, inverse iteration for extreme singular values, and a dense bridge to
//! nalgebra used by the small-size SVD oracles.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular pivot at column {0}")]
    SingularPivot(usize),
    #[error("iteration failed to converge after {0} steps")]
    NoConvergence(usize),
}

/// Row-major banded storage: entry (i, j) lives at `data[i*w + (j + kl - i)]`
/// for `i - kl <= j <= i + ku`.
#[derive(Clone, Debug)]
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let w = self.kl + self.ku + 1;
        if j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n {
            Some(i * w + (j + self.kl - i))
        } else {
            None
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).unwrap_or_else(|| {
            panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku)
        });
        self.data[k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).unwrap_or_else(|| {
            panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku)
        });
        self.data[k] += v;
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Banded::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Banded::zeros(d.len(), 0, 0);
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut s = 0.0;
            for j in lo..=hi {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn transpose(&self) -> Banded {
        let mut t = Banded::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    t.set(j, i, v);
                }
            }
        }
        t
    }

    /// Adjoint with respect to the diagonal measure `m`: `A† = M⁻¹ Aᵀ M`.
    pub fn adjoint_measure(&self, m: &[f64]) -> Banded {
        let mut t = self.transpose();
        for i in 0..self.n {
            let lo = i.saturating_sub(t.kl);
            let hi = (i + t.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = t.get(i, j);
                if v != 0.0 {
                    t.set(i, j, v * m[j] / m[i]);
                }
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Banded {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &Banded) -> Banded {
        assert_eq!(self.n, other.n);
        let kl = self.kl.max(other.kl);
        let ku = self.ku.max(other.ku);
        let mut out = Banded::zeros(self.n, kl, ku);
        for i in 0..self.n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j) + other.get(i, j);
                if v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Banded) -> Banded {
        self.add(&other.scaled(-1.0))
    }

    pub fn mul(&self, other: &Banded) -> Banded {
        assert_eq!(self.n, other.n);
        let kl = (self.kl + other.kl).min(self.n - 1);
        let ku = (self.ku + other.ku).min(self.n - 1);
        let mut out = Banded::zeros(self.n, kl, ku);
        for i in 0..self.n {
            let klo = i.saturating_sub(self.kl);
            let khi = (i + self.ku).min(self.n - 1);
            for k in klo..=khi {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let jlo = k.saturating_sub(other.kl);
                let jhi = (k + other.ku).min(self.n - 1);
                for j in jlo..=jhi {
                    let b = other.get(k, j);
                    if b != 0.0 {
                        out.add_to(i, j, a * b);
                    }
                }
            }
        }
        out
    }

    /// Left/right multiplication by diagonal matrices.
    pub fn scale_rows(&self, d: &[f64]) -> Banded {
        let mut out = self.clone();
        let w = self.kl + self.ku + 1;
        for i in 0..self.n {
            for k in 0..w {
                out.data[i * w + k] *= d[i];
            }
        }
        out
    }

    pub fn scale_cols(&self, d: &[f64]) -> Banded {
        let mut out = self.clone();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = out.get(i, j);
                if v != 0.0 {
                    out.set(i, j, v * d[j]);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Banded) -> Banded {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Largest singular value estimated by power iteration on AᵀA.
    pub fn norm2_est(&self) -> f64 {
        let mut x: Vec<f64> = (0..self.n).map(|i| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 + 0.5).collect();
        normalize(&mut x);
        let t = self.transpose();
        let mut s = 0.0;
        for _ in 0..60 {
            let mut y = t.matvec(&self.matvec(&x));
            s = normalize(&mut y).sqrt();
            x = y;
        }
        s
    }

    /// Coordinate-triplet lines `row col value` for external cross-checks.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push_str(&format!("{} {} {:.17e}\n", i, j, v));
                }
            }
        }
        out
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    let n = n2.sqrt();
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
    n
}

/// A discretized operator together with its measure (quadrature weights of the
/// L² inner product it is meant to be symmetric for) and a label.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub mat: Banded,
    pub measure: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub defect: f64,
    pub scale: f64,
    pub relative: f64,
}

impl OperatorMatrix {
    pub fn new(mat: Banded, measure: Vec<f64>, label: impl Into<String>) -> Self {
        assert_eq!(mat.n, measure.len());
        OperatorMatrix { mat, measure, label: label.into() }
    }

    pub fn n(&self) -> usize {
        self.mat.n
    }

    /// ‖A − A†‖ / ‖A‖ with the measure-weighted adjoint.
    pub fn symmetry_report(&self) -> SymmetryReport {
        let adj = self.mat.adjoint_measure(&self.measure);
        let defect = self.mat.sub(&adj).norm2_est();
        let scale = self.mat.norm2_est();
        SymmetryReport { defect, scale, relative: defect / scale.max(1e-300) }
    }

    /// Measure-symmetrized matrix `S = M^{1/2} A M^{-1/2}` (plain ℓ²-symmetric
    /// when A is measure-self-adjoint).
    pub fn symmetrized(&self) -> Banded {
        let d: Vec<f64> = self.measure.iter().map(|m| m.sqrt()).collect();
        let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        self.mat.scale_rows(&d).scale_cols(&dinv)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(&self.measure).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).sqrt()
    }
}

/// Banded LU with partial pivoting (LAPACK gbtrf layout: `kl` extra
/// superdiagonals for fill).
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>, // (2*kl + ku + 1) x n, column-major bands
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &Banded) -> Result<Self, LinalgError> {
        let n = a.n;
        let kl = a.kl;
        let ku = a.ku;
        let kv = kl + ku; // width above diagonal in working storage
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        // ab[kv + i - j + kl*0 ... ] ; store A(i,j) at ab[(kl + ku + i - j) + j*ldab]
        for j in 0..n {
            let ilo = j.saturating_sub(ku);
            let ihi = (j + kl).min(n - 1);
            for i in ilo..=ihi {
                ab[(kv + i - j) + j * ldab] = a.get(i, j);
            }
        }
        let mut piv = vec![0usize; n];
        for j in 0..n {
            // pivot search in column j over rows j..=min(j+kl, n-1)
            let ihi = (j + kl).min(n - 1);
            let mut p = j;
            let mut pmax = ab[(kv + j - j) + j * ldab].abs();
            for i in (j + 1)..=ihi {
                let v = ab[(kv + i - j) + j * ldab].abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(LinalgError::SingularPivot(j));
            }
            piv[j] = p;
            // swap rows j and p across the active band columns
            if p != j {
                let jhi = (j + kv).min(n - 1);
                for c in j..=jhi {
                    let a1 = (kv + j).wrapping_sub(c) + c * ldab;
                    let a2 = (kv + p).wrapping_sub(c) + c * ldab;
                    ab.swap(a1, a2);
                }
            }
            let pivval = ab[kv + j * ldab];
            for i in (j + 1)..=ihi {
                let l = ab[(kv + i - j) + j * ldab] / pivval;
                ab[(kv + i - j) + j * ldab] = l;
                let jhi = (j + kv).min(n - 1);
                for c in (j + 1)..=jhi {
                    let up = ab[(kv + j) - c + c * ldab];
                    ab[(kv + i) - c + c * ldab] -= l * up;
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let ldab = 2 * self.kl + self.ku + 1;
        let mut x = b.to_vec();
        // forward, applying pivots
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let ihi = (j + self.kl).min(n - 1);
            for i in (j + 1)..=ihi {
                x[i] -= self.ab[(kv + i - j) + j * ldab] * x[j];
            }
        }
        // back substitution
        for j in (0..n).rev() {
            let jhi = (j + kv).min(n - 1);
            let mut s = x[j];
            for c in (j + 1)..=jhi {
                s -= self.ab[(kv + j) - c + c * ldab] * x[c];
            }
            x[j] = s / self.ab[kv + j * ldab];
        }
        x
    }
}

/// Number of eigenvalues of the symmetric banded matrix `s` strictly below
/// `mu`, by the inertia of the unpivoted LDLᵀ factorization of `s − mu I`.
/// Returns `None` on a pivot breakdown (retry with a perturbed `mu`).
fn eig_count_below_sym(s: &Banded, mu: f64) -> Option<usize> {
    let n = s.n;
    let kl = s.kl.max(s.ku);
    // working lower band copy of s - mu I
    let mut w = Banded::zeros(n, kl, kl);
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        for j in lo..=i {
            let v = if i == j { s.get(i, i) - mu } else { 0.5 * (s.get(i, j) + s.get(j, i)) };
            if v != 0.0 || i == j {
                w.set(i, j, v);
            }
        }
    }
    let scale = s.max_abs().max(mu.abs()).max(1e-300);
    let mut negatives = 0usize;
    for j in 0..n {
        let d = w.get(j, j);
        if d.abs() < 1e-14 * scale {
            return None;
        }
        if d < 0.0 {
            negatives += 1;
        }
        // rank-1 trailing update; column j stays untouched (the multipliers
        // are not needed for the inertia, and rows below still read it)
        let ihi = (j + kl).min(n - 1);
        for i in (j + 1)..=ihi {
            let lij = w.get(i, j) / d;
            if lij == 0.0 {
                continue;
            }
            for k in (j + 1)..=i {
                let v = w.get(i, k) - lij * w.get(k, j);
                w.set(i, k, v);
            }
        }
    }
    Some(negatives)
}

fn count_below(s: &Banded, mu: f64, scale: f64) -> usize {
    let mut shift = 0.0;
    loop {
        if let Some(c) = eig_count_below_sym(s, mu + shift) {
            return c;
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 8.0 };
    }
}

/// Smallest |eigenvalue| of a symmetric banded matrix by inertia bisection.
/// Robust for clustered spectra where inverse iteration stalls.
pub fn smallest_abs_eig_sym(s: &Banded) -> f64 {
    let scale = s.norm2_est().max(1e-300);
    let n_neg = count_below(s, 0.0, scale);
    // eigenvalue counts are monotone in mu: the k-th eigenvalue (1-based) is
    // the infimum of mu with count >= k
    let kth = |k: usize| -> f64 {
        // bracket
        let mut lo = -1.05 * scale;
        let mut hi = 1.05 * scale;
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if count_below(s, mid, scale) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let mut best = f64::INFINITY;
    if n_neg >= 1 {
        best = best.min(kth(n_neg).abs()); // largest eigenvalue below 0
    }
    if n_neg < s.n {
        best = best.min(kth(n_neg + 1).abs()); // smallest eigenvalue >= 0
    }
    best
}

fn is_symmetric(a: &Banded) -> bool {
    let scale = a.max_abs().max(1e-300);
    for i in 0..a.n {
        let lo = i.saturating_sub(a.kl);
        let hi = (i + a.ku).min(a.n - 1);
        for j in lo..=hi {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// Smallest singular value of `a`. Symmetric matrices go through inertia
/// bisection (exact for clustered spectra); small general matrices through the
/// dense SVD; large general matrices through inverse iteration on the normal
/// equations.
pub fn smallest_singular_value(a: &Banded) -> Result<f64, LinalgError> {
    if is_symmetric(a) {
        return Ok(smallest_abs_eig_sym(a));
    }
    if a.n <= 1500 {
        return Ok(dense_smin(a));
    }
    let lu = BandedLu::factor(a)?;
    let lut = BandedLu::factor(&a.transpose())?;
    let mut x: Vec<f64> =
        (0..a.n).map(|i| ((i * 2654435761 + 17) % 1000) as f64 / 1000.0 + 0.5).collect();
    normalize(&mut x);
    let mut prev = x.clone();
    for it in 0..5000 {
        let mut y = lu.solve(&lut.solve(&x));
        normalize(&mut y);
        let dot: f64 = y.iter().zip(&prev).map(|(a, b)| a * b).sum();
        let sgn = if dot < 0.0 { -1.0 } else { 1.0 };
        let diff: f64 =
            y.iter().zip(&prev).map(|(a, b)| (a * sgn - b) * (a * sgn - b)).sum::<f64>().sqrt();
        prev = y.clone();
        x = y;
        if diff < 1e-13 && it > 10 {
            break;
        }
    }
    let ax = a.matvec(&x);
    Ok(ax.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Dense SVD smallest singular value, used as the oracle at small sizes.
pub fn dense_smin(a: &Banded) -> f64 {
    let m = a.to_dense();
    let svd = m.svd(false, false);
    svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Deterministic seeded pseudo-random vector in [-1, 1]^n.
pub fn seeded_vector(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(n: usize) -> Banded {
        let mut a = Banded::zeros(n, 2, 1);
        for i in 0..n {
            a.set(i, i, 2.5 + (i as f64 * 0.37).sin());
            if i + 1 < n {
                a.set(i, i + 1, -1.0 + 0.1 * (i as f64).cos());
                a.set(i + 1, i, -0.8);
            }
            if i + 2 < n {
                a.set(i + 2, i, 0.3);
            }
        }
        a
    }

    #[test]
    fn lu_solve_matches_dense() {
        let a = sample(40);
        let lu = BandedLu::factor(&a).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.11).sin()).collect();
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        for i in 0..40 {
            assert_relative_eq!(r[i], b[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn band_product_matches_dense() {
        let a = sample(25);
        let b = sample(25).transpose();
        let c = a.mul(&b).to_dense();
        let cd = a.to_dense() * b.to_dense();
        assert!((c - cd).abs().max() < 1e-12);
    }

    #[test]
    fn smallest_singular_matches_dense_svd() {
        let a = sample(60);
        let s = smallest_singular_value(&a).unwrap();
        let sd = dense_smin(&a);
        assert_relative_eq!(s, sd, max_relative = 1e-9);
    }

    #[test]
    fn symmetric_bisection_matches_dense() {
        // symmetric indefinite with clustered small eigenvalues
        let n = 120;
        let mut a = Banded::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, ((i as f64 * 0.7).sin() * 2.0).round() / 2.0 + 0.013 * (i as f64).cos());
            if i + 1 < n {
                a.set(i, i + 1, -0.5);
                a.set(i + 1, i, -0.5);
            }
        }
        let s = smallest_abs_eig_sym(&a);
        let sd = dense_smin(&a);
        assert_relative_eq!(s, sd, max_relative = 1e-8, epsilon = 1e-12);
    }

    #[test]
    fn measure_adjoint_roundtrip() {
        let a = sample(20);
        let m: Vec<f64> = (0..20).map(|i| 1.0 + 0.1 * i as f64).collect();
        let adj = a.adjoint_measure(&m);
        let back = adj.adjoint_measure(&m);
        assert!((back.to_dense() - a.to_dense()).abs().max() < 1e-13);
    }
}
