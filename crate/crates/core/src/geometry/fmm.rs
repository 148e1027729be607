//! First-order fast marching on a Cartesian grid, the fallback/cross-check
//! path for the distance field.
//!
//! Valid for conformally flat metrics g = φ(x) δ (which covers every metric in
//! the registry): the eikonal equation |∇d|_g = 1 becomes |∇d|_euclid = √φ.

use super::{ChartPoint3, DistanceJet, GeometryError, MetricField3};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct HeapEntry {
    t: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on t
        other.t.partial_cmp(&self.t).unwrap_or(Ordering::Equal)
    }
}

fn slowness(metric: &MetricField3, p: ChartPoint3) -> Result<f64, GeometryError> {
    let jet = metric.jet(p)?;
    for i in 0..3 {
        for j in 0..3 {
            if i != j && jet.g[i][j].abs() > 1e-10 * jet.g[i][i].abs() {
                return Err(GeometryError::Admissibility(
                    "fast-marching fallback requires a conformally flat metric".into(),
                ));
            }
        }
    }
    Ok(jet.g[0][0].sqrt())
}

/// Distance from the sphere |x| = R to `x` by fast marching on a box grid
/// enclosing both. First-order accurate; used as a cross-check oracle.
pub fn fmm_distance(
    metric: &MetricField3,
    radius: f64,
    x: ChartPoint3,
) -> Result<DistanceJet, GeometryError> {
    let rx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let pad = 1.15 * rx.max(radius * 1.2);
    let n = 96usize;
    let h = 2.0 * pad / (n as f64 - 1.0);
    let coord = |k: usize| -> f64 { -pad + h * k as f64 };
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let total = n * n * n;
    let mut t = vec![f64::INFINITY; total];
    let mut accepted = vec![false; total];
    let mut heap = BinaryHeap::new();

    // initialize the band of cells straddling the sphere with the local exact
    // distance n(q)·(|q|−R)
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let q = [coord(i), coord(j), coord(k)];
                let rq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                if (rq - radius).abs() <= 1.8 * h && rq >= radius {
                    let s = slowness(metric, q)?;
                    let d0 = s * (rq - radius);
                    let id = idx(i, j, k);
                    t[id] = d0;
                    heap.push(HeapEntry { t: d0, idx: id });
                }
            }
        }
    }

    let neighbors = |i: usize, j: usize, k: usize| -> [(usize, usize, usize); 6] {
        [
            (i.wrapping_sub(1), j, k),
            (i + 1, j, k),
            (i, j.wrapping_sub(1), k),
            (i, j + 1, k),
            (i, j, k.wrapping_sub(1)),
            (i, j, k + 1),
        ]
    };

    while let Some(HeapEntry { t: tv, idx: id }) = heap.pop() {
        if accepted[id] || tv > t[id] {
            continue;
        }
        accepted[id] = true;
        let (i, j, k) = (id / (n * n), id / n % n, id % n);
        for (ni, nj, nk) in neighbors(i, j, k) {
            if ni >= n || nj >= n || nk >= n {
                continue;
            }
            let nid = idx(ni, nj, nk);
            if accepted[nid] {
                continue;
            }
            let q = [coord(ni), coord(nj), coord(nk)];
            let rq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
            if rq < radius {
                continue;
            }
            let s = slowness(metric, q)?;
            // upwind quadratic update
            let mut mins = [f64::INFINITY; 3];
            let dirs: [[(usize, usize, usize); 2]; 3] = [
                [(ni.wrapping_sub(1), nj, nk), (ni + 1, nj, nk)],
                [(ni, nj.wrapping_sub(1), nk), (ni, nj + 1, nk)],
                [(ni, nj, nk.wrapping_sub(1)), (ni, nj, nk + 1)],
            ];
            for (d, pair) in dirs.iter().enumerate() {
                for &(a, b, c) in pair {
                    if a < n && b < n && c < n {
                        let v = t[idx(a, b, c)];
                        if accepted[idx(a, b, c)] && v < mins[d] {
                            mins[d] = v;
                        }
                    }
                }
            }
            let mut vals: Vec<f64> = mins.iter().cloned().filter(|v| v.is_finite()).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if vals.is_empty() {
                continue;
            }
            let rhs = s * h;
            let mut tnew = vals[0] + rhs;
            for m in 2..=vals.len() {
                let sel = &vals[..m];
                let sum: f64 = sel.iter().sum();
                let sq: f64 = sel.iter().map(|v| v * v).sum();
                let mf = m as f64;
                let disc = sum * sum - mf * (sq - rhs * rhs);
                if disc >= 0.0 {
                    let cand = (sum + disc.sqrt()) / mf;
                    if cand >= sel[m - 1] {
                        tnew = cand;
                    }
                }
            }
            if tnew < t[nid] {
                t[nid] = tnew;
                heap.push(HeapEntry { t: tnew, idx: nid });
            }
        }
    }

    // trilinear interpolation at x
    let fi = (x[0] + pad) / h;
    let fj = (x[1] + pad) / h;
    let fk = (x[2] + pad) / h;
    let (i0, j0, k0) = (fi.floor() as usize, fj.floor() as usize, fk.floor() as usize);
    let (di, dj, dk) = (fi - i0 as f64, fj - j0 as f64, fk - k0 as f64);
    let mut d = 0.0;
    for (ii, wi) in [(i0, 1.0 - di), (i0 + 1, di)] {
        for (jj, wj) in [(j0, 1.0 - dj), (j0 + 1, dj)] {
            for (kk, wk) in [(k0, 1.0 - dk), (k0 + 1, dk)] {
                let v = t[idx(ii, jj, kk)];
                if !v.is_finite() {
                    return Err(GeometryError::GeodesicNoConvergence(
                        "fast-marching front did not reach the point".into(),
                    ));
                }
                d += wi * wj * wk * v;
            }
        }
    }
    Ok(DistanceJet {
        d,
        grad: [f64::NAN; 3],
        hess: [[f64::NAN; 3]; 3],
        eikonal_residual: f64::NAN,
        foot: [f64::NAN; 3],
    })
}
