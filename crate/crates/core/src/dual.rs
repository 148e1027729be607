//! Forward-mode dual numbers carrying value, gradient and Hessian.
//!
//! `Dual2<N>` propagates exact first and second partial derivatives with
//! respect to `N` chart coordinates through closed-form expressions. All
//! curvature tensors, form derivatives and field jets in this crate are built
//! on these, so identity residuals are limited only by round-off, never by
//! truncation error of numerical differentiation.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2<const N: usize> {
    pub val: f64,
    pub grad: [f64; N],
    /// Full symmetric storage, `hess[i][j] = d2/dx_i dx_j`.
    pub hess: [[f64; N]; N],
}

impl<const N: usize> Dual2<N> {
    pub const fn constant(v: f64) -> Self {
        Dual2 { val: v, grad: [0.0; N], hess: [[0.0; N]; N] }
    }

    /// The `i`-th chart coordinate with value `v`.
    pub fn variable(i: usize, v: f64) -> Self {
        let mut d = Self::constant(v);
        d.grad[i] = 1.0;
        d
    }

    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|r| r.iter().all(|h| h.is_finite()))
    }

    /// Lift `f` with derivatives `fp = f'(val)`, `fpp = f''(val)` through the
    /// chain rule.
    fn unary(self, f: f64, fp: f64, fpp: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.grad[i] = fp * self.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = fp * self.hess[i][j] + fpp * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos(), -self.val.sin())
    }

    pub fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin(), -self.val.cos())
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e, e)
    }

    pub fn ln(self) -> Self {
        self.unary(self.val.ln(), 1.0 / self.val, -1.0 / (self.val * self.val))
    }

    pub fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s, -0.25 / (s * self.val))
    }

    pub fn recip(self) -> Self {
        let v = self.val;
        self.unary(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.val;
        self.unary(v.powi(n), n as f64 * v.powi(n - 1), (n * (n - 1)) as f64 * v.powi(n - 2))
    }

    pub fn powf(self, c: f64) -> Self {
        let v = self.val;
        self.unary(v.powf(c), c * v.powf(c - 1.0), c * (c - 1.0) * v.powf(c - 2.0))
    }

    pub fn cosh(self) -> Self {
        self.unary(self.val.cosh(), self.val.sinh(), self.val.cosh())
    }

    pub fn sinh(self) -> Self {
        self.unary(self.val.sinh(), self.val.cosh(), self.val.sinh())
    }
}

/// Seed the chart coordinates of a point as dual variables.
pub fn seed<const N: usize>(p: [f64; N]) -> [Dual2<N>; N] {
    std::array::from_fn(|i| Dual2::variable(i, p[i]))
}

impl<const N: usize> Add for Dual2<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.val += rhs.val;
        for i in 0..N {
            out.grad[i] += rhs.grad[i];
            for j in 0..N {
                out.hess[i][j] += rhs.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Sub for Dual2<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Neg for Dual2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut out = self;
        out.val = -out.val;
        for i in 0..N {
            out.grad[i] = -out.grad[i];
            for j in 0..N {
                out.hess[i][j] = -out.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Mul for Dual2<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::constant(self.val * rhs.val);
        for i in 0..N {
            out.grad[i] = self.grad[i] * rhs.val + self.val * rhs.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = self.hess[i][j] * rhs.val
                    + self.val * rhs.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

impl<const N: usize> Div for Dual2<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Add<f64> for Dual2<N> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        let mut out = self;
        out.val += rhs;
        out
    }
}

impl<const N: usize> Sub<f64> for Dual2<N> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Mul<f64> for Dual2<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        let mut out = self;
        out.val *= rhs;
        for i in 0..N {
            out.grad[i] *= rhs;
            for j in 0..N {
                out.hess[i][j] *= rhs;
            }
        }
        out
    }
}

impl<const N: usize> Div<f64> for Dual2<N> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const N: usize> Add<Dual2<N>> for f64 {
    type Output = Dual2<N>;
    fn add(self, rhs: Dual2<N>) -> Dual2<N> {
        rhs + self
    }
}

impl<const N: usize> Sub<Dual2<N>> for f64 {
    type Output = Dual2<N>;
    fn sub(self, rhs: Dual2<N>) -> Dual2<N> {
        -rhs + self
    }
}

impl<const N: usize> Mul<Dual2<N>> for f64 {
    type Output = Dual2<N>;
    fn mul(self, rhs: Dual2<N>) -> Dual2<N> {
        rhs * self
    }
}

impl<const N: usize> Div<Dual2<N>> for f64 {
    type Output = Dual2<N>;
    fn div(self, rhs: Dual2<N>) -> Dual2<N> {
        rhs.recip() * self
    }
}

/// Euclidean radius `|x|` of a seeded point, as a dual scalar.
pub fn radius<const N: usize>(p: &[Dual2<N>; N]) -> Dual2<N> {
    let mut s = Dual2::constant(0.0);
    for c in p.iter() {
        s = s + *c * *c;
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(p: &[Dual2<3>; 3]) -> Dual2<3> {
        // x^2 sin(y) + exp(x z) / (1 + y^2) + sqrt(x^2 + 2)
        let [x, y, z] = *p;
        x * x * y.sin() + (x * z).exp() / (y * y + 1.0) + (x * x + 2.0).sqrt()
    }

    #[test]
    fn matches_central_differences() {
        let p0 = [0.7, -0.4, 1.1];
        let jet = f(&seed(p0));
        let h = 1e-5;
        for i in 0..3 {
            let mut pp = p0;
            let mut pm = p0;
            pp[i] += h;
            pm[i] -= h;
            let fd = (f(&seed(pp)).val - f(&seed(pm)).val) / (2.0 * h);
            assert_relative_eq!(jet.grad[i], fd, max_relative = 1e-8);
            for j in 0..3 {
                let mut ppp = pp;
                let mut ppm = pp;
                let mut pmp = pm;
                let mut pmm = pm;
                ppp[j] += h;
                ppm[j] -= h;
                pmp[j] += h;
                pmm[j] -= h;
                let fd2 = (f(&seed(ppp)).val - f(&seed(ppm)).val - f(&seed(pmp)).val
                    + f(&seed(pmm)).val)
                    / (4.0 * h * h);
                assert_relative_eq!(jet.hess[i][j], fd2, max_relative = 1e-4, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let jet = f(&seed([1.3, 0.2, -0.8]));
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(jet.hess[i][j], jet.hess[j][i], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn division_and_powers() {
        let p = seed::<2>([2.0, 3.0]);
        let g = p[0].powf(2.5) / p[1] - p[0].powi(3) * 0.125;
        let expect = 2.0_f64.powf(2.5) / 3.0 - 1.0;
        assert_relative_eq!(g.val, expect, max_relative = 1e-15);
        // d/dx: 2.5 x^1.5 / y - 0.375 x^2
        assert_relative_eq!(
            g.grad[0],
            2.5 * 2.0_f64.powf(1.5) / 3.0 - 0.375 * 4.0,
            max_relative = 1e-14
        );
    }
}
