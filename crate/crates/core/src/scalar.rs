//! Scalars for forward-mode differentiation of the metric fields.
//!
//! Metric families, diffeomorphisms and the straightening map are written
//! once, generically over [`Scalar`]. Evaluating them on [`Dual`] numbers
//! seeded in the three spatial directions yields exact first derivatives;
//! nesting `Dual<Dual<f64>>` yields exact second derivatives.

use core::ops::{Add, Div, Mul, Neg, Sub};

/// Number of spatial slots carried by every dual number.
pub const SPACE: usize = 3;

pub trait Scalar:
    Copy
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// The real part, with all infinitesimals dropped.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Dual number with one infinitesimal per spatial coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub du: [S; SPACE],
}

impl<S: Scalar> Dual<S> {
    pub fn constant(re: S) -> Self {
        Dual {
            re,
            du: [S::zero(); SPACE],
        }
    }

    /// The variable `x_k` with value `re`.
    pub fn variable(re: S, k: usize) -> Self {
        let mut du = [S::zero(); SPACE];
        du[k] = S::one();
        Dual { re, du }
    }

    #[inline]
    fn chain(self, f: S, df: S) -> Self {
        Dual {
            re: f,
            du: self.du.map(|d| d * df),
        }
    }
}

/// Seeds a spatial point so that evaluation yields the gradient.
pub fn seed<S: Scalar>(x: &[S; SPACE]) -> [Dual<S>; SPACE] {
    core::array::from_fn(|k| Dual::variable(x[k], k))
}

/// Seeds a plain point at second order: `value`, `gradient` and `hessian`
/// of any function evaluated on the result are available through [`Jet2`].
pub fn seed2(x: &[f64; SPACE]) -> [Dual<Dual<f64>>; SPACE] {
    core::array::from_fn(|k| {
        let inner = Dual::variable(x[k], k);
        let mut du = [Dual::constant(0.0); SPACE];
        du[k] = Dual::constant(1.0);
        Dual { re: inner, du }
    })
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; SPACE],
    pub hess: [[f64; SPACE]; SPACE],
}

impl From<Dual<Dual<f64>>> for Jet2 {
    fn from(d: Dual<Dual<f64>>) -> Self {
        Jet2 {
            value: d.re.re,
            grad: d.re.du,
            hess: core::array::from_fn(|i| d.du[i].du),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual {
            re: self.re + o.re,
            du: core::array::from_fn(|k| self.du[k] + o.du[k]),
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual {
            re: self.re - o.re,
            du: core::array::from_fn(|k| self.du[k] - o.du[k]),
        }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re * o.re,
            du: core::array::from_fn(|k| self.du[k] * o.re + self.re * o.du[k]),
        }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            du: self.du.map(|d| -d),
        }
    }
}

impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Dual {
            re: self.re * c,
            du: self.du.map(|d| d * c),
        }
    }
}

impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, c: f64) -> Self {
        Dual {
            re: self.re + c,
            du: self.du,
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(v: f64) -> Self {
        Dual::constant(S::cst(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, (r * 2.0).recip())
    }
    fn recip(self) -> Self {
        let r = self.re.recip();
        self.chain(r, -(r * r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: &[S; 3]) -> S {
        // x0 * exp(x1) / sqrt(1 + x2^2)
        x[0] * x[1].exp() / (x[2].square() + 1.0).sqrt()
    }

    #[test]
    fn gradient_matches_closed_form() {
        let x = [0.3, -0.2, 0.7];
        let d = f(&seed(&x));
        let s = (1.0 + x[2] * x[2]).sqrt();
        let e = x[1].exp();
        assert!((d.re - x[0] * e / s).abs() < 1e-15);
        assert!((d.du[0] - e / s).abs() < 1e-15);
        assert!((d.du[1] - x[0] * e / s).abs() < 1e-15);
        assert!((d.du[2] + x[0] * e * x[2] / (s * s * s)).abs() < 1e-15);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let x = [0.3, -0.2, 0.7];
        let jet = Jet2::from(f(&seed2(&x)));
        let h = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut pp = x;
                let mut pm = x;
                let mut mp = x;
                let mut mm = x;
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let fd = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h);
                assert!((jet.hess[i][j] - fd).abs() < 1e-6, "{i}{j}");
            }
        }
        assert!((jet.hess[0][1] - jet.hess[1][0]).abs() < 1e-15);
    }
}
