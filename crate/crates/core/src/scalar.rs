//! Scalar abstractions shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Error-free sum: returns `(s, e)` with `s + e == a + b` exactly.
#[inline]
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free product via fused multiply-add.
#[inline]
pub fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Unevaluated sum `hi + lo` carrying roughly twice the working precision.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Real> DoubleDouble<T> {
    pub fn new(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn zero() -> Self {
        Self::new(T::zero())
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = two_sum(p, e);
        Self { hi, lo }
    }

    pub fn to_real(self) -> T {
        self.hi + self.lo
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexDD<T> {
    pub re: DoubleDouble<T>,
    pub im: DoubleDouble<T>,
}

impl<T: Real> ComplexDD<T> {
    pub fn from_complex(z: num_complex::Complex<T>) -> Self {
        Self { re: DoubleDouble::new(z.re), im: DoubleDouble::new(z.im) }
    }

    pub fn zero() -> Self {
        Self { re: DoubleDouble::zero(), im: DoubleDouble::zero() }
    }

    pub fn add(self, o: Self) -> Self {
        Self { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn mul(self, o: Self) -> Self {
        Self {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn to_complex(self) -> num_complex::Complex<T> {
        num_complex::Complex::new(self.re.to_real(), self.im.to_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_prod_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let (p, e) = two_prod(a, a);
        // (1+eps)^2 = 1 + 2eps + eps^2; the eps^2 part is lost in p.
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn double_double_recovers_cancellation() {
        let big = DoubleDouble::new(1e16_f64);
        let one = DoubleDouble::new(1.0);
        let s = big.add(one).sub(big);
        assert_eq!(s.to_real(), 1.0);
    }
}
