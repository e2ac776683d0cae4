//! Scalar abstraction: the engine is generic over the underlying float type.
//!
//! Everything numeric is built on [`num_complex::Complex<T>`] with `T`
//! implementing [`QScalar`]. Concrete aliases for the common `f64`
//! instantiation live at the crate root.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable as the base type of the engine.
pub trait QScalar:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl QScalar for f32 {}
impl QScalar for f64 {}

/// Complex number over a [`QScalar`].
pub type Cx<T> = Complex<T>;

/// Convert an `f64` literal into `T`. Panics only if `T` cannot represent
/// any rounding of the value, which cannot happen for the supported types.
#[inline]
pub fn lit<T: QScalar>(v: f64) -> T {
    T::from_f64(v).expect("literal conversion")
}

/// `x + iy` shorthand.
#[inline]
pub fn cx<T: QScalar>(re: f64, im: f64) -> Cx<T> {
    Cx::new(lit(re), lit(im))
}

/// Real number lifted to the complex plane.
#[inline]
pub fn re<T: QScalar>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}

/// Relative distance `|x - y| / max(|x|, |y|, floor)`.
pub fn rel_err<T: QScalar>(x: Cx<T>, y: Cx<T>) -> T {
    let num = (x - y).norm();
    let den = x.norm().max(y.norm()).max(lit(1e-300));
    num / den
}

/// Running product with power-of-two renormalization so that very long
/// products neither underflow nor overflow intermediate storage.
#[derive(Clone, Debug)]
pub struct ScaledProduct<T: QScalar> {
    mantissa: Cx<T>,
    exp2: i64,
}

impl<T: QScalar> ScaledProduct<T> {
    const SHIFT: i32 = 60;

    pub fn one() -> Self {
        Self { mantissa: Cx::new(T::one(), T::zero()), exp2: 0 }
    }

    pub fn zero() -> Self {
        Self { mantissa: Cx::new(T::zero(), T::zero()), exp2: 0 }
    }

    #[inline]
    pub fn mul(&mut self, f: Cx<T>) {
        self.mantissa = self.mantissa * f;
        let m = self.mantissa.re.abs() + self.mantissa.im.abs();
        let hi: T = lit(2f64.powi(Self::SHIFT));
        let lo: T = lit(2f64.powi(-Self::SHIFT));
        if m > hi {
            self.mantissa = self.mantissa * lo;
            self.exp2 += Self::SHIFT as i64;
        } else if m < lo && m > T::zero() {
            self.mantissa = self.mantissa * hi;
            self.exp2 -= Self::SHIFT as i64;
        }
    }

    /// Collapse to a plain complex value (may round to 0 or infinity if the
    /// true magnitude is outside the representable range).
    pub fn value(&self) -> Cx<T> {
        let mut v = self.mantissa;
        let mut e = self.exp2;
        let hi: T = lit(2f64.powi(Self::SHIFT));
        let lo: T = lit(2f64.powi(-Self::SHIFT));
        while e >= Self::SHIFT as i64 {
            v = v * hi;
            e -= Self::SHIFT as i64;
        }
        while e <= -(Self::SHIFT as i64) {
            v = v * lo;
            e += Self::SHIFT as i64;
        }
        let rest: T = lit(2f64.powi(e as i32));
        v * rest
    }

    /// True if the accumulated mantissa picked up a NaN.
    pub fn is_nan(&self) -> bool {
        self.mantissa.re.is_nan() || self.mantissa.im.is_nan()
    }

    #[inline]
    pub fn div(&mut self, f: Cx<T>) {
        self.mantissa = self.mantissa / f;
        let m = self.mantissa.re.abs() + self.mantissa.im.abs();
        let hi: T = lit(2f64.powi(Self::SHIFT));
        let lo: T = lit(2f64.powi(-Self::SHIFT));
        if m > hi {
            self.mantissa = self.mantissa * lo;
            self.exp2 += Self::SHIFT as i64;
        } else if m < lo && m > T::zero() {
            self.mantissa = self.mantissa * hi;
            self.exp2 -= Self::SHIFT as i64;
        }
    }

    /// Multiply by another scaled product; exponents add, so ratios of
    /// astronomically large partial products stay representable.
    pub fn mul_scaled(&mut self, other: &ScaledProduct<T>) {
        self.mul(other.mantissa);
        self.exp2 += other.exp2;
    }

    /// Divide by another scaled product.
    pub fn div_scaled(&mut self, other: &ScaledProduct<T>) {
        self.div(other.mantissa);
        self.exp2 -= other.exp2;
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == T::zero() && self.mantissa.im == T::zero()
    }
}

/// Fixed-order pairwise summation; deterministic for a given slice and more
/// accurate than naive left-to-right accumulation on long sums.
pub fn pairwise_sum<T: QScalar>(vals: &[Cx<T>]) -> Cx<T> {
    match vals.len() {
        0 => Cx::new(T::zero(), T::zero()),
        1 => vals[0],
        2 => vals[0] + vals[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&vals[..mid]) + pairwise_sum(&vals[mid..])
        }
    }
}
