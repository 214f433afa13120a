//! The scalar abstraction shared by every geometric routine.
//!
//! Interval exchanges are evaluated over three kinds of numbers: exact
//! elements of a real number field (certification), arbitrary-precision
//! rationals (combinatorial edges of the Rauzy graph) and IEEE floats
//! (long orbits). Everything in [`crate::iet`], [`crate::selfsim`] and
//! [`crate::rauzy`] is written against [`Scalar`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An ordered field element usable as an interval coordinate.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether comparisons and arithmetic are exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn as_f64(&self) -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn is_strictly_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Exact integer combination `sum coeffs[i] * basis[i]`.
    fn combination(coeffs: &[i64], basis: &[Self]) -> Self {
        let mut acc = Self::zero();
        for (c, b) in coeffs.iter().zip(basis) {
            match *c {
                0 => {}
                1 => acc = acc + b.clone(),
                -1 => acc = acc - b.clone(),
                c => acc = acc + Self::from_int(c) * b.clone(),
            }
        }
        acc
    }

    /// Sign of `sum coeffs[i] * basis[i]`; types may override this with a
    /// cheaper certified path.
    fn combination_sign(coeffs: &[i64], basis: &[Self]) -> std::cmp::Ordering {
        Self::combination(coeffs, basis)
            .partial_cmp(&Self::zero())
            .expect("scalar comparison is total on finite values")
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Nearest double to a big rational, robust to huge numerators/denominators.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let Some(v) = r.to_f64() {
        if v.is_finite() && v != 0.0 {
            return v;
        }
    }
    // Scale both parts down to 64 significant bits before dividing.
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let shift_n = (nb - 64).max(0);
    let shift_d = (db - 64).max(0);
    let n = (num >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (den >> shift_d as usize).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n - shift_d) as i32)
}

/// Parse `"p/q"` or `"p"` into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRational::new(p, q))
            }
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}
