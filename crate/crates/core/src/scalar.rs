//! Numeric abstraction shared by every module.
//!
//! Lengths, costs, budgets and LP values are generic over [`Scalar`]. The
//! exact instantiation ([`crate::Q`]) is the default everywhere; float
//! instantiations exist for fast cross-checks and carry a comparison
//! tolerance.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// A field-like number type usable throughout the solver.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    fn from_int(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Largest integer not above `self`.
    fn floor_int(&self) -> i64;
    /// Smallest integer not below `self`.
    fn ceil_int(&self) -> i64;
    fn as_f64(&self) -> f64;
    /// Convert a float. Exact types snap to a nearby small-denominator rational.
    fn from_f64(v: f64) -> Self;
    /// Absolute slack used by comparisons inside iterative solvers.
    fn tolerance() -> Self;
    fn is_exact() -> bool;
    fn is_integer(&self) -> bool;
    /// Parse `"num/den"`, an integer, or (for float types) a decimal.
    fn parse_text(s: &str) -> Option<Self>;
    /// Canonical text form; rationals print as `"num/den"`.
    fn to_text(&self) -> String;

    fn pow2(k: i64) -> Self {
        let two = Self::from_int(2);
        let mut out = Self::one();
        for _ in 0..k.unsigned_abs() {
            out = out * two.clone();
        }
        if k < 0 {
            Self::one() / out
        } else {
            out
        }
    }

    /// `a < b` beyond the tolerance.
    fn definitely_lt(&self, other: &Self) -> bool {
        self.clone() + Self::tolerance() < *other
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }
}

/// Minimum of two partially ordered values (first on ties).
pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Maximum of two partially ordered values (first on ties).
pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

fn split_ratio(s: &str) -> Option<(i64, i64)> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                None
            } else {
                Some((n, d))
            }
        }
        None => Some((s.parse().ok()?, 1)),
    }
}

/// Best rational approximation of `v` by continued fractions, stopping once
/// the error is below `1e-12 * max(1, |v|)` or the denominator exceeds `max_den`.
pub fn rationalize(v: f64, max_den: i64) -> (i64, i64) {
    if !v.is_finite() {
        return (0, 1);
    }
    let neg = v < 0.0;
    let x = v.abs();
    let tol = 1e-12 * x.max(1.0);
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 9.0e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 || h2 > i64::MAX as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            break;
        }
        let frac = r - a;
        if frac < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 == 0 {
        return (0, 1);
    }
    let n = h1 as i64;
    (if neg { -n } else { n }, k1 as i64)
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            fn from_int(v: i64) -> Self {
                v as $t
            }
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }
            fn floor_int(&self) -> i64 {
                self.floor() as i64
            }
            fn ceil_int(&self) -> i64 {
                self.ceil() as i64
            }
            fn as_f64(&self) -> f64 {
                *self as f64
            }
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn tolerance() -> Self {
                $tol
            }
            fn is_exact() -> bool {
                false
            }
            fn is_integer(&self) -> bool {
                self.fract() == 0.0
            }
            fn parse_text(s: &str) -> Option<Self> {
                if let Some((n, d)) = split_ratio(s) {
                    return Some(Self::from_ratio(n, d));
                }
                s.trim().parse().ok()
            }
            fn to_text(&self) -> String {
                format!("{}", self)
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

impl Scalar for Ratio<i64> {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
    fn floor_int(&self) -> i64 {
        Integer::div_floor(self.numer(), self.denom())
    }
    fn ceil_int(&self) -> i64 {
        -Integer::div_floor(&-*self.numer(), self.denom())
    }
    fn as_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn from_f64(v: f64) -> Self {
        let (n, d) = rationalize(v, 1_000_000_000);
        Ratio::new(n, d)
    }
    fn tolerance() -> Self {
        Self::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn is_integer(&self) -> bool {
        self.denom().is_one()
    }
    fn parse_text(s: &str) -> Option<Self> {
        split_ratio(s).map(|(n, d)| Ratio::new(n, d))
    }
    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn floor_int(&self) -> i64 {
        self.floor().to_integer().to_i64().expect("floor fits in i64")
    }
    fn ceil_int(&self) -> i64 {
        self.ceil().to_integer().to_i64().expect("ceil fits in i64")
    }
    fn as_f64(&self) -> f64 {
        self.to_f64_lossy()
    }
    fn from_f64(v: f64) -> Self {
        let (n, d) = rationalize(v, 1_000_000_000);
        Self::from_ratio(n, d)
    }
    fn tolerance() -> Self {
        Self::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn is_integer(&self) -> bool {
        self.denom().is_one()
    }
    fn parse_text(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().ok()?;
                let d: BigInt = d.trim().parse().ok()?;
                if d.is_zero() {
                    None
                } else {
                    Some(BigRational::new(n, d))
                }
            }
            None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
        }
    }
    fn to_text(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_text() {
        let q = BigRational::parse_text("6/4").unwrap();
        assert_eq!(q.to_text(), "3/2");
        assert_eq!(BigRational::parse_text("-7").unwrap().to_text(), "-7/1");
        assert!(BigRational::parse_text("3/0").is_none());
        assert!(BigRational::parse_text("x").is_none());
        assert_eq!(f64::parse_text("1/4"), Some(0.25));
    }

    #[test]
    fn floor_and_ceil_agree_across_types() {
        for (n, d) in [(7, 2), (-7, 2), (6, 3), (-1, 3), (0, 5)] {
            let b = BigRational::from_ratio(n, d);
            let r = Ratio::<i64>::from_ratio(n, d);
            let f = f64::from_ratio(n, d);
            assert_eq!(b.floor_int(), r.floor_int());
            assert_eq!(b.ceil_int(), r.ceil_int());
            assert_eq!(b.floor_int(), f.floor_int());
            assert_eq!(b.ceil_int(), f.ceil_int());
        }
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        assert_eq!(rationalize(1.0 / 3.0, 1_000_000), (1, 3));
        assert_eq!(rationalize(-0.625, 1_000_000), (-5, 8));
        assert_eq!(rationalize(2.0, 10), (2, 1));
        assert_eq!(rationalize(0.0, 10), (0, 1));
    }

    #[test]
    fn pow2_handles_negative_exponents() {
        assert_eq!(BigRational::pow2(-3), BigRational::from_ratio(1, 8));
        assert_eq!(f64::pow2(4), 16.0);
    }
}
