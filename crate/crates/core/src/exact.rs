//! Exact rational arithmetic for unit counts.
//!
//! Catalog and rack figures are short decimals (29.7 kW, 0.042, 1.8 m²). Counting
//! formulas are ratios of those decimals followed by a ceiling, so evaluating them
//! in binary floating point can land an exact fit on the wrong side of an integer.
//! Every count in this crate goes through [`Exact`] instead.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A non-lossy rational number built from decimal inputs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(BigRational);

impl Exact {
    pub fn zero() -> Self {
        Exact(BigRational::zero())
    }

    pub fn int(v: i64) -> Self {
        Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Converts a finite float through its shortest round-trip decimal form, so
    /// `0.1` becomes exactly 1/10 rather than the nearest binary fraction.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite value {v} in exact arithmetic");
        let text = format!("{v}");
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.as_str()),
        };
        let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
        let numer: BigInt = format!("{whole}{frac}")
            .parse()
            .expect("float display is always a plain decimal");
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(numer, denom);
        Exact(if negative { -r } else { r })
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn ceil_u64(&self) -> u64 {
        self.0
            .ceil()
            .to_integer()
            .to_u64()
            .expect("count does not fit in u64")
    }

    pub fn floor_u64(&self) -> u64 {
        self.0
            .floor()
            .to_integer()
            .to_u64()
            .expect("count does not fit in u64")
    }

    /// Nearest integer, halves rounded up.
    pub fn round_half_up_u64(&self) -> u64 {
        (self.clone() + Exact::ratio(1, 2)).floor_u64()
    }

    /// `ceil(self / rhs)` for a positive divisor.
    pub fn ceil_div(&self, rhs: &Exact) -> u64 {
        assert!(rhs.is_positive(), "division by non-positive capacity");
        let q = &self.0 / &rhs.0;
        let (d, r) = q.numer().div_rem(q.denom());
        let d = if r.is_positive() {
            d + BigInt::one()
        } else {
            d
        };
        d.to_u64().expect("count does not fit in u64")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Exact {
    fn from(v: u64) -> Self {
        Exact(BigRational::from_integer(BigInt::from(v)))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Exact {
            type Output = Exact;
            fn $method(self, rhs: Exact) -> Exact {
                Exact(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Exact> for &'a Exact {
            type Output = Exact;
            fn $method(self, rhs: &'a Exact) -> Exact {
                Exact((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl std::iter::Sum for Exact {
    fn sum<I: Iterator<Item = Exact>>(iter: I) -> Self {
        iter.fold(Exact::zero(), |a, b| a + b)
    }
}
