//! Exact nonnegative rationals.
//!
//! Every cost in the crate is a [`Rat`]. Values are parsed from `"p/q"`,
//! integer or decimal strings without any rounding, so `"0.49"` is stored
//! as `49/100`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A nonnegative rational number in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_integer(n: u64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den`, reduced. Fails on a zero denominator.
    pub fn new(num: u64, den: u64) -> Result<Self, Error> {
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rat(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    /// `2^exp` as a rational.
    pub fn pow2(exp: u32) -> Self {
        Rat(BigRational::from_integer(BigInt::from(2u8).pow(exp)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> BigUint {
        self.0.numer().magnitude().clone()
    }

    pub fn denom(&self) -> BigUint {
        self.0.denom().magnitude().clone()
    }

    /// `self - other` when the result stays nonnegative.
    pub fn checked_sub(&self, other: &Rat) -> Option<Rat> {
        if other > self {
            None
        } else {
            Some(Rat(&self.0 - &other.0))
        }
    }

    /// `|self - other|`.
    pub fn abs_diff(&self, other: &Rat) -> Rat {
        Rat((&self.0 - &other.0).abs())
    }

    pub fn double(&self) -> Rat {
        Rat(&self.0 + &self.0)
    }

    /// Division by a nonzero rational.
    pub fn checked_div(&self, other: &Rat) -> Option<Rat> {
        if other.is_zero() {
            None
        } else {
            Some(Rat(&self.0 / &other.0))
        }
    }

    /// Multiplication by a nonnegative integer weight.
    pub fn mul_biguint(&self, k: &BigUint) -> Rat {
        Rat(&self.0 * BigRational::from_integer(BigInt::from(k.clone())))
    }

    pub(crate) fn from_parts(num: BigUint, den: BigUint) -> Self {
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_uint(s: &str, whole: &str) -> Result<BigUint, Error> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("malformed rational {whole:?}")));
    }
    BigUint::from_str(s).map_err(|_| Error::Parse(format!("malformed rational {whole:?}")))
}

impl FromStr for Rat {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num = parse_uint(num.trim(), raw)?;
            let den = parse_uint(den.trim(), raw)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {raw:?}")));
            }
            return Ok(Rat::from_parts(num, den));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int = if int.is_empty() { BigUint::zero() } else { parse_uint(int, raw)? };
            let frac_digits = parse_uint(frac, raw)?;
            let scale = BigUint::from(10u8).pow(frac.len() as u32);
            return Ok(Rat::from_parts(int * &scale + frac_digits, scale));
        }
        Ok(Rat::from_parts(parse_uint(s, raw)?, BigUint::one()))
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn add(self, rhs: &'a Rat) -> Rat {
        Rat(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

/// Panics if the difference would be negative; callers only subtract
/// a member's cost from a total that contains it.
impl<'a> Sub<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn sub(self, rhs: &'a Rat) -> Rat {
        self.checked_sub(rhs).expect("negative rational difference")
    }
}

impl<'a> Mul<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn mul(self, rhs: &'a Rat) -> Rat {
        Rat(&self.0 * &rhs.0)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        let mut acc = Rat::zero();
        for r in iter {
            acc += r;
        }
        acc
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;

        impl Visitor<'_> for RatVisitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative rational as \"p/q\", integer or decimal")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(|e| match e {
                    Error::Parse(msg) => E::custom(msg),
                    other => E::custom(other),
                })
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat::from_integer(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                u64::try_from(v)
                    .map(Rat::from_integer)
                    .map_err(|_| E::custom("negative cost"))
            }
        }

        deserializer.deserialize_any(RatVisitor)
    }
}
