//! Exact rationals and rationals extended with `±∞`.
//!
//! Every number in the analysis is exact. [`Rat`] is an arbitrary-precision
//! rational kept in lowest terms, [`ExtRat`] adds the two infinities with the
//! ordering `-inf < q < inf` and the addition convention `-inf + inf = -inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid number literal `{0}`")]
pub struct ParseRatError(pub String);

/// Exact rational number in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Rat {
        let denom = denom.into();
        assert!(!denom.is_zero(), "zero denominator");
        Rat(BigRational::new(numer.into(), denom))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Rat {
        Rat(BigRational::zero())
    }

    pub fn one() -> Rat {
        Rat(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn floor(&self) -> Rat {
        Rat(self.0.floor())
    }

    pub fn ceil(&self) -> Rat {
        Rat(self.0.ceil())
    }

    pub fn recip(&self) -> Rat {
        Rat(self.0.recip())
    }

    /// Midpoint `(self + other) / 2`.
    pub fn midpoint(&self, other: &Rat) -> Rat {
        (self + other) / Rat::from_integer(2)
    }

    pub fn as_bigrational(&self) -> &BigRational {
        &self.0
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.numer().to_i64()
        } else {
            None
        }
    }
}

impl From<BigRational> for Rat {
    fn from(value: BigRational) -> Rat {
        Rat(value)
    }
}

impl From<i64> for Rat {
    fn from(value: i64) -> Rat {
        Rat::from_integer(value)
    }
}

impl From<i32> for Rat {
    fn from(value: i32) -> Rat {
        Rat::from_integer(value)
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

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s).ok()
}

/// Parses `"p"`, `"p/q"` or a decimal literal such as `"-1.25"`.
impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Rat, ParseRatError> {
        let err = || ParseRatError(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p = parse_integer(p.trim()).ok_or_else(err)?;
            let q = parse_integer(q.trim()).ok_or_else(err)?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Rat::new(p, q));
        }
        if let Some((int, frac)) = t.split_once('.') {
            let negative = int.starts_with('-');
            let int_digits = int.strip_prefix(['+', '-']).unwrap_or(int);
            if (int_digits.is_empty() && frac.is_empty())
                || !int_digits.bytes().all(|b| b.is_ascii_digit())
                || !frac.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(err());
            }
            let whole = if int_digits.is_empty() {
                BigInt::zero()
            } else {
                BigInt::from_str(int_digits).map_err(|_| err())?
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let frac_val = if frac.is_empty() {
                BigInt::zero()
            } else {
                BigInt::from_str(frac).map_err(|_| err())?
            };
            let mut numer = whole * &scale + frac_val;
            if negative {
                numer = -numer;
            }
            return Ok(Rat::new(numer, scale));
        }
        parse_integer(t).map(Rat::from_integer).ok_or_else(err)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl std::iter::Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// A rational extended with `-inf` and `inf`.
///
/// The derived order follows the variant order, so `NegInf < Finite(q) < PosInf`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtRat {
    NegInf,
    Finite(Rat),
    PosInf,
}

impl ExtRat {
    pub fn finite(q: impl Into<Rat>) -> ExtRat {
        ExtRat::Finite(q.into())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(q) => Some(q),
            _ => None,
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(q: Rat) -> ExtRat {
        ExtRat::Finite(q)
    }
}

/// Exact sum with `-inf + inf = -inf`.
pub fn ext_add(a: &ExtRat, b: &ExtRat) -> ExtRat {
    match (a, b) {
        (ExtRat::NegInf, _) | (_, ExtRat::NegInf) => ExtRat::NegInf,
        (ExtRat::PosInf, _) | (_, ExtRat::PosInf) => ExtRat::PosInf,
        (ExtRat::Finite(x), ExtRat::Finite(y)) => ExtRat::Finite(x + y),
    }
}

pub fn ext_cmp(a: &ExtRat, b: &ExtRat) -> Ordering {
    a.cmp(b)
}

impl Add for &ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: &ExtRat) -> ExtRat {
        ext_add(self, rhs)
    }
}

impl Add for ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: ExtRat) -> ExtRat {
        ext_add(&self, &rhs)
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::NegInf => f.write_str("-inf"),
            ExtRat::PosInf => f.write_str("inf"),
            ExtRat::Finite(q) => write!(f, "{q}"),
        }
    }
}

impl fmt::Debug for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExtRat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<ExtRat, ParseRatError> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtRat::PosInf),
            "-inf" => Ok(ExtRat::NegInf),
            t => t.parse().map(ExtRat::Finite),
        }
    }
}
