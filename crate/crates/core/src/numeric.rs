//! Exact rational numbers.
//!
//! [`Rational`] wraps an arbitrary-precision [`BigRational`], which keeps its
//! value reduced (positive denominator, coprime parts) after every operation.
//! The textual form is `[-]p` or `[-]p/q` with `q > 0` and no inner whitespace.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("malformed rational `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Arbitrary-precision rational in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`; panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self, NumericError> {
        if denom.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
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

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Smallest integer not below `self`.
    pub fn ceil(&self) -> Self {
        Rational(self.0.ceil())
    }

    /// Largest integer not above `self`.
    pub fn floor(&self) -> Self {
        Rational(self.0.floor())
    }

    /// Distance to the nearest integer, in `[0, 1/2]`.
    pub fn fractionality(&self) -> Self {
        let down = self - &self.floor();
        let up = &self.ceil() - self;
        down.min(up)
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// True if numerator and denominator are coprime and the denominator is positive.
    pub fn is_canonical(&self) -> bool {
        self.denom().is_positive() && self.numer().gcd(self.denom()).is_one()
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

impl FromStr for Rational {
    type Err = NumericError;

    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let malformed = || NumericError::Malformed(token.to_string());
        let (negative, body) = match token.as_bytes().first() {
            Some(b'-') => (true, &token[1..]),
            Some(b'+') => (false, &token[1..]),
            _ => (false, token),
        };
        let (num_str, den_str) = match body.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (body, None),
        };
        if !is_digits(num_str) {
            return Err(malformed());
        }
        let mut numer: BigInt = num_str.parse().map_err(|_| malformed())?;
        if negative {
            numer = -numer;
        }
        let denom: BigInt = match den_str {
            Some(d) => {
                if !is_digits(d) {
                    return Err(malformed());
                }
                d.parse().map_err(|_| malformed())?
            }
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(NumericError::ZeroDenominator(token.to_string()));
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

/// Parses a rational token such as `-1/3` or `7`.
pub fn parse_rational(token: &str) -> Result<Rational, NumericError> {
    token.parse()
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(self.0, &rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(&self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

// Panics on a zero divisor; use `checked_div` where the divisor is untrusted.
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        let mut acc = Rational::zero();
        for r in iter {
            acc += r;
        }
        acc
    }
}

/// Exact comparison, exposed for symmetry with the other arithmetic entry points.
pub fn compare(a: &Rational, b: &Rational) -> Ordering {
    a.cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(r("1/2"), Rational::new(1, 2));
        assert_eq!(r("-1/3"), Rational::new(-1, 3));
        let two = r("4/2");
        assert_eq!(two, Rational::from_integer(2));
        assert_eq!(two.to_string(), "2");
        assert_eq!(r("+5"), Rational::from_integer(5));
        assert_eq!(r("0/7"), Rational::zero());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_rational("1/0"), Err(NumericError::ZeroDenominator(_))));
        for bad in ["", "-", "1/", "/2", "1/-2", "1.5", "a", "1 /2", "--1", "1/2/3", "0x10"] {
            assert!(
                matches!(parse_rational(bad), Err(NumericError::Malformed(_))),
                "{bad:?} accepted"
            );
        }
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(r("1/3") + r("1/6"), r("1/2"));
        assert_eq!(r("-1/4") * r("-4"), Rational::one());
        // 10/17 vs 1/2: 20 > 17 after cross-multiplication
        assert_eq!(compare(&r("10/17"), &r("1/2")), Ordering::Greater);
        assert_eq!(r("1").checked_div(&Rational::zero()), Err(NumericError::DivisionByZero));
        assert_eq!(r("3/4").checked_div(&r("-3/2")).unwrap(), r("-1/2"));
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(r("-1/2").ceil(), Rational::zero());
        assert_eq!(r("1/4").ceil(), Rational::one());
        assert_eq!(r("3").floor(), r("3"));
        assert_eq!(r("-1/2").floor(), r("-1"));
        assert_eq!(r("10/17").fractionality(), r("7/17"));
        assert_eq!(r("-1/17").fractionality(), r("1/17"));
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-1_000_000i64..1_000_000, 1i64..10_000).prop_map(|(n, d)| Rational::new(n, d))
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(a in arb_rational()) {
            let text = a.to_string();
            prop_assert!(!text.contains(char::is_whitespace));
            prop_assert_eq!(parse_rational(&text).unwrap(), a);
        }

        #[test]
        fn field_axioms(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
            prop_assert_eq!(&a - &a, Rational::zero());
            for v in [&a + &b, &a - &c, &a * &b] {
                prop_assert!(v.is_canonical());
            }
        }

        #[test]
        fn ceil_floor_bracket(a in arb_rational()) {
            let c = a.ceil();
            let f = a.floor();
            prop_assert!(c.is_integer() && f.is_integer());
            prop_assert!(&c - &Rational::one() < a && a <= c);
            prop_assert!(f <= a && a < &f + &Rational::one());
        }
    }
}
