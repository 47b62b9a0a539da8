//! Exact rational numbers and their `p/q` text syntax.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary precision rational, always kept in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty numeral")]
    Empty,
    #[error("invalid numeral `{0}` (expected an integer or p/q)")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `p`, `-p`, `p/q` or `-p/q`. Decimals are rejected.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let num = parse_int(num).ok_or_else(|| RationalParseError::Invalid(text.to_string()))?;
    let den = match den {
        Some(d) => {
            if d.starts_with(['-', '+']) {
                return Err(RationalParseError::Invalid(text.to_string()));
            }
            parse_int(d).ok_or_else(|| RationalParseError::Invalid(text.to_string()))?
        }
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(RationalParseError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(num, den))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Lowest-terms `p/q` rendering; integers print without a denominator.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Display adapter for [`Rational`] in the `p/q` syntax.
pub struct Show<'a>(pub &'a Rational);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_rational(self.0))
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Smallest integer `>= r`.
pub fn ceil_int(r: &Rational) -> BigInt {
    let (q, rem) = r.numer().div_mod_floor(r.denom());
    if rem.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Largest integer `<= r`.
pub fn floor_int(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

/// Lossy conversion, only for human-facing statistics.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
