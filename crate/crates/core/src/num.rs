//! Exact rational numbers and their decimal-string encoding.
//!
//! All accounting in the crate is carried out in [`Rational`]. Values cross
//! file boundaries as strings: a terminating decimal (`"0.001"`, `"-60"`)
//! when one exists, otherwise a reduced fraction (`"1/3"`). The parser also
//! accepts scientific notation (`"1e-3"`).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

/// Arbitrary-precision rational number used for every quantity in the core.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNumberError {
    pub input: String,
}

impl fmt::Display for ParseNumberError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a decimal or fraction: {:?}", self.input)
    }
}

impl std::error::Error for ParseNumberError {}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den`. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"12.5"`, `"-0.001"`, `"1e-3"`, `"2.5E2"` or `"3/7"` exactly.
pub fn parse(input: &str) -> Result<Rational, ParseNumberError> {
    let err = || ParseNumberError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{whole}{frac}");
    let mut numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().map_err(|_| err())?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Exact string form: terminating decimal when possible, else `p/q`.
pub fn format(value: &Rational) -> String {
    let denom = value.denom().clone();
    let mut rest = denom.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return value.numer().to_string();
    }
    let scaled = value.numer() * num_traits::pow(BigInt::from(10), places) / &denom;
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (whole, frac) = padded.split_at(padded.len() - places);
    let frac = frac.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac}")
    }
}

/// Lossy conversion for presentation and float-mode comparisons.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 can fail on huge operands; fall back to a scaled division.
        let n = value.numer().to_f64().unwrap_or(f64::NAN);
        let d = value.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact conversion of a finite float (used to inject sampled noise).
pub fn from_f64(value: f64) -> Rational {
    Rational::from_float(value).unwrap_or_else(zero)
}

pub fn min(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Smallest integer strictly greater than `value`.
pub fn next_integer_above(value: &Rational) -> BigInt {
    value.floor().to_integer() + BigInt::one()
}

/// Serde adapter storing a [`Rational`] as a decimal string.
pub mod decimal_string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let raw = NumberOrString::deserialize(deserializer)?;
        raw.to_rational().map_err(serde::de::Error::custom)
    }

    /// Config files are meant to hold strings, but bare JSON numbers are
    /// tolerated and parsed from their literal text.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum NumberOrString {
        Text(String),
        Number(serde_json::Number),
    }

    impl NumberOrString {
        pub(crate) fn to_rational(&self) -> Result<Rational, ParseNumberError> {
            match self {
                NumberOrString::Text(s) => parse(s),
                NumberOrString::Number(n) => parse(&n.to_string()),
            }
        }
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod opt_decimal_string {
    use super::decimal_string::NumberOrString;
    use super::*;

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&format(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Rational>, D::Error> {
        let raw = Option::<NumberOrString>::deserialize(deserializer)?;
        raw.map(|r| r.to_rational())
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}
