//! Exact rational helpers shared by the formula evaluators and the serializers.
//!
//! Rationals are rendered as `"p/q"` strings (always with an explicit
//! denominator, so `33` renders as `"33/1"`) to avoid precision loss in
//! JSON consumers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn format_ratio(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`. Decimal and exponent notation
/// are rejected so that probabilities stay exactly representable.
pub fn parse_ratio(text: &str) -> Result<BigRational, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty string".into());
    }
    if text.contains(['.', 'e', 'E']) {
        return Err(format!("{text:?} is not an exact rational (use p/q)"));
    }
    let (numer, denom) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = numer
        .parse()
        .map_err(|_| format!("bad numerator in {text:?}"))?;
    let denom: BigInt = denom
        .parse()
        .map_err(|_| format!("bad denominator in {text:?}"))?;
    if denom.is_zero() {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(BigRational::new(numer, denom))
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn is_nonnegative(value: &BigRational) -> bool {
    !value.is_negative()
}

pub fn one() -> BigRational {
    BigRational::one()
}

/// serde adapter: a `BigRational` as a `"p/q"` string.
pub mod as_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_ratio(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(de)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}
