//! Exact rational arithmetic for capacities, rates and latencies.
//!
//! Every quantity that takes part in a feasibility decision is a
//! [`Rational`]. Input files carry numbers as decimal strings (or JSON
//! numbers, read from their textual form) so nothing passes through `f64`.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

/// Exact rational number used throughout the crate.
pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number `{text}`: {reason}")]
pub struct RationalParseError {
    pub text: String,
    pub reason: &'static str,
}

fn bad(text: &str, reason: &'static str) -> RationalParseError {
    RationalParseError { text: text.to_string(), reason }
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"7/3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(bad(text, "empty"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i128 = num.trim().parse().map_err(|_| bad(text, "bad numerator"))?;
        let d: i128 = den.trim().parse().map_err(|_| bad(text, "bad denominator"))?;
        if d == 0 {
            return Err(bad(text, "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(idx) => {
            let exp: i32 = s[idx + 1..].parse().map_err(|_| bad(text, "bad exponent"))?;
            (&s[..idx], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(text, "no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad(text, "unexpected character"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value: i128 =
        if all_digits.is_empty() { 0 } else { all_digits.parse().map_err(|_| bad(text, "out of range"))? };
    if negative {
        value = -value;
    }
    let scale = exponent - frac_part.len() as i32;
    if scale.unsigned_abs() > 30 {
        return Err(bad(text, "exponent out of range"));
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    Ok(if scale >= 0 {
        Rational::from_integer(value.checked_mul(pow).ok_or_else(|| bad(text, "out of range"))?)
    } else {
        Rational::new(value, pow)
    })
}

/// Formats a rational as an integer, a terminating decimal, or `p/q`.
///
/// The output always parses back to the same value with [`parse_rational`].
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut den = *value.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = value * Rational::from_integer(10i128.pow(places));
    let digits = scaled.numer().abs().to_string();
    let places = places as usize;
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    let sign = if value.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{frac}")
}

pub fn to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

/// Exact rational approximation of a float read from an external tool.
pub fn from_f64_text(text: &str) -> Result<Rational, RationalParseError> {
    parse_rational(text)
}

/// Largest rational `g` such that every input is an integer multiple of `g`.
pub fn rational_gcd<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    let mut acc: Option<Rational> = None;
    for v in values {
        let v = v.abs();
        if v.is_zero() {
            continue;
        }
        acc = Some(match acc {
            None => v,
            Some(g) => Rational::new(g.numer().gcd(v.numer()), g.denom().lcm(v.denom())),
        });
    }
    acc
}

/// Display adapter, mostly for log lines.
pub struct Show<'a>(pub &'a Rational);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a decimal/fraction string")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
        parse_rational(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
        Ok(Rational::from_integer(v as i128))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
        Ok(Rational::from_integer(v as i128))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
        // Only reachable without serde_json's arbitrary_precision; go through
        // the shortest round-trip representation rather than the binary value.
        parse_rational(&v.to_string()).map_err(E::custom)
    }

    fn visit_map<A: de::MapAccess<'de>>(self, mut map: A) -> Result<Rational, A::Error> {
        // serde_json with arbitrary_precision hands numbers over as a
        // single-entry map carrying the original text.
        let key: Option<String> = map.next_key()?;
        match key {
            Some(_) => {
                let text: String = map.next_value()?;
                parse_rational(&text).map_err(de::Error::custom)
            }
            None => Err(de::Error::custom("empty number")),
        }
    }
}

/// `#[serde(with = "crate::rational::serde_str")]` for a [`Rational`] field.
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

/// Same as [`serde_str`] for `Vec<Rational>`.
pub mod serde_vec {
    use super::*;
    use serde::de::SeqAccess;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    struct Wrapped(Rational);

    impl<'de> serde::Deserialize<'de> for Wrapped {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            d.deserialize_any(RationalVisitor).map(Wrapped)
        }
    }

    struct SeqVisitor;

    impl<'de> Visitor<'de> for SeqVisitor {
        type Value = Vec<Rational>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a list of numbers")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<Rational>, A::Error> {
            let mut out = Vec::new();
            while let Some(Wrapped(v)) = seq.next_element()? {
                out.push(v);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        d.deserialize_seq(SeqVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.2").unwrap(), r(1, 5));
        assert_eq!(parse_rational("-1.25").unwrap(), r(-5, 4));
        assert_eq!(parse_rational("12").unwrap(), r(12, 1));
        assert_eq!(parse_rational("1/3").unwrap(), r(1, 3));
        assert_eq!(parse_rational("1.5e2").unwrap(), r(150, 1));
        assert_eq!(parse_rational("25e-2").unwrap(), r(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1.2.3", "-", "1e"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn formats_terminating_and_repeating() {
        assert_eq!(format_rational(&r(1, 4)), "0.25");
        assert_eq!(format_rational(&r(-1, 20)), "-0.05");
        assert_eq!(format_rational(&r(1, 3)), "1/3");
        assert_eq!(format_rational(&r(7, 1)), "7");
        assert_eq!(format_rational(&r(101, 10)), "10.1");
    }

    #[test]
    fn gcd_of_rationals() {
        let vals = [r(1, 2), r(3, 4), r(2, 1)];
        assert_eq!(rational_gcd(vals.iter()), Some(r(1, 4)));
        assert_eq!(rational_gcd([r(1, 3), r(1, 2)].iter()), Some(r(1, 6)));
    }

    proptest::proptest! {
        #[test]
        fn format_parse_round_trip(n in -100_000i128..100_000, d in 1i128..5_000) {
            let v = Rational::new(n, d);
            proptest::prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }
    }
}
