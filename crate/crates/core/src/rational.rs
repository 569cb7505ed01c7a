//! Exact rational helpers: parsing of probability strings, float mirrors,
//! and the string form used in every JSON document.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"1/2"`, `"3"`, `"0.32537"`, `"-1.5e-3"` style strings exactly.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = |why: &str| Error::BadProbability(s.to_string(), why.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(bad("empty string"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad("not a decimal number"));
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad("bad digits"))? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Parses a probability and checks that it lies in `[0, 1]`.
pub fn parse_probability(s: &str) -> Result<Rational> {
    let r = parse(s)?;
    if r.is_negative() || r > one() {
        return Err(Error::BadProbability(s.to_string(), "outside [0, 1]".into()));
    }
    Ok(r)
}

/// Canonical string form: `"n/d"`, or `"n"` for integers.
pub fn fmt(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale both down before dividing.
        let n = r.numer().to_string();
        let d = r.denom().to_string();
        let (nl, dl) = (n.trim_start_matches('-').len() as i32, d.len() as i32);
        let shift = nl.max(dl) - 300;
        let nf: f64 = n[..n.len().saturating_sub(shift.max(0) as usize)].parse().unwrap_or(0.0);
        let df: f64 = d[..d.len().saturating_sub(shift.max(0) as usize)].parse().unwrap_or(1.0);
        nf / df
    })
}

/// Rounds `x` to the nearest multiple of `1/den`.
pub fn snap(x: f64, den: u64) -> Rational {
    let n = (x * den as f64).round() as i64;
    ratio(n, den as i64)
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(it: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Splits a probability into `(open numerator, closed numerator, denominator)`.
pub(crate) fn weight_parts(p: &Rational) -> (BigUint, BigUint, BigUint) {
    let n = p.numer().to_biguint().expect("probability is non-negative");
    let d = p.denom().to_biguint().expect("denominator is positive");
    let c = &d - &n;
    (n, c, d)
}

pub fn serialize_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt(r))
}

pub fn deserialize_rational<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    let s = match &v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        _ => return Err(serde::de::Error::custom("expected a rational string")),
    };
    parse(&s).map_err(serde::de::Error::custom)
}

use serde::Deserialize;

pub(crate) mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&fmt(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse("0.32537").unwrap(), ratio(32537, 100000));
        assert_eq!(parse("325/1000").unwrap(), ratio(13, 40));
        assert_eq!(parse("1").unwrap(), one());
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse("2.5e-1").unwrap(), ratio(1, 4));
        assert_eq!(parse("-3/6").unwrap(), ratio(-1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1.2.3", "0x10", "."] {
            assert!(parse(s).is_err(), "{s}");
        }
        assert!(parse_probability("3/2").is_err());
        assert!(parse_probability("-0.1").is_err());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["0", "1", "3/8", "-7/3"] {
            assert_eq!(fmt(&parse(s).unwrap()), s);
        }
    }

    #[test]
    fn float_mirror_of_huge_values() {
        let big = Rational::new(num_traits::pow(BigInt::from(10), 400), num_traits::pow(BigInt::from(10), 400) * 4);
        assert!((to_f64(&big) - 0.25).abs() < 1e-12);
    }
}
