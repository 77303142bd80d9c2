//! Fixed-precision decimal numbers used by guards, variables and scores.
//!
//! Values are stored as a signed count of millionths, so `==` and `!=`
//! guards compare exactly and printing is canonical.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits kept.
pub const SCALE_DIGITS: u32 = 6;
const SCALE: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("`{0}` has more than {SCALE_DIGITS} fractional digits")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    Overflow(String),
}

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);
    pub const ONE: Decimal = Decimal(SCALE);
    pub const MIN: Decimal = Decimal(i64::MIN);
    pub const MAX: Decimal = Decimal(i64::MAX);

    /// Builds a decimal from its raw count of millionths.
    pub const fn from_raw(raw: i64) -> Self {
        Decimal(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn from_int(v: i64) -> Self {
        Decimal(v.saturating_mul(SCALE))
    }

    /// Rounds a float to the nearest representable decimal (ties away from zero).
    pub fn from_f64(v: f64) -> Self {
        let scaled = (v * SCALE as f64).round();
        if scaled.is_nan() {
            return Decimal::ZERO;
        }
        // `as` saturates at the i64 bounds.
        Decimal(scaled as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_integer(self) -> bool {
        self.0 % SCALE == 0
    }

    pub fn clamp_to(self, lo: Decimal, hi: Decimal) -> Decimal {
        self.max(lo).min(hi)
    }

    /// Midpoint of `self` and `other`, rounded toward negative infinity on the last digit.
    pub fn midpoint(self, other: Decimal) -> Decimal {
        Decimal(((self.0 as i128 + other.0 as i128).div_euclid(2)) as i64)
    }
}

impl Add for Decimal {
    type Output = Decimal;
    fn add(self, rhs: Decimal) -> Decimal {
        Decimal(self.0.saturating_add(rhs.0))
    }
}

impl Sub for Decimal {
    type Output = Decimal;
    fn sub(self, rhs: Decimal) -> Decimal {
        Decimal(self.0.saturating_sub(rhs.0))
    }
}

impl Neg for Decimal {
    type Output = Decimal;
    fn neg(self) -> Decimal {
        Decimal(self.0.saturating_neg())
    }
}

impl std::iter::Sum for Decimal {
    fn sum<I: Iterator<Item = Decimal>>(iter: I) -> Decimal {
        iter.fold(Decimal::ZERO, |a, b| a + b)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(DecimalError::Empty);
        }
        let invalid = || DecimalError::Invalid(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let mut raw: i64 = 0;
        for b in int_part.bytes() {
            raw = raw
                .checked_mul(10)
                .and_then(|r| r.checked_add((b - b'0') as i64))
                .ok_or_else(|| DecimalError::Overflow(s.to_string()))?;
        }
        raw = raw
            .checked_mul(SCALE)
            .ok_or_else(|| DecimalError::Overflow(s.to_string()))?;
        if let Some(frac) = frac_part {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(invalid());
            }
            if frac.len() > SCALE_DIGITS as usize {
                return Err(DecimalError::TooPrecise(s.to_string()));
            }
            let mut f: i64 = 0;
            for b in frac.bytes() {
                f = f * 10 + (b - b'0') as i64;
            }
            f *= 10i64.pow(SCALE_DIGITS - frac.len() as u32);
            raw = raw
                .checked_add(f)
                .ok_or_else(|| DecimalError::Overflow(s.to_string()))?;
        }
        Ok(Decimal(if negative { -raw } else { raw }))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0 as i128;
        let sign = if v < 0 { "-" } else { "" };
        let abs = v.unsigned_abs();
        let int = abs / SCALE as u128;
        let frac = abs % SCALE as u128;
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(serde_json::Number),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_prints_canonically() {
        let cases = [
            ("15", "15"),
            ("-3", "-3"),
            ("0.5", "0.5"),
            ("2.500", "2.5"),
            ("-0.000001", "-0.000001"),
            ("007", "7"),
        ];
        for (input, printed) in cases {
            assert_eq!(input.parse::<Decimal>().unwrap().to_string(), printed);
        }
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "-", "1.", ".5", "1e3", "1.2.3", "abc", "+1"] {
            assert!(bad.parse::<Decimal>().is_err(), "{bad}");
        }
        assert!(matches!(
            "0.1234567".parse::<Decimal>(),
            Err(DecimalError::TooPrecise(_))
        ));
        assert!(matches!(
            "99999999999999999999".parse::<Decimal>(),
            Err(DecimalError::Overflow(_))
        ));
    }

    #[test]
    fn exact_equality_where_floats_drift() {
        let a: Decimal = "0.1".parse().unwrap();
        let b: Decimal = "0.2".parse().unwrap();
        assert_eq!(a + b, "0.3".parse().unwrap());
    }

    #[test]
    fn midpoint_and_clamp() {
        let lo = Decimal::from_int(0);
        let hi = Decimal::from_int(20);
        assert_eq!(lo.midpoint(hi), Decimal::from_int(10));
        assert_eq!(Decimal::from_int(25).clamp_to(lo, hi), hi);
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(raw in -1_000_000_000_000i64..1_000_000_000_000i64) {
            let d = Decimal::from_raw(raw);
            prop_assert_eq!(d.to_string().parse::<Decimal>().unwrap(), d);
        }
    }
}
