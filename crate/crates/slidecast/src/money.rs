//! Exact decimal USD arithmetic for API cost accounting.
//!
//! Ledgers accumulate thousands of tiny per-call charges; binary floating
//! point drifts under that kind of summation, so amounts are stored as
//! integer picodollars (1e-12 USD) and only converted to `f64` for display
//! fractions that do not feed back into totals.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const PICOS_PER_USD: i128 = 1_000_000_000_000;
const MAX_FRACTION_DIGITS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoneyError {
    #[error("invalid USD amount {0:?}")]
    Invalid(String),
    #[error("USD amount {0:?} has more than 12 fractional digits")]
    TooPrecise(String),
}

/// A USD amount with exact decimal semantics (integer picodollars inside).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Usd(i128);

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub fn from_picos(picos: i128) -> Self {
        Usd(picos)
    }

    pub fn picos(self) -> i128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Price of `count` units at `rate` USD per million units.
    ///
    /// Multiplies before dividing so the result is exact whenever the rate
    /// has at most six fractional digits.
    pub fn per_million(count: u64, rate: Usd) -> Usd {
        Usd(i128::from(count) * rate.0 / 1_000_000)
    }

    /// Arithmetic mean over `n` items, truncated at picodollar precision.
    pub fn div_count(self, n: u64) -> Usd {
        if n == 0 {
            return Usd::ZERO;
        }
        Usd(self.0 / i128::from(n))
    }

    /// Lossy conversion for display-only fractions. Never feed this back
    /// into a ledger.
    pub fn as_f64(self) -> f64 {
        self.0 as f64 / PICOS_PER_USD as f64
    }
}

impl Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl AddAssign for Usd {
    fn add_assign(&mut self, rhs: Usd) {
        self.0 += rhs.0;
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::ZERO, Add::add)
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let negative = self.0 < 0;
        let magnitude = self.0.unsigned_abs();
        let whole = magnitude / PICOS_PER_USD.unsigned_abs();
        let frac = magnitude % PICOS_PER_USD.unsigned_abs();
        if negative {
            write!(f, "-")?;
        }
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let digits = format!("{frac:012}");
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for Usd {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim();
        let (negative, body) = match raw.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, raw.strip_prefix('+').unwrap_or(raw)),
        };
        if body.is_empty() {
            return Err(MoneyError::Invalid(s.to_string()));
        }
        let (whole_part, frac_part) = match body.split_once('.') {
            Some((w, fr)) => (w, fr),
            None => (body, ""),
        };
        if whole_part.is_empty() && frac_part.is_empty() {
            return Err(MoneyError::Invalid(s.to_string()));
        }
        if !whole_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(MoneyError::Invalid(s.to_string()));
        }
        if frac_part.len() > MAX_FRACTION_DIGITS {
            // Extra digits beyond picodollars must be zero to stay exact.
            if frac_part[MAX_FRACTION_DIGITS..].chars().any(|c| c != '0') {
                return Err(MoneyError::TooPrecise(s.to_string()));
            }
        }
        let whole: i128 = if whole_part.is_empty() {
            0
        } else {
            whole_part
                .parse()
                .map_err(|_| MoneyError::Invalid(s.to_string()))?
        };
        let frac_digits = &frac_part[..frac_part.len().min(MAX_FRACTION_DIGITS)];
        let mut frac: i128 = 0;
        for c in frac_digits.chars() {
            frac = frac * 10 + i128::from(c as u8 - b'0');
        }
        frac *= 10i128.pow((MAX_FRACTION_DIGITS - frac_digits.len()) as u32);
        let picos = whole
            .checked_mul(PICOS_PER_USD)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(|| MoneyError::Invalid(s.to_string()))?;
        Ok(Usd(if negative { -picos } else { picos }))
    }
}

impl Serialize for Usd {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Usd, D::Error> {
        struct UsdVisitor;

        impl de::Visitor<'_> for UsdVisitor {
            type Value = Usd;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal USD amount as a string or number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Usd, E> {
                v.parse().map_err(de::Error::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Usd, E> {
                // Shortest round-trip formatting recovers the literal the
                // config author wrote for any reasonable money value.
                format!("{v}").parse().map_err(de::Error::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Usd, E> {
                Ok(Usd(i128::from(v) * PICOS_PER_USD))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Usd, E> {
                Ok(Usd(i128::from(v) * PICOS_PER_USD))
            }
        }

        deserializer.deserialize_any(UsdVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usd(s: &str) -> Usd {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_displays_canonically() {
        assert_eq!(usd("0.103").to_string(), "0.103");
        assert_eq!(usd("10.30").to_string(), "10.3");
        assert_eq!(usd("0").to_string(), "0");
        assert_eq!(usd("2").to_string(), "2");
        assert_eq!(usd("0.00028").to_string(), "0.00028");
        assert_eq!(usd("-1.5").to_string(), "-1.5");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Usd::from_str("").is_err());
        assert!(Usd::from_str("abc").is_err());
        assert!(Usd::from_str("1.2.3").is_err());
        assert!(Usd::from_str("0.0000000000001").is_err()); // 13 digits
    }

    #[test]
    fn per_million_is_exact_for_published_anchor() {
        // 120 prompt tokens at 1.0/M plus 80 completion tokens at 2.0/M.
        let cost = Usd::per_million(120, usd("1.0")) + Usd::per_million(80, usd("2.0"));
        assert_eq!(cost, usd("0.00028"));
        assert_eq!(cost.to_string(), "0.00028");
    }

    #[test]
    fn per_million_whole_rate() {
        assert_eq!(Usd::per_million(1_000_000, usd("0.5")), usd("0.50"));
    }

    #[test]
    fn mean_over_count() {
        assert_eq!(usd("10.30").div_count(100), usd("0.103"));
        assert_eq!(Usd::ZERO.div_count(0), Usd::ZERO);
    }

    #[test]
    fn serde_round_trip_via_string_and_number() {
        let v: Usd = serde_json::from_str("\"0.103\"").unwrap();
        assert_eq!(v, usd("0.103"));
        let v: Usd = serde_json::from_str("0.0375").unwrap();
        assert_eq!(v, usd("0.0375"));
        let v: Usd = serde_json::from_str("3").unwrap();
        assert_eq!(v, usd("3"));
        assert_eq!(serde_json::to_string(&usd("0.103")).unwrap(), "\"0.103\"");
    }

    #[test]
    fn sum_never_drifts() {
        let total: Usd = std::iter::repeat(usd("0.001")).take(10_000).sum();
        assert_eq!(total, usd("10"));
    }
}
