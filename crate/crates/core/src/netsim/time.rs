use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use thiserror::Error;

/// Virtual seconds as fixed-point microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Micros(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid duration {0:?}: expected non-negative seconds with at most 6 decimals")]
pub struct DurationParseError(pub String);

impl Micros {
    pub const ZERO: Micros = Micros(0);
    pub const PER_SECOND: u64 = 1_000_000;

    pub const fn from_secs(secs: u64) -> Self {
        Micros(secs * Self::PER_SECOND)
    }

    pub const fn from_micros(us: u64) -> Self {
        Micros(us)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::PER_SECOND as f64
    }

    /// Rounds to the nearest microsecond; negative or non-finite input is rejected.
    pub fn from_secs_f64(secs: f64) -> Option<Self> {
        if !secs.is_finite() || secs < 0.0 {
            return None;
        }
        let us = (secs * Self::PER_SECOND as f64).round();
        if us > u64::MAX as f64 {
            return None;
        }
        Some(Micros(us as u64))
    }

    pub fn saturating_sub(self, other: Micros) -> Micros {
        Micros(self.0.saturating_sub(other.0))
    }
}

impl FromStr for Micros {
    type Err = DurationParseError;

    /// Exact decimal parse: "0.05" is 50000 us, "1e-6" is not accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DurationParseError(s.to_string());
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac.len() > 6 {
            // Allow trailing zeros beyond microsecond precision, nothing else.
            if frac[6..].bytes().any(|b| b != b'0') {
                return Err(err());
            }
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| err())? };
        let mut frac_us = 0u64;
        for (i, b) in frac.bytes().take(6).enumerate() {
            frac_us += u64::from(b - b'0') * 10u64.pow(5 - i as u32);
        }
        whole
            .checked_mul(Self::PER_SECOND)
            .and_then(|w| w.checked_add(frac_us))
            .map(Micros)
            .ok_or_else(err)
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:06}",
            self.0 / Self::PER_SECOND,
            self.0 % Self::PER_SECOND
        )
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Mul<u64> for Micros {
    type Output = Micros;
    fn mul(self, rhs: u64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl Sum for Micros {
    fn sum<I: Iterator<Item = Micros>>(iter: I) -> Micros {
        iter.fold(Micros::ZERO, Add::add)
    }
}
