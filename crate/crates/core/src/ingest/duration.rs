//! Calendar-free durations counted in whole days.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DAYS_PER_MONTH: u64 = 30;
pub const DAYS_PER_WEEK: u64 = 7;

/// A non-negative number of days. `P1M` is 30 days, `P1W` is 7 days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Duration {
    pub days: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid ISO-8601 duration {text:?}: {reason}")]
pub struct DurationError {
    pub text: String,
    pub reason: &'static str,
}

impl Duration {
    pub const ZERO: Duration = Duration { days: 0 };

    pub fn days(days: u64) -> Self {
        Duration { days }
    }

    pub fn months(months: u64) -> Self {
        Duration { days: months * DAYS_PER_MONTH }
    }

    /// Parses the `PnMnWnD` subset. Designators may be combined and sum up;
    /// time components (`T...`), years and signs are rejected.
    pub fn parse_iso(text: &str) -> Result<Self, DurationError> {
        let err = |reason| DurationError { text: text.to_string(), reason };
        let trimmed = text.trim();
        let body = trimmed.strip_prefix('P').ok_or_else(|| err("missing leading 'P'"))?;
        if body.is_empty() {
            return Err(err("no duration components"));
        }
        let mut days: u64 = 0;
        let mut digits = String::new();
        let mut seen = [false; 3];
        for c in body.chars() {
            if c.is_ascii_digit() {
                digits.push(c);
                continue;
            }
            let (slot, factor) = match c {
                'M' => (0, DAYS_PER_MONTH),
                'W' => (1, DAYS_PER_WEEK),
                'D' => (2, 1),
                'T' => return Err(err("time components are not supported")),
                'Y' => return Err(err("years are not supported")),
                _ => return Err(err("unexpected character")),
            };
            if digits.is_empty() {
                return Err(err("designator without a number"));
            }
            if seen[slot] {
                return Err(err("repeated designator"));
            }
            seen[slot] = true;
            let n: u64 = digits.parse().map_err(|_| err("number out of range"))?;
            days = n.checked_mul(factor).and_then(|d| days.checked_add(d)).ok_or_else(|| err("number out of range"))?;
            digits.clear();
        }
        if !digits.is_empty() {
            return Err(err("trailing number without designator"));
        }
        Ok(Duration { days })
    }

    /// Canonical ISO text: whole months render as `PnM`, otherwise `PnD`.
    pub fn to_iso(self) -> String {
        if self.days > 0 && self.days.is_multiple_of(DAYS_PER_MONTH) {
            format!("P{}M", self.days / DAYS_PER_MONTH)
        } else {
            format!("P{}D", self.days)
        }
    }

    pub fn as_signed(self) -> i64 {
        i64::try_from(self.days).unwrap_or(i64::MAX)
    }
}

impl Add for Duration {
    type Output = Duration;

    fn add(self, rhs: Duration) -> Duration {
        Duration { days: self.days.saturating_add(rhs.days) }
    }
}

impl FromStr for Duration {
    type Err = DurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Duration::parse_iso(s)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

/// Renders a signed SOP-relative day offset, e.g. `2 months before SOP`.
/// Months are used only when the offset is a whole number of months.
pub fn render_offset(offset_days: i64) -> String {
    if offset_days == 0 {
        return "at SOP".to_string();
    }
    let side = if offset_days < 0 { "before" } else { "after" };
    let magnitude = offset_days.unsigned_abs();
    let (n, unit) = if magnitude.is_multiple_of(DAYS_PER_MONTH) {
        (magnitude / DAYS_PER_MONTH, "month")
    } else {
        (magnitude, "day")
    };
    let plural = if n == 1 { "" } else { "s" };
    format!("{n} {unit}{plural} {side} SOP")
}
