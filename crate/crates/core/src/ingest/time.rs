use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// A UTC instant at one-second resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    /// Parses ISO-8601 text. Offsets are converted to UTC, text without an
    /// offset is taken as UTC, and fractional seconds are truncated.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
            return Some(Timestamp(dt.with_timezone(&Utc).timestamp()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
                return Some(Timestamp(naive.and_utc().timestamp()));
            }
        }
        if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
            return date.and_hms_opt(0, 0, 0).map(|dt| Timestamp(dt.and_utc().timestamp()));
        }
        None
    }

    /// Signed duration from `earlier` to `self`, in days.
    pub fn days_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / SECONDS_PER_DAY
    }

    pub fn plus_seconds(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ")),
            None => write!(f, "@{}", self.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        let z = Timestamp::parse("2020-01-02T03:04:05Z").unwrap();
        assert_eq!(z.unix(), 1_577_934_245);
        assert_eq!(Timestamp::parse("2020-01-02T05:04:05+02:00"), Some(z));
        assert_eq!(Timestamp::parse("2020-01-02 03:04:05"), Some(z));
        assert_eq!(Timestamp::parse("2020-01-02T03:04:05.987Z"), Some(z));
        assert_eq!(Timestamp::parse("2020-01-02").unwrap().unix(), 1_577_923_200);
        assert!(Timestamp::parse("yesterday").is_none());
    }

    #[test]
    fn display_round_trips() {
        let t = Timestamp::from_unix(1_577_934_245);
        assert_eq!(t.to_string(), "2020-01-02T03:04:05Z");
        assert_eq!(Timestamp::parse(&t.to_string()), Some(t));
    }

    #[test]
    fn day_arithmetic() {
        let a = Timestamp::from_unix(0);
        assert_eq!(a.plus_seconds(129_600).days_since(a), 1.5);
    }
}
