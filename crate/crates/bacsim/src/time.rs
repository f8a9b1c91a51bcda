//! Naive civil timestamps for session logs.
//!
//! Dataset timestamps are naive local times in `DD/MM/YYYY` + `HH:MM:SS`
//! format. They are parsed strictly (fixed field widths, no locale lookup)
//! and stored as seconds since the Unix epoch with no timezone handling.

use std::fmt;

/// Seconds since 1970-01-01 00:00:00, timezone-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub fn from_unix_seconds(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub fn unix_seconds(self) -> i64 {
        self.0
    }

    /// Timeline position in hours, the unit the simulator works in.
    pub fn as_hours(self) -> f64 {
        self.0 as f64 / 3600.0
    }

    /// Hour-of-day bin in `0..24`.
    pub fn hour_of_day(self) -> usize {
        (self.0.rem_euclid(86_400) / 3_600) as usize
    }

    /// Time of day in fractional hours, in `[0, 24)`.
    pub fn time_of_day_hours(self) -> f64 {
        self.0.rem_euclid(86_400) as f64 / 3600.0
    }

    pub fn from_civil(
        year: i64,
        month: u32,
        day: u32,
        hour: u32,
        minute: u32,
        second: u32,
    ) -> Self {
        let days = days_from_civil(year, month, day);
        Timestamp(
            days * 86_400 + i64::from(hour) * 3_600 + i64::from(minute) * 60 + i64::from(second),
        )
    }

    /// Strict `DD/MM/YYYY` + `HH:MM:SS` parse. Rejects anything that is not
    /// exactly two/two/four digit date fields and two-digit time fields with
    /// in-range values, so results cannot depend on the host locale.
    pub fn parse(date: &str, time: &str) -> Result<Self, ParseTimestampError> {
        let (year, month, day) = parse_date(date)?;
        let (hour, minute, second) = parse_time(time)?;
        Ok(Self::from_civil(year, month, day, hour, minute, second))
    }

    pub fn civil_date(self) -> (i64, u32, u32) {
        civil_from_days(self.0.div_euclid(86_400))
    }

    fn civil_time(self) -> (u32, u32, u32) {
        let s = self.0.rem_euclid(86_400);
        ((s / 3600) as u32, ((s % 3600) / 60) as u32, (s % 60) as u32)
    }

    /// `DD/MM/YYYY`, the dataset's date format.
    pub fn format_date(self) -> String {
        let (y, m, d) = self.civil_date();
        format!("{d:02}/{m:02}/{y:04}")
    }

    /// `HH:MM:SS`, the dataset's time format.
    pub fn format_time(self) -> String {
        let (h, m, s) = self.civil_time();
        format!("{h:02}:{m:02}:{s:02}")
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.format_date(), self.format_time())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseTimestampError {
    #[error("invalid date {0:?}: expected DD/MM/YYYY")]
    Date(String),
    #[error("invalid time {0:?}: expected HH:MM:SS")]
    Time(String),
}

fn two_digits(b: &[u8]) -> Option<u32> {
    match b {
        [a @ b'0'..=b'9', c @ b'0'..=b'9'] => Some(u32::from(a - b'0') * 10 + u32::from(c - b'0')),
        _ => None,
    }
}

fn parse_date(s: &str) -> Result<(i64, u32, u32), ParseTimestampError> {
    let err = || ParseTimestampError::Date(s.to_string());
    let b = s.as_bytes();
    if b.len() != 10 || b[2] != b'/' || b[5] != b'/' {
        return Err(err());
    }
    let day = two_digits(&b[0..2]).ok_or_else(err)?;
    let month = two_digits(&b[3..5]).ok_or_else(err)?;
    let year = i64::from(two_digits(&b[6..8]).ok_or_else(err)?) * 100
        + i64::from(two_digits(&b[8..10]).ok_or_else(err)?);
    if month == 0 || month > 12 || day == 0 || day > days_in_month(year, month) {
        return Err(err());
    }
    Ok((year, month, day))
}

fn parse_time(s: &str) -> Result<(u32, u32, u32), ParseTimestampError> {
    let err = || ParseTimestampError::Time(s.to_string());
    let b = s.as_bytes();
    if b.len() != 8 || b[2] != b':' || b[5] != b':' {
        return Err(err());
    }
    let hour = two_digits(&b[0..2]).ok_or_else(err)?;
    let minute = two_digits(&b[3..5]).ok_or_else(err)?;
    let second = two_digits(&b[6..8]).ok_or_else(err)?;
    if hour > 23 || minute > 59 || second > 59 {
        return Err(err());
    }
    Ok((hour, minute, second))
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

/// Days since 1970-01-01 for a civil date (proleptic Gregorian).
fn days_from_civil(year: i64, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1_460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
