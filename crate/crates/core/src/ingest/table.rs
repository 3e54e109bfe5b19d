//! Shared CSV plumbing: header checks, row iteration with line numbers, and
//! canonical number/date formatting.

use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};

use super::Reject;
use crate::error::{Error, Result};

pub(crate) struct RowReader<R: Read> {
    inner: csv::Reader<R>,
    record: csv::ByteRecord,
}

impl<R: Read> RowReader<R> {
    /// Opens a reader and checks the header matches `expected` exactly
    /// (whitespace around names is ignored).
    pub(crate) fn new(reader: R, label: &str, expected: &[&str]) -> Result<Self> {
        let mut inner = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = inner
            .byte_headers()
            .map_err(|e| Error::schema(label, 1, format!("unreadable header: {e}")))?
            .clone();
        let names: Vec<String> = header
            .iter()
            .map(|f| String::from_utf8_lossy(f).trim().trim_start_matches('\u{feff}').to_string())
            .collect();
        if names.len() != expected.len() || names.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::schema(
                label,
                1,
                format!("header [{}] does not match [{}]", names.join(","), expected.join(",")),
            ));
        }
        Ok(RowReader {
            inner,
            record: csv::ByteRecord::new(),
        })
    }

    /// Next data row as owned strings, or a reject for undecodable rows.
    pub(crate) fn next_row(&mut self) -> Option<std::result::Result<(u64, Vec<String>), Reject>> {
        match self.inner.read_byte_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => {
                let line = self.record.position().map(|p| p.line()).unwrap_or(0);
                let mut fields = Vec::with_capacity(self.record.len());
                for f in self.record.iter() {
                    match std::str::from_utf8(f) {
                        Ok(s) => fields.push(s.to_string()),
                        Err(_) => {
                            return Some(Err(Reject {
                                line,
                                reason: "invalid UTF-8".into(),
                            }))
                        }
                    }
                }
                Some(Ok((line, fields)))
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                // an I/O error leaves the reader unusable; stop here
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return None;
                }
                Some(Err(Reject {
                    line,
                    reason: format!("malformed row: {e}"),
                }))
            }
        }
    }
}

pub(crate) fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| format!("not a number: {t:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value {t:?}"))
    }
}

/// Empty field means missing.
pub(crate) fn parse_opt_f64(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

pub(crate) fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| format!("bad date {:?}", s.trim()))
}

/// ISO-8601 timestamp; a missing zone designator means UTC.
pub(crate) fn parse_ts(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let t = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(t, fmt) {
            return Ok(Utc.from_utc_datetime(&naive));
        }
    }
    Err(format!("bad timestamp {t:?}"))
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn format_opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub(crate) fn format_ts(t: DateTime<Utc>) -> String {
    if t.timestamp_subsec_nanos() == 0 {
        t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
    } else {
        t.format("%Y-%m-%dT%H:%M:%S%.fZ").to_string()
    }
}
