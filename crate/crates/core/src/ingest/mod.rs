//! Parsing and validation of the four input tables.
//!
//! Row-level problems never abort a read: the offending row is collected as a
//! [`Reject`] with its line number and reason. Only a missing file or a header
//! that does not match the schema is fatal.

mod grid;
pub(crate) mod table;
mod thermocline;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub use grid::{
    nearest_cell, parse_bathy_grid, parse_ocean_grid, read_bathy_grid, read_grid, read_ocean_grid,
    read_profiles, write_bathy_grid, write_ocean_grid, BathyGrid, Grid, GridKind, Lattice, OceanGrid, OceanSample, OceanVar,
    Profile,
};
pub use thermocline::{thermocline_depth, THERMOCLINE_DROP_C};

use table::{format_f64, format_ts, parse_date, parse_f64, parse_ts, RowReader};

pub const N_LAYERS: usize = 10;
/// Vertical extent of one echo-sounder layer, metres.
pub const LAYER_THICKNESS_M: f64 = 11.2;
/// Depth of the top of the shallowest layer, metres.
pub const FIRST_LAYER_TOP_M: f64 = 3.0;

pub const LOGBOOK_HEADER: [&str; 8] = [
    "event_id", "buoy_id", "buoy_model", "kind", "date", "lat", "lon", "catch_t",
];
pub const ECHO_HEADER: [&str; 14] = [
    "buoy_id", "ts_utc", "lat", "lon", "l1", "l2", "l3", "l4", "l5", "l6", "l7", "l8", "l9", "l10",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuoyModel {
    #[serde(rename = "ISL+")]
    IslPlus,
    #[serde(rename = "SLX+")]
    SlxPlus,
    #[serde(rename = "ISD+")]
    IsdPlus,
}

impl BuoyModel {
    pub const ALL: [BuoyModel; 3] = [BuoyModel::IslPlus, BuoyModel::SlxPlus, BuoyModel::IsdPlus];

    pub fn as_str(&self) -> &'static str {
        match self {
            BuoyModel::IslPlus => "ISL+",
            BuoyModel::SlxPlus => "SLX+",
            BuoyModel::IsdPlus => "ISD+",
        }
    }
}

impl fmt::Display for BuoyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuoyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ISL+" => Ok(BuoyModel::IslPlus),
            "SLX+" => Ok(BuoyModel::SlxPlus),
            "ISD+" => Ok(BuoyModel::IsdPlus),
            other => Err(Error::Validation(format!("unknown buoy model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    /// Purse-seine set; the catch is the supervised label.
    Set,
    /// New FAD deployment; biomass assumed zero.
    Deployment,
}

impl EventKind {
    pub fn code(&self) -> &'static str {
        match self {
            EventKind::Set => "SET",
            EventKind::Deployment => "DEPLOY",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s.trim() {
            "SET" => Some(EventKind::Set),
            "DEPLOY" => Some(EventKind::Deployment),
            _ => None,
        }
    }
}

/// One logbook row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    pub buoy_id: Arc<str>,
    pub buoy_model: BuoyModel,
    pub kind: EventKind,
    pub date: NaiveDate,
    pub position: GeoPoint,
    /// Tonnes caught; `Some` exactly when `kind` is `Set`.
    pub catch_t: Option<f64>,
}

impl Event {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.catch_t) {
            (EventKind::Deployment, Some(_)) => {
                Err(Error::Validation("catch on deployment".into()))
            }
            (EventKind::Set, None) => Err(Error::Validation("set without catch".into())),
            (EventKind::Set, Some(c)) if !c.is_finite() || c < 0.0 => {
                Err(Error::Validation(format!("invalid catch {c}")))
            }
            _ => Ok(()),
        }
    }

    /// Supervised target: the catch for sets, zero for deployments.
    pub fn target(&self) -> f64 {
        match self.kind {
            EventKind::Set => self.catch_t.unwrap_or(0.0),
            EventKind::Deployment => 0.0,
        }
    }
}

/// One hourly echo-sounder transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoRecord {
    pub buoy_id: Arc<str>,
    pub t_utc: DateTime<Utc>,
    /// Last known position of the buoy.
    pub position: GeoPoint,
    /// Tonnes per layer, shallowest first.
    pub layers: [f64; N_LAYERS],
}

impl EchoRecord {
    pub fn total(&self) -> f64 {
        self.layers.iter().sum()
    }

    /// The UTC hour this record belongs to.
    pub fn hour_key(&self) -> DateTime<Utc> {
        self.t_utc
            .with_minute(0)
            .and_then(|t| t.with_second(0))
            .and_then(|t| t.with_nanosecond(0))
            .unwrap_or(self.t_utc)
    }
}

/// A row that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub rows: Vec<T>,
    pub rejects: Vec<Reject>,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_logbook(path: impl AsRef<Path>) -> Result<Parsed<Event>> {
    let path = path.as_ref();
    parse_logbook(open(path)?, &file_label(path))
}

/// Parses logbook CSV from any byte stream.
pub fn parse_logbook<R: Read>(reader: R, label: &str) -> Result<Parsed<Event>> {
    let mut rows = RowReader::new(reader, label, &LOGBOOK_HEADER)?;
    let mut events: Vec<Event> = Vec::new();
    let mut rejects = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    while let Some(row) = rows.next_row() {
        let (line, fields) = match row {
            Ok(r) => r,
            Err(reject) => {
                rejects.push(reject);
                continue;
            }
        };
        match parse_event_row(&fields) {
            Ok(ev) => {
                if seen.insert(ev.event_id.clone(), ()).is_some() {
                    rejects.push(Reject {
                        line,
                        reason: format!("duplicate event_id {}", ev.event_id),
                    });
                } else {
                    events.push(ev);
                }
            }
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }
    Ok(Parsed {
        rows: events,
        rejects,
    })
}

fn parse_event_row(f: &[String]) -> std::result::Result<Event, String> {
    if f.len() != LOGBOOK_HEADER.len() {
        return Err(format!(
            "field count {} (expected {})",
            f.len(),
            LOGBOOK_HEADER.len()
        ));
    }
    let event_id = f[0].trim();
    let buoy_id = f[1].trim();
    if event_id.is_empty() || buoy_id.is_empty() {
        return Err("empty identifier".into());
    }
    let buoy_model: BuoyModel = f[2].parse().map_err(|e: Error| e.to_string())?;
    let kind = EventKind::from_code(&f[3]).ok_or_else(|| format!("unknown kind {:?}", f[3]))?;
    let date = parse_date(&f[4])?;
    let position = GeoPoint::new(parse_f64(&f[5])?, parse_f64(&f[6])?).map_err(|e| e.to_string())?;
    let catch_field = f[7].trim();
    let catch_t = match kind {
        EventKind::Deployment if !catch_field.is_empty() => {
            return Err("catch on deployment".into())
        }
        EventKind::Deployment => None,
        EventKind::Set if catch_field.is_empty() => return Err("set without catch".into()),
        EventKind::Set => {
            let c = parse_f64(catch_field)?;
            if c < 0.0 {
                return Err(format!("negative catch {c}"));
            }
            Some(c)
        }
    };
    Ok(Event {
        event_id: event_id.to_string(),
        buoy_id: Arc::from(buoy_id),
        buoy_model,
        kind,
        date,
        position,
        catch_t,
    })
}

pub fn read_echograms(path: impl AsRef<Path>) -> Result<Parsed<EchoRecord>> {
    let path = path.as_ref();
    parse_echograms(open(path)?, &file_label(path))
}

/// Parses echo-sounder CSV. Two rows for the same buoy and UTC hour keep the
/// one with the larger layer sum; the other is reported as a reject. Output
/// is sorted by buoy then time.
pub fn parse_echograms<R: Read>(reader: R, label: &str) -> Result<Parsed<EchoRecord>> {
    let mut rows = RowReader::new(reader, label, &ECHO_HEADER)?;
    let mut by_key: HashMap<(Arc<str>, DateTime<Utc>), (u64, EchoRecord)> = HashMap::new();
    let mut interned: HashMap<String, Arc<str>> = HashMap::new();
    let mut rejects = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, fields) = match row {
            Ok(r) => r,
            Err(reject) => {
                rejects.push(reject);
                continue;
            }
        };
        let rec = match parse_echo_row(&fields, &mut interned) {
            Ok(r) => r,
            Err(reason) => {
                rejects.push(Reject { line, reason });
                continue;
            }
        };
        let key = (rec.buoy_id.clone(), rec.hour_key());
        match by_key.get_mut(&key) {
            None => {
                by_key.insert(key, (line, rec));
            }
            Some(slot) => {
                let (kept_line, dropped_line) = if rec.total() > slot.1.total() {
                    let old = slot.0;
                    *slot = (line, rec);
                    (line, old)
                } else {
                    (slot.0, line)
                };
                rejects.push(Reject {
                    line: dropped_line,
                    reason: format!("duplicate hour (kept line {kept_line})"),
                });
            }
        }
    }
    let mut records: Vec<EchoRecord> = by_key.into_values().map(|(_, r)| r).collect();
    records.sort_by(|a, b| a.buoy_id.cmp(&b.buoy_id).then(a.t_utc.cmp(&b.t_utc)));
    rejects.sort_by_key(|r| r.line);
    Ok(Parsed { rows: records, rejects })
}

fn parse_echo_row(
    f: &[String],
    interned: &mut HashMap<String, Arc<str>>,
) -> std::result::Result<EchoRecord, String> {
    if f.len() != ECHO_HEADER.len() {
        return Err(format!(
            "layer count: {} fields (expected {})",
            f.len(),
            ECHO_HEADER.len()
        ));
    }
    let id = f[0].trim();
    if id.is_empty() {
        return Err("empty buoy_id".into());
    }
    let buoy_id = interned
        .entry(id.to_string())
        .or_insert_with(|| Arc::from(id))
        .clone();
    let t_utc = parse_ts(&f[1])?;
    let position = GeoPoint::new(parse_f64(&f[2])?, parse_f64(&f[3])?).map_err(|e| e.to_string())?;
    let mut layers = [0.0; N_LAYERS];
    for (k, slot) in layers.iter_mut().enumerate() {
        let v = parse_f64(&f[4 + k])?;
        if v < 0.0 {
            return Err(format!("negative tonnage in layer {}", k + 1));
        }
        *slot = v;
    }
    Ok(EchoRecord {
        buoy_id,
        t_utc,
        position,
        layers,
    })
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv write: {e}"))
}

pub fn write_logbook<W: Write>(w: W, events: &[Event]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(LOGBOOK_HEADER).map_err(csv_err)?;
    for e in events {
        out.write_record([
            e.event_id.clone(),
            e.buoy_id.to_string(),
            e.buoy_model.to_string(),
            e.kind.code().to_string(),
            e.date.format("%Y-%m-%d").to_string(),
            format_f64(e.position.lat()),
            format_f64(e.position.lon()),
            e.catch_t.map(format_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<logbook>", e))
}

pub fn write_echograms<W: Write>(w: W, records: &[EchoRecord]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(ECHO_HEADER).map_err(csv_err)?;
    let mut fields: Vec<String> = Vec::with_capacity(ECHO_HEADER.len());
    for r in records {
        fields.clear();
        fields.push(r.buoy_id.to_string());
        fields.push(format_ts(r.t_utc));
        fields.push(format_f64(r.position.lat()));
        fields.push(format_f64(r.position.lon()));
        fields.extend(r.layers.iter().map(|v| format_f64(*v)));
        out.write_record(&fields).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<echo>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LOG_HEAD: &str = "event_id,buoy_id,buoy_model,kind,date,lat,lon,catch_t\n";
    const ECHO_HEAD: &str = "buoy_id,ts_utc,lat,lon,l1,l2,l3,l4,l5,l6,l7,l8,l9,l10\n";

    fn logbook(body: &str) -> Parsed<Event> {
        parse_logbook(format!("{LOG_HEAD}{body}").as_bytes(), "t").unwrap()
    }

    fn echo(body: &str) -> Parsed<EchoRecord> {
        parse_echograms(format!("{ECHO_HEAD}{body}").as_bytes(), "t").unwrap()
    }

    #[test]
    fn set_row_parses() {
        let p = logbook("E1,B1,ISL+,SET,2019-05-02,-3.5,55.25,32.0\n");
        assert!(p.rejects.is_empty());
        let e = &p.rows[0];
        assert_eq!(e.kind, EventKind::Set);
        assert_eq!(e.catch_t, Some(32.0));
        assert_eq!(e.buoy_model, BuoyModel::IslPlus);
        assert_eq!(e.target(), 32.0);
    }

    #[test]
    fn deployment_with_catch_is_rejected() {
        let p = logbook("E1,B1,SLX+,DEPLOY,2019-05-02,-3.5,55.25,4\nE2,B1,SLX+,DEPLOY,2019-05-03,-3.5,55.25,\n");
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.rejects.len(), 1);
        assert_eq!(p.rejects[0].line, 2);
        assert_eq!(p.rejects[0].reason, "catch on deployment");
    }

    #[test]
    fn bad_rows_are_collected_not_fatal() {
        let p = logbook(
            "E1,B1,XXX,SET,2019-05-02,0,0,1\n\
             E2,B1,ISD+,SET,2019-13-02,0,0,1\n\
             E3,B1,ISD+,SET,2019-05-02,95,0,1\n\
             E4,B1,ISD+,SET,2019-05-02,0,0,-1\n\
             E5,B1,ISD+,SET,2019-05-02,0,0\n\
             E6,B1,ISD+,SET,2019-05-02,0,0,\n\
             E7,B1,ISD+,SET,2019-05-02,0,0,5\n\
             E7,B1,ISD+,SET,2019-05-02,0,0,5\n",
        );
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.rejects.len(), 7);
    }

    #[test]
    fn bad_header_is_fatal() {
        let err = parse_logbook("a,b,c\n".as_bytes(), "x.csv").unwrap_err();
        assert!(matches!(err, Error::Schema { line: 1, .. }), "{err}");
        assert!(read_logbook("/definitely/not/here.csv").is_err());
    }

    #[test]
    fn echo_row_parses() {
        let p = echo("B1,2019-05-02T03:00:00Z,1.0,2.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.3,0.3\n");
        assert!(p.rejects.is_empty());
        assert!((p.rows[0].total() - 4.2).abs() < 1e-12);
    }

    #[test]
    fn echo_row_with_nine_layers_is_rejected() {
        let p = echo("B1,2019-05-02T03:00:00Z,1.0,2.0,1,1,1,1,1,1,1,1,1\n");
        assert!(p.rows.is_empty());
        assert!(p.rejects[0].reason.starts_with("layer count"));
    }

    #[test]
    fn duplicate_hour_keeps_larger_sum() {
        let p = echo(
            "B1,2019-05-02T03:00:00Z,1.0,2.0,2,0,0,0,0,0,0,0,0,0\n\
             B1,2019-05-02T03:20:00Z,1.0,2.0,5,0,0,0,0,0,0,0,0,0\n\
             B1,2019-05-02T04:00:00Z,1.0,2.0,1,0,0,0,0,0,0,0,0,0\n",
        );
        assert_eq!(p.rows.len(), 2);
        assert_eq!(p.rows[0].total(), 5.0);
        assert_eq!(p.rejects.len(), 1);
        assert_eq!(p.rejects[0].line, 2);
    }

    #[test]
    fn writers_reach_a_fixpoint() {
        let p = logbook("E1,B1,ISL+,SET,2019-05-02,-3.1,55.123456789,32.5\nE2,B2,ISD+,DEPLOY,2019-05-03,1,-20,\n");
        let mut buf = Vec::new();
        write_logbook(&mut buf, &p.rows).unwrap();
        let again = parse_logbook(buf.as_slice(), "t").unwrap();
        assert_eq!(again, p);

        let e = echo("B1,2019-05-02T03:00:00Z,1.0,2.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.3,0.30000000000000004\n");
        let mut buf = Vec::new();
        write_echograms(&mut buf, &e.rows).unwrap();
        let again = parse_echograms(buf.as_slice(), "t").unwrap();
        assert_eq!(again, e);
    }

    proptest! {
        #[test]
        fn parsing_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..400)) {
            let mut with_header = LOG_HEAD.as_bytes().to_vec();
            with_header.extend_from_slice(&bytes);
            let _ = parse_logbook(with_header.as_slice(), "fuzz");
            let _ = parse_logbook(bytes.as_slice(), "fuzz");
            let mut with_header = ECHO_HEAD.as_bytes().to_vec();
            with_header.extend_from_slice(&bytes);
            let _ = parse_echograms(with_header.as_slice(), "fuzz");
        }
    }
}
