use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{solar_day, to_solar_time, GeoPoint, SolarDay};
use crate::ingest::{EchoRecord, Event, EventKind, N_LAYERS};

/// Window lengths, in hours, the pipeline supports.
pub const WINDOW_HOURS: [usize; 3] = [24, 48, 72];

/// How far around the window to look for any transmission before declaring
/// the buoy dead.
pub const LIVENESS_MARGIN_DAYS: i64 = 7;

const HOUR_MS: i64 = 3_600_000;

pub fn check_window_len(w: usize) -> Result<()> {
    if WINDOW_HOURS.contains(&w) {
        Ok(())
    } else {
        Err(Error::Validation(format!("window must be one of {WINDOW_HOURS:?} hours, got {w}")))
    }
}

/// One populated hour of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub t_utc: DateTime<Utc>,
    pub position: GeoPoint,
    pub layers: [f64; N_LAYERS],
}

impl Column {
    pub fn total(&self) -> f64 {
        self.layers.iter().sum()
    }
}

/// The W-hour echo-sounder block attached to one event.
///
/// Columns are indexed by hours before `end_utc`: index 0 holds the record in
/// `(end - 1h, end]`, index `w - 1` the earliest hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoWindow {
    pub event_id: String,
    pub w: usize,
    /// The solar day whose sunset anchors the window.
    pub anchor: SolarDay,
    pub anchor_sunset: DateTime<Utc>,
    /// Last instant covered by the window.
    pub end_utc: DateTime<Utc>,
    pub columns: Vec<Option<Column>>,
    /// Every in-window record in time order, before hour bucketing.
    pub track: Vec<(DateTime<Utc>, GeoPoint)>,
}

impl EchoWindow {
    pub fn start_utc(&self) -> DateTime<Utc> {
        self.end_utc - Duration::hours(self.w as i64)
    }

    pub fn hour(&self, x: usize) -> Option<&Column> {
        self.columns.get(x).and_then(Option::as_ref)
    }

    /// Tonnes at `layer` (0-based) and hour `x`, `None` for a missing hour.
    pub fn cell(&self, layer: usize, x: usize) -> Option<f64> {
        self.hour(x).map(|c| c.layers[layer])
    }

    pub fn n_zero_readings(&self) -> usize {
        self.columns.iter().filter(|c| c.is_none()).count()
    }

    /// Sum of all cells, missing hours counted as zero.
    pub fn sum(&self) -> f64 {
        self.columns.iter().flatten().map(Column::total).sum()
    }

    /// Mean over the full 10 × W matrix, missing hours counted as zero.
    pub fn mean(&self) -> f64 {
        self.sum() / (self.w * N_LAYERS) as f64
    }

    /// Whether any part of the window falls on `date` in the solar time of `lon`.
    pub fn touches_solar_date(&self, lon: f64, date: NaiveDate) -> bool {
        let first = to_solar_time(lon, self.start_utc() + Duration::milliseconds(1)).date();
        let last = to_solar_time(lon, self.end_utc).date();
        first <= date && date <= last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    /// The anchor day has no sunset (polar day or night).
    NoSunset,
    /// No record in the window and none within the liveness margin.
    NoRecords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Extract {
    Window(EchoWindow),
    Skip(SkipReason),
}

/// Solar date whose sunset anchors the window for this event.
pub fn anchor_date(event: &Event) -> Result<NaiveDate> {
    let d = match event.kind {
        EventKind::Set => event.date.pred_opt(),
        EventKind::Deployment => event.date.succ_opt(),
    };
    d.ok_or_else(|| Error::Domain(format!("no anchor day next to {}", event.date)))
}

/// Cuts the window for `event` out of its buoy's track.
///
/// `track` must hold only this buoy's records, sorted by time. A set's window
/// ends at sunset of the previous day; a deployment's window starts at sunset
/// of the following day and runs `w` hours forward, so neither touches the
/// event day.
pub fn extract_window(event: &Event, track: &[EchoRecord], w: usize) -> Result<Extract> {
    check_window_len(w)?;
    let anchor = solar_day(event.position, anchor_date(event)?)?;
    let Some(sunset) = anchor.sunset_utc.time() else {
        return Ok(Extract::Skip(SkipReason::NoSunset));
    };
    let span = Duration::hours(w as i64);
    let end = match event.kind {
        EventKind::Set => sunset,
        EventKind::Deployment => sunset + span,
    };
    let start = end - span;
    let lo = track.partition_point(|r| r.t_utc <= start);
    let hi = track.partition_point(|r| r.t_utc <= end);
    let in_window = &track[lo..hi];

    if in_window.is_empty() {
        let margin = Duration::days(LIVENESS_MARGIN_DAYS);
        let alive = track
            .iter()
            .any(|r| r.t_utc >= start - margin && r.t_utc <= end + margin);
        if !alive {
            return Ok(Extract::Skip(SkipReason::NoRecords));
        }
    }

    let mut columns: Vec<Option<Column>> = vec![None; w];
    for r in in_window {
        let x = ((end - r.t_utc).num_milliseconds() / HOUR_MS) as usize;
        let col = Column {
            t_utc: r.t_utc,
            position: r.position,
            layers: r.layers,
        };
        match &columns[x] {
            Some(kept) if kept.total() >= col.total() => {}
            _ => columns[x] = Some(col),
        }
    }
    Ok(Extract::Window(EchoWindow {
        event_id: event.event_id.clone(),
        w,
        anchor,
        anchor_sunset: sunset,
        end_utc: end,
        columns,
        track: in_window.iter().map(|r| (r.t_utc, r.position)).collect(),
    }))
}
