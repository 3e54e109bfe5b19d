//! From raw tables to labeled examples: link events to buoy tracks, cut the
//! sunset-anchored windows, clean, and attach oceanography.

mod clean;
mod ocean;
mod window;

use std::collections::HashMap;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{ocean_basin, Basin};
use crate::geo::to_solar_time;
use crate::ingest::{BathyGrid, BuoyModel, EchoRecord, Event, EventKind, OceanGrid};

pub use clean::{check_event, clean, CleanReport, DropRule, MAX_SPEED_KNOTS, MIN_DEPTH_M};
pub use ocean::{attach_ocean, sample_position, OceanBlock, OCEAN_HOURS};
pub use window::{
    anchor_date, check_window_len, extract_window, Column, EchoWindow, Extract, SkipReason,
    LIVENESS_MARGIN_DAYS, WINDOW_HOURS,
};

/// Calendar and position context of an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub date: NaiveDate,
    pub year: i32,
    pub lat: f64,
    pub lon: f64,
    pub basin: Basin,
    /// Sunrise and sunset of the anchor day, in solar hours at the event.
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    pub buoy_model: BuoyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub event_id: String,
    pub kind: EventKind,
    pub window: EchoWindow,
    pub ocean: OceanBlock,
    pub context: Context,
    /// Tonnes of tuna; zero for deployments.
    pub y: f64,
}

/// Buoy tracks keyed by id, each a time-sorted slice of `records`.
pub struct Tracks<'a> {
    by_buoy: HashMap<&'a str, &'a [EchoRecord]>,
}

impl<'a> Tracks<'a> {
    /// `records` must be sorted by buoy then time, as
    /// [`crate::ingest::parse_echograms`] returns them.
    pub fn new(records: &'a [EchoRecord]) -> Self {
        debug_assert!(records
            .windows(2)
            .all(|w| (&w[0].buoy_id, w[0].t_utc) <= (&w[1].buoy_id, w[1].t_utc)));
        let mut by_buoy = HashMap::new();
        for chunk in records.chunk_by(|a, b| a.buoy_id == b.buoy_id) {
            by_buoy.insert(&*chunk[0].buoy_id, chunk);
        }
        Tracks { by_buoy }
    }

    pub fn get(&self, buoy_id: &str) -> Option<&'a [EchoRecord]> {
        self.by_buoy.get(buoy_id).copied()
    }

    pub fn len(&self) -> usize {
        self.by_buoy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_buoy.is_empty()
    }
}

/// Exact buoy-id matching of events to tracks.
pub struct Linkage<'a> {
    /// `matched[i]` is the track for `events[i]`, if any.
    pub matched: Vec<Option<&'a [EchoRecord]>>,
    pub unmatched: Vec<String>,
}

pub fn link_events<'a>(events: &[Event], tracks: &Tracks<'a>) -> Linkage<'a> {
    let matched: Vec<_> = events.iter().map(|e| tracks.get(&e.buoy_id)).collect();
    let unmatched = events
        .iter()
        .zip(&matched)
        .filter(|(_, m)| m.is_none())
        .map(|(e, _)| e.event_id.clone())
        .collect();
    Linkage { matched, unmatched }
}

fn context(event: &Event, window: &EchoWindow) -> Context {
    let lon = event.position.lon();
    let solar_hour = |t| to_solar_time(lon, t).hour_of_day();
    Context {
        date: event.date,
        year: event.date.year(),
        lat: event.position.lat(),
        lon,
        basin: ocean_basin(event.position),
        sunrise_hour: window.anchor.sunrise_utc.time().map_or(f64::NAN, solar_hour),
        sunset_hour: solar_hour(window.anchor_sunset),
        buoy_model: event.buoy_model,
    }
}

/// Runs link → extract → clean → attach → label. Examples come back sorted
/// by event id; the report counts every input event exactly once.
pub fn build_dataset(
    events: &[Event],
    records: &[EchoRecord],
    ocean: &OceanGrid,
    bathy: &BathyGrid,
    w: usize,
) -> Result<(Vec<LabeledExample>, CleanReport)> {
    check_window_len(w)?;
    let sorted;
    let records = if records
        .windows(2)
        .all(|p| (&p[0].buoy_id, p[0].t_utc) <= (&p[1].buoy_id, p[1].t_utc))
    {
        records
    } else {
        let mut v = records.to_vec();
        v.sort_by(|a, b| a.buoy_id.cmp(&b.buoy_id).then(a.t_utc.cmp(&b.t_utc)));
        sorted = v;
        &sorted
    };
    let tracks = Tracks::new(records);
    let linkage = link_events(events, &tracks);

    let outcomes: Vec<(Option<DropRule>, Option<LabeledExample>)> = events
        .par_iter()
        .zip(linkage.matched.par_iter())
        .map(|(ev, track)| -> Result<_> {
            let extract = track.map(|t| extract_window(ev, t, w)).transpose()?;
            let verdict = check_event(ev, extract.as_ref(), bathy);
            let example = match (verdict, extract) {
                (None, Some(Extract::Window(window))) => Some(LabeledExample {
                    event_id: ev.event_id.clone(),
                    kind: ev.kind,
                    ocean: attach_ocean(&window, ev.position, ocean),
                    context: context(ev, &window),
                    y: ev.target(),
                    window,
                }),
                _ => None,
            };
            Ok((verdict, example))
        })
        .collect::<Result<_>>()?;

    let mut report = CleanReport::default();
    let mut examples = Vec::new();
    for (ev, (verdict, example)) in events.iter().zip(outcomes) {
        report.record(&ev.event_id, verdict);
        examples.extend(example);
    }
    report.sort_ids();
    examples.sort_by(|a, b| a.event_id.cmp(&b.event_id));
    Ok((examples, report))
}
