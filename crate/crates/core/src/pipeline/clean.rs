use std::fmt;

use serde::{Deserialize, Serialize};

use super::window::{EchoWindow, Extract, SkipReason};
use crate::geo::speed_between;
use crate::ingest::{BathyGrid, Event};

/// Minimum water depth for a usable position, metres.
pub const MIN_DEPTH_M: f64 = 200.0;
/// Buoy speed above which a track is treated as vessel-borne, knots.
pub const MAX_SPEED_KNOTS: f64 = 3.0;

/// Why an event left the dataset, in the order the checks run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DropRule {
    IdMismatch,
    NoSunset,
    InsufficientCoverage,
    Overlap,
    OnLand,
    Shallow,
    Speeding,
}

impl DropRule {
    pub const ALL: [DropRule; 7] = [
        DropRule::IdMismatch,
        DropRule::NoSunset,
        DropRule::InsufficientCoverage,
        DropRule::Overlap,
        DropRule::OnLand,
        DropRule::Shallow,
        DropRule::Speeding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropRule::IdMismatch => "id_mismatch",
            DropRule::NoSunset => "no_sunset",
            DropRule::InsufficientCoverage => "insufficient_coverage",
            DropRule::Overlap => "overlap",
            DropRule::OnLand => "on_land",
            DropRule::Shallow => "shallow",
            DropRule::Speeding => "speeding",
        }
    }

    pub fn parse(s: &str) -> Option<DropRule> {
        DropRule::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for DropRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-rule drop counts plus the surviving events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    counts: [usize; 7],
    pub survivors: Vec<String>,
    /// Every dropped event with the first rule it failed.
    pub dropped: Vec<(String, DropRule)>,
}

impl CleanReport {
    pub fn count(&self, rule: DropRule) -> usize {
        self.counts[rule as usize]
    }

    pub fn total_dropped(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn input_count(&self) -> usize {
        self.total_dropped() + self.survivors.len()
    }

    pub fn record(&mut self, event_id: &str, outcome: Option<DropRule>) {
        match outcome {
            Some(rule) => {
                self.counts[rule as usize] += 1;
                self.dropped.push((event_id.to_string(), rule));
            }
            None => self.survivors.push(event_id.to_string()),
        }
    }

    /// Combines two partial reports; ids are re-sorted so merge order does
    /// not show in the result.
    pub fn merge(mut self, other: CleanReport) -> CleanReport {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.survivors.extend(other.survivors);
        self.dropped.extend(other.dropped);
        self.sort_ids();
        self
    }

    pub fn sort_ids(&mut self) {
        self.survivors.sort();
        self.dropped.sort();
    }

    /// Aligned two-column table of rule counts.
    pub fn to_table(&self) -> String {
        let mut out = String::from("rule                   events\n");
        for rule in DropRule::ALL {
            out.push_str(&format!("{:<22} {:>6}\n", rule.as_str(), self.count(rule)));
        }
        out.push_str(&format!("{:<22} {:>6}\n", "kept", self.survivors.len()));
        out.push_str(&format!("{:<22} {:>6}\n", "total", self.input_count()));
        out
    }
}

/// Runs the cleaning rules for one event and returns the first one it fails.
///
/// `extract` is `None` when the event's buoy has no records at all.
pub fn check_event(event: &Event, extract: Option<&Extract>, bathy: &BathyGrid) -> Option<DropRule> {
    let window = match extract {
        None => return Some(DropRule::IdMismatch),
        Some(Extract::Skip(SkipReason::NoSunset)) => return Some(DropRule::NoSunset),
        Some(Extract::Skip(SkipReason::NoRecords)) => return Some(DropRule::InsufficientCoverage),
        Some(Extract::Window(w)) => w,
    };
    if window.touches_solar_date(event.position.lon(), event.date) {
        return Some(DropRule::Overlap);
    }
    // a position without bathymetry cannot be shown to be at sea
    if bathy.depth_at(event.position).is_none_or(|d| d <= 0.0) {
        return Some(DropRule::OnLand);
    }
    if has_shallow_record(window, bathy) {
        return Some(DropRule::Shallow);
    }
    if has_fast_leg(window) {
        return Some(DropRule::Speeding);
    }
    None
}

fn has_shallow_record(window: &EchoWindow, bathy: &BathyGrid) -> bool {
    window
        .track
        .iter()
        .any(|&(_, p)| bathy.depth_at(p).is_none_or(|d| d < MIN_DEPTH_M))
}

fn has_fast_leg(window: &EchoWindow) -> bool {
    window.track.windows(2).any(|leg| {
        let ((ta, a), (tb, b)) = (leg[0], leg[1]);
        speed_between(a, ta, b, tb).is_ok_and(|v| v > MAX_SPEED_KNOTS)
    })
}

/// Applies [`check_event`] to every event; `extracts[i]` belongs to `events[i]`.
pub fn clean(events: &[Event], extracts: &[Option<Extract>], bathy: &BathyGrid) -> CleanReport {
    let mut report = CleanReport::default();
    for (ev, ex) in events.iter().zip(extracts) {
        report.record(&ev.event_id, check_event(ev, ex.as_ref(), bathy));
    }
    report
}
