use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::window::EchoWindow;
use crate::geo::GeoPoint;
use crate::ingest::{nearest_cell, OceanGrid, OceanVar};

/// Hours before the window end at which oceanography is sampled.
pub const OCEAN_HOURS: [usize; 4] = [0, 23, 47, 71];

/// Oceanography for one event: `values[var][k]` is variable `var` at
/// `OCEAN_HOURS[k]` hours before the window end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanBlock {
    pub values: [[Option<f64>; 4]; OceanVar::COUNT],
}

impl OceanBlock {
    pub fn get(&self, var: OceanVar, k: usize) -> Option<f64> {
        self.values[var.index()][k]
    }

    /// Set when no lookup produced any value.
    pub fn all_missing(&self) -> bool {
        self.values.iter().flatten().all(Option::is_none)
    }
}

/// Position used for the sample at hour `x`: the nearest populated hour of
/// the window (earlier index wins a tie), else `fallback`.
pub fn sample_position(window: &EchoWindow, x: usize, fallback: GeoPoint) -> GeoPoint {
    for k in 0..window.w {
        for cand in [x.checked_sub(k), x.checked_add(k).filter(|_| k > 0)] {
            if let Some(col) = cand.and_then(|c| window.hour(c)) {
                return col.position;
            }
        }
    }
    fallback
}

/// Looks up the grid at the four sample hours. Hours beyond the window, and
/// dates outside the grid's axis, come back missing.
pub fn attach_ocean(window: &EchoWindow, fallback: GeoPoint, grid: &OceanGrid) -> OceanBlock {
    let mut values = [[None; 4]; OceanVar::COUNT];
    for (k, &x) in OCEAN_HOURS.iter().enumerate() {
        if x >= window.w {
            continue;
        }
        let p = sample_position(window, x, fallback);
        let date = (window.end_utc - Duration::hours(x as i64)).date_naive();
        if let Ok(sample) = nearest_cell(grid, p, date) {
            for var in OceanVar::ALL {
                values[var.index()][k] = sample.get(var);
            }
        }
    }
    OceanBlock { values }
}
