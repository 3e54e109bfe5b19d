//! Smooth analytic ocean fields and the gridded files sampled from them.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::Rng as _;

use super::{Region, SynthConfig};
use crate::ingest::{BathyGrid, Lattice, OceanGrid, OceanVar};
use crate::rng;

/// Land depth, shallow-shelf depth and open-ocean depth, metres.
pub const LAND_DEPTH_M: f64 = -50.0;
pub const SHELF_DEPTH_M: f64 = 100.0;
pub const DEEP_DEPTH_M: f64 = 4000.0;

const BATHY_STEP_DEG: f64 = 0.25;

/// Climatological mean and swing of each variable, in `OceanVar` order.
const MEAN_AMP: [(f64, f64); OceanVar::COUNT] = [
    (27.0, 2.0),  // Temp, degC
    (0.3, 0.15),  // Chl, mg/m3
    (4.6, 0.3),   // O2, ml/l
    (35.0, 0.4),  // Sal, psu
    (80.0, 30.0), // Thermo, m
    (0.4, 0.25),  // Cur, m/s
    (0.0, 0.15),  // Zos, m
];

#[derive(Debug, Clone, Copy)]
struct Wave {
    k_lat: f64,
    k_lon: f64,
    phase_lat: f64,
    phase_lon: f64,
    omega_lat: f64,
    omega_lon: f64,
}

/// One standardized travelling wave per variable; `z` lies in [-1, 1] and
/// the physical value is `mean + amp * z`.
#[derive(Debug, Clone)]
pub struct OceanFields {
    waves: [Wave; OceanVar::COUNT],
}

impl OceanFields {
    pub fn new(seed: u64) -> Self {
        let mut r = rng::stream(seed, &[rng::SYNTH, 3]);
        let waves = std::array::from_fn(|_| Wave {
            k_lat: TAU / r.random_range(10.0..20.0),
            k_lon: TAU / r.random_range(12.0..24.0),
            phase_lat: r.random_range(0.0..TAU),
            phase_lon: r.random_range(0.0..TAU),
            omega_lat: TAU / r.random_range(40.0..80.0),
            omega_lon: TAU / r.random_range(40.0..80.0),
        });
        OceanFields { waves }
    }

    /// Standardized anomalies at a position, `day` days after the start.
    pub fn z(&self, lat: f64, lon: f64, day: f64) -> [f64; OceanVar::COUNT] {
        self.waves.map(|w| {
            (w.k_lat * lat + w.phase_lat + w.omega_lat * day).sin()
                * (w.k_lon * lon + w.phase_lon + w.omega_lon * day).cos()
        })
    }

    pub fn value(&self, var: OceanVar, z: f64) -> f64 {
        let (mean, amp) = MEAN_AMP[var.index()];
        mean + amp * z
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Lattice spanning the drift box plus the coastal strips to its west.
pub(crate) fn lattice(region: &Region, step: f64) -> Lattice {
    let lat_lo = (region.lat_min - 2.0).div_euclid(step) * step;
    let lon_lo = (region.lon_min - 4.0).div_euclid(step) * step;
    Lattice {
        lats: axis(lat_lo, region.lat_max + 2.0, step),
        lons: axis(lon_lo, region.lon_max + 2.0, step),
    }
}

/// Coast runs north-south: land, then a shelf strip, then deep water.
pub fn depth_profile(region: &Region, lon: f64) -> f64 {
    if lon < region.lon_min - 1.5 {
        LAND_DEPTH_M
    } else if lon < region.lon_min - 0.5 {
        SHELF_DEPTH_M
    } else {
        DEEP_DEPTH_M
    }
}

pub(crate) fn bathy_grid(region: &Region) -> BathyGrid {
    BathyGrid::from_fn(lattice(region, BATHY_STEP_DEG), |_, lon| Some(depth_profile(region, lon)))
}

/// Daily grid sampled at local noon with a random fraction of cells blanked.
pub(crate) fn ocean_grid(cfg: &SynthConfig, fields: &OceanFields, first: NaiveDate, n_days: usize) -> OceanGrid {
    let lat = lattice(&cfg.region, cfg.ocean.step_deg);
    let mut grid = OceanGrid::empty(lat.clone(), first, n_days);
    let mut r = rng::stream(cfg.seed, &[rng::SYNTH, 4]);
    let offset = (first - cfg.start).num_days() as f64;
    for d in 0..n_days {
        for (i, &la) in lat.lats.iter().enumerate() {
            for (j, &lo) in lat.lons.iter().enumerate() {
                let z = fields.z(la, lo, offset + d as f64 + 0.5);
                for var in OceanVar::ALL {
                    let keep = r.random::<f64>() >= cfg.ocean.missing_frac;
                    grid.set(d, i, j, var, keep.then(|| fields.value(var, z[var.index()])));
                }
            }
        }
    }
    grid
}
