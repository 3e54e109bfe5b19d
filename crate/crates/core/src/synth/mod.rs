//! Synthetic buoy world with known biomass.
//!
//! Buoys drift in a deep-water box east of a north-south coast. Each one is
//! deployed once, then transmits an hourly ten-layer echogram until the run
//! ends and is fished from time to time. Tuna colonize a buoy along a
//! logistic curve in soak time, gather by day, thin out at night and scale
//! with the local ocean state. Rule violations are planted at exact counts
//! so the cleaning stage can be checked against them.

mod fields;
mod validate;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use fields::{depth_profile, OceanFields, DEEP_DEPTH_M, LAND_DEPTH_M, SHELF_DEPTH_M};
pub use validate::{validate, Check, ValidationReport};

use crate::error::{Error, Result};
use crate::geo::{from_solar_time, solar_day, to_solar_time, GeoPoint, SolarTime};
use crate::ingest::{
    csv_err, csv_writer, write_bathy_grid, write_echograms, write_logbook, write_ocean_grid, BathyGrid, BuoyModel,
    EchoRecord, Event, EventKind, OceanGrid, OceanVar, N_LAYERS,
};
use crate::ingest::table::{format_f64, format_ts};
use crate::pipeline::{anchor_date, extract_window, DropRule, Extract};
use crate::rng;

/// Days after deployment before the first set may happen.
const FIRST_SET_DAYS: i64 = 10;
/// Minimum days between sets on one buoy; keeps 72 h windows disjoint.
const SET_GAP_DAYS: i64 = 6;
/// Deployments stop this many days before the end so their window fits.
const DEPLOY_MARGIN_DAYS: usize = 6;
const SET_SOLAR_HOUR: u32 = 6;
const MAX_DRIFT_KNOTS: f64 = 2.5;
/// Coverage violations move the event this far past the last transmission.
const COVERAGE_GAP_DAYS: i64 = 20;
/// Latitude jump, degrees, planted for a speeding violation.
const SPEED_JUMP_DEG: f64 = 0.4;
/// Aggregation level at which the set policy fires at its base rate.
const POLICY_REF_LEVEL: f64 = 0.5;
/// Echo totals below this many tonnes are never transmitted.
pub const CENSOR_T: f64 = 1.0;
/// Planted shallow and speeding records sit in the last (sets) or first
/// (deployments) 24 h, so every window length contains them.
const PLANT_WINDOW_H: usize = 24;

/// The deep-water drift box; land and a shelf strip lie to its west.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region {
            lat_min: -8.0,
            lat_max: 8.0,
            lon_min: 42.5,
            lon_max: 64.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OceanConfig {
    /// Spacing of the daily ocean lattice, degrees.
    pub step_deg: f64,
    /// Share of grid cells written as missing.
    pub missing_frac: f64,
}

impl Default for OceanConfig {
    fn default() -> Self {
        OceanConfig {
            step_deg: 1.0,
            missing_frac: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationConfig {
    /// Soak days at which colonization reaches half the buoy's capacity.
    pub soak_half_days: f64,
    pub soak_scale_days: f64,
    /// Share of the daytime aggregation still under the buoy at night.
    pub night_level: f64,
    /// Log-sd of per-buoy capacity.
    pub capacity_sigma: f64,
    /// Day-to-day log noise of the aggregation: AR(1) with this sd and lag-one correlation.
    pub day_sigma: f64,
    pub day_phi: f64,
    /// Independent daily log noise on what the sounder sees.
    pub echo_sigma: f64,
    /// Share of the aggregation the sounder sees in an average ocean.
    pub visibility: f64,
    /// Median non-tuna backscatter, tonnes.
    pub background_t: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            soak_half_days: 10.0,
            soak_scale_days: 2.5,
            night_level: 0.03,
            capacity_sigma: 0.45,
            day_sigma: 0.4,
            day_phi: 0.9,
            echo_sigma: 0.7,
            visibility: 0.65,
            background_t: 0.5,
        }
    }
}

/// Share of events given each violation. Overlap cannot be planted: the
/// window geometry never reaches the event day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViolationRates {
    pub id_mismatch: f64,
    pub no_sunset: f64,
    pub insufficient_coverage: f64,
    pub on_land: f64,
    pub shallow: f64,
    pub speeding: f64,
}

impl ViolationRates {
    pub const RULES: [DropRule; 6] = [
        DropRule::IdMismatch,
        DropRule::NoSunset,
        DropRule::InsufficientCoverage,
        DropRule::OnLand,
        DropRule::Shallow,
        DropRule::Speeding,
    ];

    pub fn uniform(rate: f64) -> Self {
        ViolationRates {
            id_mismatch: rate,
            no_sunset: rate,
            insufficient_coverage: rate,
            on_land: rate,
            shallow: rate,
            speeding: rate,
        }
    }

    pub fn get(&self, rule: DropRule) -> f64 {
        match rule {
            DropRule::IdMismatch => self.id_mismatch,
            DropRule::NoSunset => self.no_sunset,
            DropRule::InsufficientCoverage => self.insufficient_coverage,
            DropRule::OnLand => self.on_land,
            DropRule::Shallow => self.shallow,
            DropRule::Speeding => self.speeding,
            DropRule::Overlap => 0.0,
        }
    }
}

impl Default for ViolationRates {
    fn default() -> Self {
        ViolationRates::uniform(0.02)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_buoys: usize,
    pub days: usize,
    pub start: NaiveDate,
    pub region: Region,
    pub ocean: OceanConfig,
    pub aggregation: AggregationConfig,
    /// Strength of the ocean's pull on biomass and on echo visibility; zero
    /// makes the ocean irrelevant.
    pub ocean_coupling: f64,
    pub catch_median_t: f64,
    /// Log-sd of catch around the aggregation present at the set.
    pub catch_sigma: f64,
    /// Daily set probability at the reference aggregation level.
    pub set_rate: f64,
    /// Exponent tying the set probability to the previous day's
    /// aggregation; zero means skippers fish at random.
    pub selection_bias: f64,
    pub violations: ViolationRates,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_buoys: 200,
            days: 120,
            start: NaiveDate::from_ymd_opt(2019, 5, 1).expect("valid date"),
            region: Region::default(),
            ocean: OceanConfig::default(),
            aggregation: AggregationConfig::default(),
            ocean_coupling: 1.0,
            catch_median_t: 30.0,
            catch_sigma: 0.35,
            set_rate: 0.08,
            selection_bias: 1.0,
            violations: ViolationRates::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        let r = &self.region;
        if self.n_buoys == 0 {
            return bad("at least one buoy is needed".into());
        }
        if self.days < 2 * DEPLOY_MARGIN_DAYS {
            return bad(format!("a run needs at least {} days", 2 * DEPLOY_MARGIN_DAYS));
        }
        if !(r.lat_min >= -60.0 && r.lat_max <= 60.0 && r.lat_max - r.lat_min >= 1.0) {
            return bad("region latitudes must span at least 1 degree inside [-60, 60]".into());
        }
        if !(r.lon_min >= -170.0 && r.lon_max <= 170.0 && r.lon_max - r.lon_min >= 2.0) {
            return bad("region longitudes must span at least 2 degrees inside [-170, 170]".into());
        }
        if !(self.ocean.step_deg > 0.0 && self.ocean.step_deg <= 5.0) {
            return bad(format!("ocean step {} outside (0, 5]", self.ocean.step_deg));
        }
        let a = &self.aggregation;
        let unit = [
            ("missing fraction", self.ocean.missing_frac),
            ("night level", a.night_level),
            ("day_phi", a.day_phi),
        ];
        if let Some((name, v)) = unit.iter().find(|(_, v)| !(0.0..1.0).contains(v)) {
            return bad(format!("{name} {v} outside [0, 1)"));
        }
        if !(a.visibility > 0.0 && a.visibility < 1.0) {
            return bad(format!("visibility {} outside (0, 1)", a.visibility));
        }
        let positive = [
            ("soak_half_days", a.soak_half_days),
            ("soak_scale_days", a.soak_scale_days),
            ("catch_median_t", self.catch_median_t),
            ("set_rate", self.set_rate),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("{name} must be positive, got {v}"));
        }
        let non_negative = [
            ("capacity_sigma", a.capacity_sigma),
            ("day_sigma", a.day_sigma),
            ("echo_sigma", a.echo_sigma),
            ("background_t", a.background_t),
            ("ocean_coupling", self.ocean_coupling),
            ("catch_sigma", self.catch_sigma),
            ("selection_bias", self.selection_bias),
        ];
        if let Some((name, v)) = non_negative.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("{name} must be non-negative, got {v}"));
        }
        let rates: Vec<f64> = ViolationRates::RULES.iter().map(|&r| self.violations.get(r)).collect();
        if rates.iter().any(|v| !(0.0..=1.0).contains(v)) || rates.iter().sum::<f64>() > 1.0 {
            return bad("violation rates must lie in [0, 1] and sum to at most 1".into());
        }
        Ok(())
    }

    fn start_utc(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&self.start.and_time(NaiveTime::MIN))
    }

    fn end_date(&self) -> NaiveDate {
        self.start + Duration::days(self.days as i64)
    }
}

/// Latent state of one buoy-hour, transmitted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthHour {
    pub buoy_id: Arc<str>,
    pub t_utc: DateTime<Utc>,
    pub solar_hour: f64,
    /// Tuna under the buoy, tonnes.
    pub tuna_t: f64,
    /// What the sounder measures, per layer, before censoring.
    pub layers: [f64; N_LAYERS],
    pub latent_b: f64,
    pub censored: bool,
    /// Probability this hour is censored given everything but the daily
    /// noise terms.
    pub p_censored: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub event_id: String,
    pub kind: EventKind,
    pub rule_violation: Option<DropRule>,
    pub y_true: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    /// Sorted by buoy, then time.
    pub hours: Vec<TruthHour>,
    /// Sorted by event id.
    pub events: Vec<TruthEvent>,
}

impl GroundTruth {
    pub fn write_hours<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["buoy_id", "ts_utc", "latent_b"]).map_err(csv_err)?;
        for h in &self.hours {
            out.write_record([h.buoy_id.to_string(), format_ts(h.t_utc), format_f64(h.latent_b)])
                .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<ground truth>", e))
    }

    pub fn write_events<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["event_id", "rule_violation", "y_true"]).map_err(csv_err)?;
        for e in &self.events {
            out.write_record([
                e.event_id.clone(),
                e.rule_violation.map_or(String::new(), |r| r.to_string()),
                format_f64(e.y_true),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::io("<ground truth events>", e))
    }

    pub fn event(&self, id: &str) -> Option<&TruthEvent> {
        self.events
            .binary_search_by(|e| e.event_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.events[i])
    }
}

/// A generated world, ready to be written as input files.
#[derive(Debug, Clone)]
pub struct World {
    pub config: SynthConfig,
    pub events: Vec<Event>,
    /// Transmitted records, sorted by buoy then time.
    pub records: Vec<EchoRecord>,
    pub ocean: OceanGrid,
    pub bathy: BathyGrid,
    pub truth: GroundTruth,
    /// Factor mapping raw aggregation units to tonnes.
    pub tonnes_per_unit: f64,
}

pub const FILE_NAMES: [&str; 6] = [
    "logbook.csv",
    "echo.csv",
    "ocean.csv",
    "bathy.csv",
    "ground_truth.csv",
    "ground_truth_events.csv",
];

impl World {
    /// Violations the configuration asks for: round(rate × events).
    pub fn planned(&self, rule: DropRule) -> usize {
        (self.config.violations.get(rule) * self.events.len() as f64).round() as usize
    }

    pub fn injected(&self, rule: DropRule) -> usize {
        self.truth.events.iter().filter(|e| e.rule_violation == Some(rule)).count()
    }

    /// Writes the four input tables and the two ground-truth tables into
    /// `dir`, creating it if needed. Returns the paths in [`FILE_NAMES`] order.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths: Vec<PathBuf> = FILE_NAMES.iter().map(|n| dir.join(n)).collect();
        let open = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| Error::io(p, e));
        write_logbook(open(&paths[0])?, &self.events)?;
        write_echograms(open(&paths[1])?, &self.records)?;
        write_ocean_grid(open(&paths[2])?, &self.ocean)?;
        write_bathy_grid(open(&paths[3])?, &self.bathy)?;
        self.truth.write_hours(open(&paths[4])?)?;
        self.truth.write_events(open(&paths[5])?)?;
        Ok(paths)
    }
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(v: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (v * s).round() / s
}

fn truncate_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    t.with_minute(0).and_then(|t| t.with_second(0)).and_then(|t| t.with_nanosecond(0)).unwrap_or(t)
}

fn days_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    (b - a).num_seconds() as f64 / 86_400.0
}

/// Gaussian weights over the layers, centred on a fractional layer index.
fn layer_profile(centre: f64) -> [f64; N_LAYERS] {
    let mut w: [f64; N_LAYERS] = std::array::from_fn(|l| (-((l as f64 - centre).powi(2)) / (2.0 * 1.5 * 1.5)).exp());
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// 1 at solar noon, 0 from dusk to dawn.
fn daylight(solar_hour: f64) -> f64 {
    (std::f64::consts::PI * (solar_hour - 12.0) / 12.0).cos().max(0.0)
}

struct RawHour {
    t: DateTime<Utc>,
    position: GeoPoint,
    solar_hour: f64,
    /// Capacity × colonization × diurnal gate × ocean multiplier.
    expected: f64,
    /// Aggregation day noise on the log scale.
    eps: f64,
    eta: f64,
    vis_base: f64,
    background: f64,
}

struct RawSet {
    t: DateTime<Utc>,
    date: NaiveDate,
    position: GeoPoint,
    catch: f64,
}

struct BuoySim {
    id: Arc<str>,
    model: BuoyModel,
    deploy_t: DateTime<Utc>,
    deploy_at: GeoPoint,
    sets: Vec<RawSet>,
    hours: Vec<RawHour>,
}

struct Ocean<'a> {
    fields: &'a OceanFields,
    coupling: f64,
    vis_logit: f64,
}

impl Ocean<'_> {
    /// (biomass multiplier, visible share) at a point and time.
    fn effect(&self, p: GeoPoint, day: f64) -> (f64, f64) {
        let z = self.fields.z(p.lat(), p.lon(), day);
        let c = self.coupling;
        let mult = (c * (0.35 * z[OceanVar::Chl.index()] + 0.25 * z[OceanVar::Temp.index()])).exp();
        let vis = sigmoid(self.vis_logit - 1.5 * c * z[OceanVar::Thermo.index()]);
        (mult, vis)
    }
}

fn drift_track(cfg: &SynthConfig, r: &mut rng::Rng, hours: usize) -> Vec<GeoPoint> {
    let reg = &cfg.region;
    let mut lat = r.random_range(reg.lat_min..=reg.lat_max);
    let mut lon = r.random_range(reg.lon_min..=reg.lon_max);
    let n = |r: &mut rng::Rng| -> f64 { StandardNormal.sample(r) };
    let (mut vn, mut ve) = (0.5 * n(r), 0.5 * n(r));
    let mut out = Vec::with_capacity(hours + 1);
    out.push(GeoPoint::new(lat, lon).expect("inside region"));
    for _ in 0..hours {
        vn = 0.9 * vn + 0.35 * n(r);
        ve = 0.9 * ve + 0.35 * n(r);
        let speed = vn.hypot(ve);
        if speed > MAX_DRIFT_KNOTS {
            vn *= MAX_DRIFT_KNOTS / speed;
            ve *= MAX_DRIFT_KNOTS / speed;
        }
        lat += vn / 60.0;
        lon += ve / (60.0 * lat.to_radians().cos());
        // reflections never lengthen a step, so the speed cap survives them
        if lat > reg.lat_max {
            lat = 2.0 * reg.lat_max - lat;
            vn = -vn;
        } else if lat < reg.lat_min {
            lat = 2.0 * reg.lat_min - lat;
            vn = -vn;
        }
        if lon > reg.lon_max {
            lon = 2.0 * reg.lon_max - lon;
            ve = -ve;
        } else if lon < reg.lon_min {
            lon = 2.0 * reg.lon_min - lon;
            ve = -ve;
        }
        out.push(GeoPoint::new(lat, lon).expect("inside region"));
    }
    out
}

fn simulate_buoy(cfg: &SynthConfig, ocean: &Ocean, b: usize) -> BuoySim {
    let a = &cfg.aggregation;
    let mut r = rng::stream(cfg.seed, &[rng::SYNTH, 1, b as u64]);
    let n = |r: &mut rng::Rng| -> f64 { StandardNormal.sample(r) };
    let model = BuoyModel::ALL[r.random_range(0..BuoyModel::ALL.len())];
    let capacity = (a.capacity_sigma * n(&mut r)).exp();
    let background = a.background_t * (0.3 * n(&mut r)).exp();
    let start = cfg.start_utc();
    let d0 = r.random_range(0..=cfg.days - DEPLOY_MARGIN_DAYS) as i64;
    let deploy_t = start + Duration::days(d0) + Duration::hours(r.random_range(6..16));
    let end = start + Duration::days(cfg.days as i64);
    let n_hours = (end - deploy_t).num_hours() as usize;
    let track = drift_track(cfg, &mut r, n_hours);
    let at = |t: DateTime<Utc>| track[((t - deploy_t).num_hours().max(0) as usize).min(n_hours)];

    // daily noise indexed by solar day offset, with two days of slack
    let n_days = cfg.days + 4;
    let mut eps = Vec::with_capacity(n_days);
    let innovation = (1.0 - a.day_phi * a.day_phi).sqrt() * a.day_sigma;
    eps.push(a.day_sigma * n(&mut r));
    for i in 1..n_days {
        let e = a.day_phi * eps[i - 1] + innovation * n(&mut r);
        eps.push(e);
    }
    let eta: Vec<f64> = (0..n_days).map(|_| a.echo_sigma * n(&mut r)).collect();
    let scatter: Vec<f64> = (0..n_days).map(|_| (0.3 * n(&mut r)).exp()).collect();
    let day_slot = |d: i64| (d + 2).clamp(0, n_days as i64 - 1) as usize;
    let colonization = |soak_days: f64| sigmoid((soak_days - a.soak_half_days) / a.soak_scale_days);

    let mut sets = Vec::new();
    let mut last_reset = deploy_t;
    let mut last_set: Option<i64> = None;
    for d in d0 + FIRST_SET_DAYS..cfg.days as i64 {
        if last_set.is_some_and(|l| d < l + SET_GAP_DAYS) {
            continue;
        }
        let date = cfg.start + Duration::days(d);
        let prev_noon = start + Duration::days(d - 1) + Duration::hours(9);
        let level = colonization(days_between(last_reset, prev_noon)) * eps[day_slot(d - 1)].exp();
        let p = (cfg.set_rate * (level / POLICY_REF_LEVEL).powf(cfg.selection_bias)).min(1.0);
        if r.random::<f64>() >= p {
            continue;
        }
        let lon = at(start + Duration::days(d) + Duration::hours(3)).lon();
        let dawn = SolarTime(date.and_hms_opt(SET_SOLAR_HOUR, 0, 0).expect("valid hour"));
        let t = truncate_hour(from_solar_time(lon, dawn));
        let position = at(t);
        let (mult, _) = ocean.effect(position, days_between(start, t));
        let present = capacity * colonization(days_between(last_reset, t)) * eps[day_slot(d)].exp() * mult;
        sets.push(RawSet {
            t,
            date,
            position,
            catch: present * (cfg.catch_sigma * n(&mut r)).exp(),
        });
        last_reset = t;
        last_set = Some(d);
    }

    let mut hours = Vec::with_capacity(n_hours);
    let mut next_set = 0;
    let mut reset = deploy_t;
    for k in 1..n_hours {
        let t = deploy_t + Duration::hours(k as i64);
        while next_set < sets.len() && sets[next_set].t <= t {
            reset = sets[next_set].t;
            next_set += 1;
        }
        let position = track[k];
        let solar = to_solar_time(position.lon(), t);
        let slot = day_slot((solar.date() - cfg.start).num_days());
        let h = solar.hour_of_day();
        let gate = a.night_level + (1.0 - a.night_level) * daylight(h);
        let (mult, vis_base) = ocean.effect(position, days_between(start, t));
        hours.push(RawHour {
            t,
            position,
            solar_hour: h,
            expected: capacity * colonization(days_between(reset, t)) * gate * mult,
            eps: eps[slot],
            eta: eta[slot],
            vis_base,
            background: background * scatter[slot],
        });
    }

    BuoySim {
        id: Arc::from(format!("B{:04}", b + 1)),
        model,
        deploy_t,
        deploy_at: track[0],
        sets,
        hours,
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Builds a world from `cfg`, serially, so one configuration always yields
/// the same world.
pub fn generate(cfg: &SynthConfig) -> Result<World> {
    cfg.validate()?;
    let a = &cfg.aggregation;
    let fields = OceanFields::new(cfg.seed);
    let ocean = Ocean {
        fields: &fields,
        coupling: cfg.ocean_coupling,
        vis_logit: (a.visibility / (1.0 - a.visibility)).ln(),
    };
    let sims: Vec<BuoySim> = (0..cfg.n_buoys).map(|b| simulate_buoy(cfg, &ocean, b)).collect();

    let mut raw_catches: Vec<f64> = sims.iter().flat_map(|s| s.sets.iter().map(|x| x.catch)).collect();
    let scale = median(&mut raw_catches).map_or(cfg.catch_median_t, |m| cfg.catch_median_t / m);
    let noise_sd = a.day_sigma.hypot(a.echo_sigma);

    let mut events = Vec::new();
    let mut records = Vec::new();
    let mut hours = Vec::new();
    for s in &sims {
        events.push(Event {
            event_id: String::new(),
            buoy_id: s.id.clone(),
            buoy_model: s.model,
            kind: EventKind::Deployment,
            date: s.deploy_t.date_naive(),
            position: s.deploy_at,
            catch_t: None,
        });
        for x in &s.sets {
            events.push(Event {
                event_id: String::new(),
                buoy_id: s.id.clone(),
                buoy_model: s.model,
                kind: EventKind::Set,
                date: x.date,
                position: x.position,
                catch_t: Some(round_to(scale * x.catch, 2)),
            });
        }
        for h in &s.hours {
            let tuna = scale * h.expected * h.eps.exp();
            let seen = tuna * h.vis_base * h.eta.exp();
            let (tw, bw) = (layer_profile(4.5 - 2.0 * (std::f64::consts::PI * (h.solar_hour - 12.0) / 12.0).cos()), layer_profile(7.0));
            let layers: [f64; N_LAYERS] = std::array::from_fn(|l| round_to(seen * tw[l] + h.background * bw[l], 3));
            let latent_b: f64 = layers.iter().sum();
            let censored = latent_b < CENSOR_T;
            let base = scale * h.expected * h.vis_base;
            let p_censored = if h.background >= CENSOR_T {
                0.0
            } else if base <= 0.0 {
                1.0
            } else {
                standard_normal_cdf(((CENSOR_T - h.background).ln() - base.ln()) / noise_sd)
            };
            if !censored {
                records.push(EchoRecord {
                    buoy_id: s.id.clone(),
                    t_utc: h.t,
                    position: h.position,
                    layers,
                });
            }
            hours.push(TruthHour {
                buoy_id: s.id.clone(),
                t_utc: h.t,
                solar_hour: h.solar_hour,
                tuna_t: tuna,
                layers,
                latent_b,
                censored,
                p_censored,
            });
        }
    }
    events.sort_by(|x, y| (x.date, &x.buoy_id, x.kind.code()).cmp(&(y.date, &y.buoy_id, y.kind.code())));
    for (i, e) in events.iter_mut().enumerate() {
        e.event_id = format!("E{:06}", i + 1);
    }

    let first_ocean_day = cfg.start - Duration::days(1);
    let mut world = World {
        config: cfg.clone(),
        ocean: fields::ocean_grid(cfg, &fields, first_ocean_day, cfg.days + 3),
        bathy: fields::bathy_grid(&cfg.region),
        events,
        records,
        truth: GroundTruth {
            hours,
            events: Vec::new(),
        },
        tonnes_per_unit: scale,
    };
    let planted = plant_violations(&mut world)?;
    world.truth.events = world
        .events
        .iter()
        .zip(planted)
        .map(|(e, rule)| TruthEvent {
            event_id: e.event_id.clone(),
            kind: e.kind,
            rule_violation: rule,
            y_true: e.target(),
        })
        .collect();
    Ok(world)
}

fn track_ranges(records: &[EchoRecord]) -> HashMap<Arc<str>, Range<usize>> {
    let mut out: HashMap<Arc<str>, Range<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        out.entry(r.buoy_id.clone()).and_modify(|g| g.end = i + 1).or_insert(i..i + 1);
    }
    out
}

/// Record indices of the 24 h window slice of `event`, in time order.
fn window_slice(event: &Event, records: &[EchoRecord], range: &Range<usize>) -> Result<Vec<usize>> {
    let track = &records[range.clone()];
    let Extract::Window(w) = extract_window(event, track, PLANT_WINDOW_H)? else {
        return Ok(Vec::new());
    };
    Ok(w.track
        .iter()
        .map(|(t, _)| range.start + track.partition_point(|r| r.t_utc < *t))
        .collect())
}

/// Plants the configured violations into randomly chosen, distinct events
/// and returns the rule each event was given.
fn plant_violations(world: &mut World) -> Result<Vec<Option<DropRule>>> {
    let cfg = world.config.clone();
    let mut r = rng::stream(cfg.seed, &[rng::SYNTH, 2]);
    let mut pool: Vec<usize> = (0..world.events.len()).collect();
    pool.shuffle(&mut r);
    let ranges = track_ranges(&world.records);
    let mut out = vec![None; world.events.len()];
    let centre_lat = 0.5 * (cfg.region.lat_min + cfg.region.lat_max);

    for rule in ViolationRates::RULES {
        let want = world.planned(rule);
        let mut done = 0;
        let mut keep = Vec::with_capacity(pool.len());
        for &i in &pool {
            if done == want {
                keep.push(i);
                continue;
            }
            let ev = &mut world.events[i];
            let planted = match rule {
                DropRule::IdMismatch => {
                    ev.buoy_id = Arc::from(format!("X{}", ev.buoy_id));
                    true
                }
                DropRule::NoSunset => {
                    let anchor = anchor_date(ev)?;
                    let mut hit = false;
                    for lat in [89.5, -89.5] {
                        let p = GeoPoint::new(lat, ev.position.lon())?;
                        if solar_day(p, anchor)?.sunset_utc.time().is_none() {
                            ev.position = p;
                            hit = true;
                            break;
                        }
                    }
                    hit
                }
                DropRule::InsufficientCoverage => {
                    ev.date = cfg.end_date() + Duration::days(COVERAGE_GAP_DAYS);
                    true
                }
                DropRule::OnLand => {
                    ev.position = GeoPoint::new(ev.position.lat(), cfg.region.lon_min - 3.0)?;
                    true
                }
                DropRule::Shallow => {
                    let slice = match ranges.get(&ev.buoy_id) {
                        Some(g) => window_slice(ev, &world.records, g)?,
                        None => Vec::new(),
                    };
                    match slice.get(r.random_range(0..slice.len().max(1))) {
                        Some(&k) => {
                            let rec = &mut world.records[k];
                            rec.position = GeoPoint::new(rec.position.lat(), cfg.region.lon_min - 1.0)?;
                            true
                        }
                        None => false,
                    }
                }
                DropRule::Speeding => {
                    let slice = match ranges.get(&ev.buoy_id) {
                        Some(g) => window_slice(ev, &world.records, g)?,
                        None => Vec::new(),
                    };
                    let legs: Vec<usize> = slice
                        .windows(2)
                        .filter(|p| world.records[p[1]].t_utc - world.records[p[0]].t_utc <= Duration::hours(2))
                        .map(|p| p[1])
                        .collect();
                    if legs.is_empty() {
                        false
                    } else {
                        let rec = &mut world.records[legs[r.random_range(0..legs.len())]];
                        let lat = rec.position.lat();
                        let jump = if lat > centre_lat { -SPEED_JUMP_DEG } else { SPEED_JUMP_DEG };
                        rec.position = GeoPoint::new(lat + jump, rec.position.lon())?;
                        true
                    }
                }
                DropRule::Overlap => false,
            };
            if planted {
                out[i] = Some(rule);
                done += 1;
            } else {
                keep.push(i);
            }
        }
        pool = keep;
    }
    Ok(out)
}
