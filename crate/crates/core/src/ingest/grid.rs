//! Regular lat/lon lattices for oceanography and bathymetry.
//!
//! Grid files are long-format CSV, one row per node (and per day for
//! oceanography). Absent rows become missing cells; a coordinate that does not
//! sit on the file's regular lattice is a fatal error.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::table::{format_f64, format_opt_f64, parse_date, parse_f64, parse_opt_f64, RowReader};
use super::thermocline::thermocline_depth;
use super::{csv_err, csv_writer, file_label, open};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const OCEAN_HEADER: [&str; 10] = [
    "date", "lat", "lon", "temp", "chl", "o2", "sal", "thermo", "cur", "ssha",
];
pub const BATHY_HEADER: [&str; 3] = ["lat", "lon", "depth_m"];
pub const PROFILE_HEADER: [&str; 5] = ["date", "lat", "lon", "depth_m", "temp"];

/// Tolerance, in degrees, for a coordinate to count as on-lattice.
const LATTICE_TOL: f64 = 1e-6;

/// The seven oceanographic variables, in file column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OceanVar {
    Temp,
    Chl,
    O2,
    Sal,
    Thermo,
    Cur,
    Zos,
}

impl OceanVar {
    pub const ALL: [OceanVar; 7] = [
        OceanVar::Temp,
        OceanVar::Chl,
        OceanVar::O2,
        OceanVar::Sal,
        OceanVar::Thermo,
        OceanVar::Cur,
        OceanVar::Zos,
    ];
    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    /// Prefix used in feature names (`Zos.0`, `O2.23`, ...).
    pub fn feature_prefix(self) -> &'static str {
        match self {
            OceanVar::Temp => "Temp",
            OceanVar::Chl => "Chl",
            OceanVar::O2 => "O2",
            OceanVar::Sal => "Sal",
            OceanVar::Thermo => "Thermo",
            OceanVar::Cur => "Cur",
            OceanVar::Zos => "Zos",
        }
    }
}

/// Values of all variables at one node and day; `None` is missing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OceanSample(pub [Option<f64>; OceanVar::COUNT]);

impl OceanSample {
    pub const MISSING: OceanSample = OceanSample([None; OceanVar::COUNT]);

    pub fn get(&self, var: OceanVar) -> Option<f64> {
        self.0[var.index()]
    }

    pub fn is_all_missing(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }
}

/// Regular lat/lon node coordinates, both axes ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub lats: Vec<f64>,
    pub lons: Vec<f64>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.lats.len() * self.lons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.lons.len() + j
    }

    /// Nearest node by Euclidean distance in degrees; ties go to the smaller
    /// latitude, then the smaller longitude.
    pub fn nearest(&self, p: GeoPoint) -> (usize, usize) {
        (nearest_on_axis(&self.lats, p.lat()), nearest_on_axis(&self.lons, p.lon()))
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.lats[i], self.lons[j])
    }

    /// Whether `p` lies within half a grid step of the lattice's extent.
    pub fn covers(&self, p: GeoPoint) -> bool {
        axis_covers(&self.lats, p.lat()) && axis_covers(&self.lons, p.lon())
    }
}

fn axis_covers(axis: &[f64], x: f64) -> bool {
    let (Some(&first), Some(&last)) = (axis.first(), axis.last()) else {
        return false;
    };
    let half = if axis.len() > 1 {
        (axis[1] - axis[0]) / 2.0
    } else {
        LATTICE_TOL
    };
    x >= first - half && x <= last + half
}

fn nearest_on_axis(axis: &[f64], x: f64) -> usize {
    let hi = axis.partition_point(|&v| v < x);
    if hi == 0 {
        return 0;
    }
    if hi == axis.len() {
        return axis.len() - 1;
    }
    let lo = hi - 1;
    // squared distances, matching how an exhaustive scan would compare them
    if (x - axis[lo]).powi(2) <= (axis[hi] - x).powi(2) {
        lo
    } else {
        hi
    }
}

/// Builds a regular axis from the distinct coordinates present in a file.
/// Present values keep their parsed bits; gaps are filled on the lattice.
fn build_axis(
    values: &BTreeMap<OrdF64, u64>,
    name: &str,
    label: &str,
) -> Result<(Vec<f64>, Option<f64>)> {
    let vals: Vec<(f64, u64)> = values.iter().map(|(k, l)| (k.0, *l)).collect();
    let Some(&(first, _)) = vals.first() else {
        return Ok((Vec::new(), None));
    };
    if vals.len() == 1 {
        return Ok((vec![first], None));
    }
    let step = vals
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min);
    if step <= LATTICE_TOL {
        return Err(Error::schema(label, vals[1].1, format!("{name} spacing {step} too small")));
    }
    let last = vals[vals.len() - 1].0;
    let n = ((last - first) / step).round() as usize + 1;
    let mut axis: Vec<f64> = (0..n).map(|k| first + k as f64 * step).collect();
    for &(v, line) in &vals {
        let k = ((v - first) / step).round();
        if (first + k * step - v).abs() > LATTICE_TOL {
            return Err(Error::schema(
                label,
                line,
                format!("non-rectangular lattice: {name} {v} is off the {step}° lattice starting at {first}"),
            ));
        }
        axis[k as usize] = v;
    }
    Ok((axis, Some(step)))
}

fn check_single_resolution(lat_step: Option<f64>, lon_step: Option<f64>, label: &str) -> Result<()> {
    if let (Some(a), Some(b)) = (lat_step, lon_step) {
        if (a - b).abs() > LATTICE_TOL {
            return Err(Error::schema(
                label,
                1,
                format!("mixed resolution: lat step {a}, lon step {b}"),
            ));
        }
    }
    Ok(())
}

/// Total-order wrapper for map keys; input coordinates are always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn index_of(axis: &[f64], v: f64) -> usize {
    nearest_on_axis(axis, v)
}

/// Daily oceanography on a regular lattice.
#[derive(Debug, Clone)]
pub struct OceanGrid {
    pub lattice: Lattice,
    /// Contiguous daily axis.
    pub dates: Vec<NaiveDate>,
    /// `[date][lat][lon][var]`, NaN marks missing.
    values: Vec<f64>,
}

impl PartialEq for OceanGrid {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.dates == other.dates
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl OceanGrid {
    /// An all-missing grid over the given axes.
    pub fn empty(lattice: Lattice, first_date: NaiveDate, n_days: usize) -> Self {
        let n = lattice.len() * n_days * OceanVar::COUNT;
        OceanGrid {
            dates: (0..n_days).map(|d| first_date + Duration::days(d as i64)).collect(),
            lattice,
            values: vec![f64::NAN; n],
        }
    }

    fn offset(&self, d: usize, i: usize, j: usize) -> usize {
        (d * self.lattice.len() + self.lattice.flat(i, j)) * OceanVar::COUNT
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        let first = *self.dates.first()?;
        let d = (date - first).num_days();
        (d >= 0 && (d as usize) < self.dates.len()).then_some(d as usize)
    }

    pub fn sample(&self, d: usize, i: usize, j: usize) -> OceanSample {
        let o = self.offset(d, i, j);
        let mut out = OceanSample::MISSING;
        for (k, slot) in out.0.iter_mut().enumerate() {
            let v = self.values[o + k];
            *slot = (!v.is_nan()).then_some(v);
        }
        out
    }

    pub fn set(&mut self, d: usize, i: usize, j: usize, var: OceanVar, value: Option<f64>) {
        let o = self.offset(d, i, j);
        self.values[o + var.index()] = value.unwrap_or(f64::NAN);
    }

    pub fn set_sample(&mut self, d: usize, i: usize, j: usize, s: OceanSample) {
        for var in OceanVar::ALL {
            self.set(d, i, j, var, s.get(var));
        }
    }

    /// Derives thermocline depth from temperature profiles wherever the grid
    /// has no precomputed value. Returns how many cells were filled.
    pub fn fill_thermocline(&mut self, profiles: &[Profile]) -> usize {
        let mut filled = 0;
        for prof in profiles {
            let Some(d) = self.date_index(prof.date) else { continue };
            let Ok(p) = GeoPoint::new(prof.lat, prof.lon) else { continue };
            let (i, j) = self.lattice.nearest(p);
            if self.sample(d, i, j).get(OceanVar::Thermo).is_some() {
                continue;
            }
            if let Some(depth) = thermocline_depth(&prof.samples) {
                self.set(d, i, j, OceanVar::Thermo, Some(depth));
                filled += 1;
            }
        }
        filled
    }
}

/// Nearest-node lookup on the grid for the given day.
pub fn nearest_cell(grid: &OceanGrid, p: GeoPoint, date: NaiveDate) -> Result<OceanSample> {
    let d = grid.date_index(date).ok_or_else(|| {
        Error::Lookup(format!(
            "date {date} outside grid axis {:?}..{:?}",
            grid.dates.first(),
            grid.dates.last()
        ))
    })?;
    if grid.lattice.is_empty() {
        return Err(Error::Lookup("empty lattice".into()));
    }
    let (i, j) = grid.lattice.nearest(p);
    Ok(grid.sample(d, i, j))
}

/// Water depth in metres, positive down; negative values are land.
#[derive(Debug, Clone)]
pub struct BathyGrid {
    pub lattice: Lattice,
    depth: Vec<f64>,
}

impl PartialEq for BathyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.depth.len() == other.depth.len()
            && self
                .depth
                .iter()
                .zip(&other.depth)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl BathyGrid {
    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(f64, f64) -> Option<f64>) -> Self {
        let mut depth = Vec::with_capacity(lattice.len());
        for &lat in &lattice.lats {
            for &lon in &lattice.lons {
                depth.push(f(lat, lon).unwrap_or(f64::NAN));
            }
        }
        BathyGrid { lattice, depth }
    }

    pub fn at_node(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.depth[self.lattice.flat(i, j)];
        (!v.is_nan()).then_some(v)
    }

    /// Depth at the nearest node; `None` outside the grid's coverage.
    pub fn depth_at(&self, p: GeoPoint) -> Option<f64> {
        if !self.lattice.covers(p) {
            return None;
        }
        let (i, j) = self.lattice.nearest(p);
        self.at_node(i, j)
    }
}

/// A temperature profile at one position and day.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub date: NaiveDate,
    pub lat: f64,
    pub lon: f64,
    /// (depth m, temperature °C), sorted by depth.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Ocean,
    Bathy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Ocean(OceanGrid),
    Bathy(BathyGrid),
}

pub fn read_grid(path: impl AsRef<Path>, kind: GridKind) -> Result<Grid> {
    match kind {
        GridKind::Ocean => read_ocean_grid(path).map(Grid::Ocean),
        GridKind::Bathy => read_bathy_grid(path).map(Grid::Bathy),
    }
}

pub fn read_ocean_grid(path: impl AsRef<Path>) -> Result<OceanGrid> {
    let path = path.as_ref();
    parse_ocean_grid(open(path)?, &file_label(path))
}

pub fn read_bathy_grid(path: impl AsRef<Path>) -> Result<BathyGrid> {
    let path = path.as_ref();
    parse_bathy_grid(open(path)?, &file_label(path))
}

fn fatal_rows<R: Read>(
    reader: R,
    label: &str,
    header: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rows = RowReader::new(reader, label, header)?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, fields) = row.map_err(|r| Error::schema(label, r.line, r.reason))?;
        if fields.len() != header.len() {
            return Err(Error::schema(
                label,
                line,
                format!("{} fields (expected {})", fields.len(), header.len()),
            ));
        }
        out.push((line, fields));
    }
    Ok(out)
}

pub fn parse_ocean_grid<R: Read>(reader: R, label: &str) -> Result<OceanGrid> {
    let rows = fatal_rows(reader, label, &OCEAN_HEADER)?;
    let bad = |line: u64| move |m: String| Error::schema(label, line, m);
    let mut parsed = Vec::with_capacity(rows.len());
    let mut lats = BTreeMap::new();
    let mut lons = BTreeMap::new();
    let (mut first, mut last): (Option<NaiveDate>, Option<NaiveDate>) = (None, None);
    for (line, f) in &rows {
        let date = parse_date(&f[0]).map_err(bad(*line))?;
        let lat = parse_f64(&f[1]).map_err(bad(*line))?;
        let lon = parse_f64(&f[2]).map_err(bad(*line))?;
        let mut s = OceanSample::MISSING;
        for (k, slot) in s.0.iter_mut().enumerate() {
            *slot = parse_opt_f64(&f[3 + k]).map_err(bad(*line))?;
        }
        lats.entry(OrdF64(lat)).or_insert(*line);
        lons.entry(OrdF64(lon)).or_insert(*line);
        first = Some(first.map_or(date, |d: NaiveDate| d.min(date)));
        last = Some(last.map_or(date, |d: NaiveDate| d.max(date)));
        parsed.push((*line, date, lat, lon, s));
    }
    let (lat_axis, lat_step) = build_axis(&lats, "lat", label)?;
    let (lon_axis, lon_step) = build_axis(&lons, "lon", label)?;
    check_single_resolution(lat_step, lon_step, label)?;
    let n_days = match (first, last) {
        (Some(a), Some(b)) => (b - a).num_days() as usize + 1,
        _ => 0,
    };
    let mut grid = OceanGrid::empty(
        Lattice {
            lats: lat_axis,
            lons: lon_axis,
        },
        first.unwrap_or_default(),
        n_days,
    );
    let mut seen = vec![false; grid.lattice.len() * n_days];
    for (line, date, lat, lon, s) in parsed {
        let d = grid.date_index(date).expect("date within parsed range");
        let i = index_of(&grid.lattice.lats, lat);
        let j = index_of(&grid.lattice.lons, lon);
        let key = d * grid.lattice.len() + grid.lattice.flat(i, j);
        if std::mem::replace(&mut seen[key], true) {
            return Err(Error::schema(
                label,
                line,
                format!("duplicate key (date {date}, lat {lat}, lon {lon})"),
            ));
        }
        grid.set_sample(d, i, j, s);
    }
    Ok(grid)
}

pub fn parse_bathy_grid<R: Read>(reader: R, label: &str) -> Result<BathyGrid> {
    let rows = fatal_rows(reader, label, &BATHY_HEADER)?;
    let bad = |line: u64| move |m: String| Error::schema(label, line, m);
    let mut parsed = Vec::with_capacity(rows.len());
    let mut lats = BTreeMap::new();
    let mut lons = BTreeMap::new();
    for (line, f) in &rows {
        let lat = parse_f64(&f[0]).map_err(bad(*line))?;
        let lon = parse_f64(&f[1]).map_err(bad(*line))?;
        let depth = parse_opt_f64(&f[2]).map_err(bad(*line))?;
        lats.entry(OrdF64(lat)).or_insert(*line);
        lons.entry(OrdF64(lon)).or_insert(*line);
        parsed.push((*line, lat, lon, depth));
    }
    let (lat_axis, lat_step) = build_axis(&lats, "lat", label)?;
    let (lon_axis, lon_step) = build_axis(&lons, "lon", label)?;
    check_single_resolution(lat_step, lon_step, label)?;
    let lattice = Lattice {
        lats: lat_axis,
        lons: lon_axis,
    };
    let mut depth = vec![f64::NAN; lattice.len()];
    let mut seen = vec![false; lattice.len()];
    for (line, lat, lon, d) in parsed {
        let k = lattice.flat(index_of(&lattice.lats, lat), index_of(&lattice.lons, lon));
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::schema(label, line, format!("duplicate key (lat {lat}, lon {lon})")));
        }
        depth[k] = d.unwrap_or(f64::NAN);
    }
    Ok(BathyGrid { lattice, depth })
}

/// Writes every lattice cell, missing values as empty fields.
pub fn write_ocean_grid<W: Write>(w: W, grid: &OceanGrid) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(OCEAN_HEADER).map_err(csv_err)?;
    let mut fields = Vec::with_capacity(OCEAN_HEADER.len());
    for (d, date) in grid.dates.iter().enumerate() {
        let date_s = date.format("%Y-%m-%d").to_string();
        for (i, &lat) in grid.lattice.lats.iter().enumerate() {
            for (j, &lon) in grid.lattice.lons.iter().enumerate() {
                let s = grid.sample(d, i, j);
                fields.clear();
                fields.push(date_s.clone());
                fields.push(format_f64(lat));
                fields.push(format_f64(lon));
                fields.extend(s.0.iter().map(|v| format_opt_f64(*v)));
                out.write_record(&fields).map_err(csv_err)?;
            }
        }
    }
    out.flush().map_err(|e| Error::io("<ocean>", e))
}

pub fn write_bathy_grid<W: Write>(w: W, grid: &BathyGrid) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(BATHY_HEADER).map_err(csv_err)?;
    for (i, &lat) in grid.lattice.lats.iter().enumerate() {
        for (j, &lon) in grid.lattice.lons.iter().enumerate() {
            out.write_record([
                format_f64(lat),
                format_f64(lon),
                format_opt_f64(grid.at_node(i, j)),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::io("<bathy>", e))
}

/// Reads `date,lat,lon,depth_m,temp` rows into per-position profiles.
pub fn read_profiles(path: impl AsRef<Path>) -> Result<Vec<Profile>> {
    let path = path.as_ref();
    let label = file_label(path);
    let rows = fatal_rows(open(path)?, &label, &PROFILE_HEADER)?;
    let mut groups: HashMap<(NaiveDate, u64, u64), Vec<(f64, f64)>> = HashMap::new();
    let mut order = Vec::new();
    for (line, f) in &rows {
        let bad = |m: String| Error::schema(label.as_str(), *line, m);
        let date = parse_date(&f[0]).map_err(bad)?;
        let lat = parse_f64(&f[1]).map_err(bad)?;
        let lon = parse_f64(&f[2]).map_err(bad)?;
        let depth = parse_f64(&f[3]).map_err(bad)?;
        let temp = parse_f64(&f[4]).map_err(bad)?;
        let key = (date, lat.to_bits(), lon.to_bits());
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push((depth, temp));
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let mut samples = groups.remove(&key).unwrap_or_default();
            samples.sort_by(|a, b| a.0.total_cmp(&b.0));
            Profile {
                date: key.0,
                lat: f64::from_bits(key.1),
                lon: f64::from_bits(key.2),
                samples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEAD: &str = "date,lat,lon,temp,chl,o2,sal,thermo,cur,ssha\n";

    fn ocean(body: &str) -> Result<OceanGrid> {
        parse_ocean_grid(format!("{HEAD}{body}").as_bytes(), "ocean.csv")
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    const TWO_BY_TWO: &str = "2019-01-01,0,0,27,0.1,200,35,50,0.2,0.01\n\
                              2019-01-01,0,0.25,27.5,0.2,201,35.1,51,0.3,0.02\n\
                              2019-01-01,0.25,0,28,0.3,202,35.2,52,0.4,0.03\n\
                              2019-01-01,0.25,0.25,28.5,0.4,203,35.3,53,0.5,0.04\n";

    #[test]
    fn two_by_two_lattice() {
        let g = ocean(TWO_BY_TWO).unwrap();
        assert_eq!(g.lattice.len(), 4);
        assert_eq!(g.dates.len(), 1);
        let s = nearest_cell(&g, pt(0.25, 0.0), d("2019-01-01")).unwrap();
        assert_eq!(s.get(OceanVar::Temp), Some(28.0));
    }

    #[test]
    fn missing_row_becomes_missing_cell() {
        let body: String = TWO_BY_TWO.lines().take(3).map(|l| format!("{l}\n")).collect();
        let g = ocean(&body).unwrap();
        assert_eq!(g.lattice.len(), 4);
        let s = nearest_cell(&g, pt(0.25, 0.25), d("2019-01-01")).unwrap();
        assert!(s.is_all_missing());
    }

    #[test]
    fn empty_fields_are_missing_values() {
        let g = ocean("2019-01-01,0,0,27,,200,35,50,0.2,\n").unwrap();
        let s = g.sample(0, 0, 0);
        assert_eq!(s.get(OceanVar::Chl), None);
        assert_eq!(s.get(OceanVar::Zos), None);
        assert_eq!(s.get(OceanVar::O2), Some(200.0));
    }

    #[test]
    fn off_lattice_and_duplicates_are_fatal() {
        let err = ocean(&format!("{TWO_BY_TWO}2019-01-01,0.1,0,1,1,1,1,1,1,1\n")).unwrap_err();
        assert!(err.to_string().contains("non-rectangular"), "{err}");
        let err = ocean(&format!("{TWO_BY_TWO}2019-01-01,0,0,1,1,1,1,1,1,1\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate key"), "{err}");
        assert!(matches!(err, Error::Schema { line: 6, .. }));
        let err = ocean("2019-01-01,0,0,1,1,1,1,1,1,1\n2019-01-01,0.5,0.25,1,1,1,1,1,1,1\n").unwrap_err();
        assert!(err.to_string().contains("mixed resolution"), "{err}");
    }

    #[test]
    fn lookup_outside_date_axis_fails() {
        let g = ocean(TWO_BY_TWO).unwrap();
        assert!(matches!(
            nearest_cell(&g, pt(0.0, 0.0), d("2019-01-02")),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn midpoint_goes_to_lower_latitude_then_longitude() {
        let g = ocean(TWO_BY_TWO).unwrap();
        let s = nearest_cell(&g, pt(0.125, 0.25), d("2019-01-01")).unwrap();
        assert_eq!(s.get(OceanVar::Temp), Some(27.5));
        let s = nearest_cell(&g, pt(0.125, 0.125), d("2019-01-01")).unwrap();
        assert_eq!(s.get(OceanVar::Temp), Some(27.0));
        // far outside clamps to the edge
        let s = nearest_cell(&g, pt(10.0, 10.0), d("2019-01-01")).unwrap();
        assert_eq!(s.get(OceanVar::Temp), Some(28.5));
    }

    #[test]
    fn gap_days_are_missing() {
        let g = ocean("2019-01-01,0,0,1,1,1,1,1,1,1\n2019-01-03,0,0,3,1,1,1,1,1,1\n").unwrap();
        assert_eq!(g.dates.len(), 3);
        assert!(nearest_cell(&g, pt(0.0, 0.0), d("2019-01-02")).unwrap().is_all_missing());
    }

    #[test]
    fn bathy_reads_and_round_trips() {
        let src = "lat,lon,depth_m\n0,0,-5\n0,0.5,150\n0.5,0,4000\n";
        let g = parse_bathy_grid(src.as_bytes(), "b").unwrap();
        assert_eq!(g.depth_at(pt(0.1, 0.1)), Some(-5.0));
        assert_eq!(g.depth_at(pt(0.4, 0.4)), None);
        let mut buf = Vec::new();
        write_bathy_grid(&mut buf, &g).unwrap();
        assert_eq!(parse_bathy_grid(buf.as_slice(), "b").unwrap(), g);
    }

    #[test]
    fn thermocline_from_profiles_fills_only_missing() {
        let mut g = ocean("2019-01-01,0,0,27,1,1,1,,1,1\n2019-01-01,0,0.25,27,1,1,1,40,1,1\n").unwrap();
        let prof = |lon: f64| Profile {
            date: d("2019-01-01"),
            lat: 0.0,
            lon,
            samples: vec![(0.0, 28.0), (100.0, 18.0)],
        };
        assert_eq!(g.fill_thermocline(&[prof(0.0), prof(0.25)]), 1);
        assert_eq!(g.sample(0, 0, 0).get(OceanVar::Thermo), Some(20.0));
        assert_eq!(g.sample(0, 0, 1).get(OceanVar::Thermo), Some(40.0));
    }

    fn brute_force(g: &OceanGrid, p: GeoPoint) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_d = f64::INFINITY;
        for (i, &lat) in g.lattice.lats.iter().enumerate() {
            for (j, &lon) in g.lattice.lons.iter().enumerate() {
                let dd = (lat - p.lat()).powi(2) + (lon - p.lon()).powi(2);
                if dd < best_d {
                    best_d = dd;
                    best = (i, j);
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn nearest_matches_exhaustive_scan(lat in -1.0f64..2.0, lon in -1.0f64..2.0) {
            let mut body = String::new();
            for i in 0..5 {
                for j in 0..5 {
                    body.push_str(&format!("2019-01-01,{},{},{},1,1,1,1,1,1\n", i as f64 * 0.25, j as f64 * 0.25, i * 5 + j));
                }
            }
            let g = ocean(&body).unwrap();
            prop_assert_eq!(g.lattice.nearest(pt(lat, lon)), brute_force(&g, pt(lat, lon)));
        }

        #[test]
        fn ocean_grid_write_read_fixpoint(vals in proptest::collection::vec(proptest::option::of(-50.0f64..50.0), 12)) {
            let mut body = String::new();
            for (k, v) in vals.iter().enumerate() {
                let (day, node) = (k / 4, k % 4);
                if k == 5 { continue; }
                let cell = v.map(|x| x.to_string()).unwrap_or_default();
                body.push_str(&format!(
                    "2019-01-0{},{},{},{cell},{cell},1,2,3,4,{cell}\n",
                    day + 1, (node / 2) as f64 * 0.08, (node % 2) as f64 * 0.08
                ));
            }
            let g = ocean(&body).unwrap();
            let mut buf = Vec::new();
            write_ocean_grid(&mut buf, &g).unwrap();
            let again = parse_ocean_grid(buf.as_slice(), "o").unwrap();
            prop_assert_eq!(&again, &g);
            let mut buf2 = Vec::new();
            write_ocean_grid(&mut buf2, &again).unwrap();
            prop_assert_eq!(buf, buf2);
        }
    }
}
