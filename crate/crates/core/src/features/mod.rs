//! Named feature vectors at three enrichment levels, and task labels.

mod dataset;

use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::ingest::{BuoyModel, OceanVar, N_LAYERS};
use crate::pipeline::{EchoWindow, LabeledExample, OCEAN_HOURS};

pub use dataset::{read_dataset, parse_dataset, write_dataset, Dataset, Row, Split, WINDOW_MEAN, WINDOW_SUM};

/// Ocean basin, from a coarse longitude/latitude partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basin {
    Atl,
    Ind,
    Pac,
}

impl Basin {
    pub const ALL: [Basin; 3] = [Basin::Atl, Basin::Ind, Basin::Pac];

    pub fn as_str(self) -> &'static str {
        match self {
            Basin::Atl => "ATL",
            Basin::Ind => "IND",
            Basin::Pac => "PAC",
        }
    }
}

/// ATL for lon in [-70, 20); IND for lon in [20, 130) south of 30°N; PAC otherwise.
pub fn ocean_basin(p: GeoPoint) -> Basin {
    let (lat, lon) = (p.lat(), p.lon());
    if (-70.0..20.0).contains(&lon) {
        Basin::Atl
    } else if (20.0..130.0).contains(&lon) && lat < 30.0 {
        Basin::Ind
    } else {
        Basin::Pac
    }
}

/// Feature enrichment level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Echo,
    EchoOcean,
    All,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Echo, Level::EchoOcean, Level::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Echo => "echo",
            Level::EchoOcean => "echo_ocean",
            Level::All => "all",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown feature level {s:?}")))
    }
}

/// Column names for `level` with a `w`-hour window, in canonical order.
pub fn feature_names(level: Level, w: usize) -> Vec<String> {
    let mut names = vec!["Agg.T".to_string()];
    names.extend((1..=N_LAYERS).map(|y| format!("Agg.L{y}")));
    names.extend((0..w).map(|x| format!("Agg.H{x}")));
    names.push("N_NaN".into());
    names.extend(BuoyModel::ALL.iter().map(|m| format!("Model.{m}")));
    if level >= Level::EchoOcean {
        for var in OceanVar::ALL {
            names.extend(OCEAN_HOURS.iter().map(|h| format!("{}.{h}", var.feature_prefix())));
        }
    }
    if level == Level::All {
        names.extend(["Day", "Month", "Year", "Latitude", "Longitude"].map(String::from));
        names.extend(Basin::ALL.iter().map(|b| format!("Ocean.{}", b.as_str())));
        names.extend(["SunriseHour", "SunsetHour"].map(String::from));
    }
    names
}

/// Max-aggregates of the 10 × W echo matrix, missing hours read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub total: f64,
    pub layers: [f64; N_LAYERS],
    /// Index 0 is the hour adjacent to the window end.
    pub hours: Vec<f64>,
    pub n_nan: usize,
}

pub fn aggregate_matrix(window: &EchoWindow) -> Aggregates {
    let mut layers = [0.0f64; N_LAYERS];
    let mut hours = vec![0.0f64; window.w];
    for (x, slot) in hours.iter_mut().enumerate() {
        if let Some(col) = window.hour(x) {
            for (l, &v) in col.layers.iter().enumerate() {
                layers[l] = layers[l].max(v);
                *slot = slot.max(v);
            }
        }
    }
    Aggregates {
        total: layers.iter().copied().fold(0.0, f64::max),
        layers,
        hours,
        n_nan: window.n_zero_readings(),
    }
}

/// Unimputed values aligned with [`feature_names`]; `None` marks missing.
pub fn raw_features(ex: &LabeledExample, level: Level) -> Vec<Option<f64>> {
    let agg = aggregate_matrix(&ex.window);
    let mut v: Vec<Option<f64>> = Vec::with_capacity(feature_names(level, ex.window.w).len());
    v.push(Some(agg.total));
    v.extend(agg.layers.iter().map(|&x| Some(x)));
    v.extend(agg.hours.iter().map(|&x| Some(x)));
    v.push(Some(agg.n_nan as f64));
    v.extend(BuoyModel::ALL.iter().map(|&m| Some(f64::from(u8::from(m == ex.context.buoy_model)))));
    if level >= Level::EchoOcean {
        for var in OceanVar::ALL {
            v.extend((0..OCEAN_HOURS.len()).map(|k| ex.ocean.get(var, k)));
        }
    }
    if level == Level::All {
        let c = &ex.context;
        v.push(Some(f64::from(c.date.day())));
        v.push(Some(f64::from(c.date.month())));
        v.push(Some(f64::from(c.year)));
        v.push(Some(c.lat));
        v.push(Some(c.lon));
        v.extend(Basin::ALL.iter().map(|&b| Some(f64::from(u8::from(b == c.basin)))));
        v.push(Some(c.sunrise_hour).filter(|h| h.is_finite()));
        v.push(Some(c.sunset_hour).filter(|h| h.is_finite()));
    }
    v
}

/// Per-column medians from the training split, used to fill missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Medians {
    /// Median of the present values in each column; a column with no
    /// present value gets 0.
    pub fn fit<'a>(names: &[String], rows: impl IntoIterator<Item = &'a [Option<f64>]>) -> Medians {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for row in rows {
            for (c, v) in cols.iter_mut().zip(row) {
                c.extend(*v);
            }
        }
        let values = cols.into_iter().map(|c| median(c).unwrap_or(0.0)).collect();
        Medians {
            names: names.to_vec(),
            values,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Median with the usual even-count midpoint; `None` for no values.
pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// A complete, imputed feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

pub fn assemble(ex: &LabeledExample, level: Level, medians: &Medians) -> Result<FeatureVector> {
    let names = feature_names(level, ex.window.w);
    let raw = raw_features(ex, level);
    let values = names
        .iter()
        .zip(raw)
        .map(|(name, v)| match v {
            Some(x) => Ok(x),
            None => medians
                .get(name)
                .ok_or_else(|| Error::Validation(format!("no training median for {name}"))),
        })
        .collect::<Result<_>>()?;
    Ok(FeatureVector { names, values })
}

/// Biomass below which a FAD counts as empty, tonnes.
pub const PRESENCE_T: f64 = 10.0;
/// Lower bound of the "high" class, tonnes.
pub const HIGH_T: f64 = 30.0;
/// Cap applied in the thresholded regression task, tonnes.
pub const CAP_T: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Binary,
    Ternary,
    Regression,
    RegressionThreshold,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Binary, Task::Ternary, Task::Regression, Task::RegressionThreshold];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Ternary => "ternary",
            Task::Regression => "reg",
            Task::RegressionThreshold => "reg100",
        }
    }

    /// Number of classes, `None` for regression tasks.
    pub fn n_classes(self) -> Option<usize> {
        match self {
            Task::Binary => Some(2),
            Task::Ternary => Some(3),
            _ => None,
        }
    }

    pub fn is_classification(self) -> bool {
        self.n_classes().is_some()
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Binary => &["absent", "present"],
            Task::Ternary => &["low", "medium", "high"],
            _ => &[],
        }
    }

    pub fn label(self, y: f64) -> TaskLabel {
        match self {
            Task::Binary => TaskLabel::Class(usize::from(y >= PRESENCE_T)),
            Task::Ternary => TaskLabel::Class(if y < PRESENCE_T {
                0
            } else if y < HIGH_T {
                1
            } else {
                2
            }),
            Task::Regression => TaskLabel::Value(y),
            Task::RegressionThreshold => TaskLabel::Value(y.min(CAP_T)),
        }
    }

    /// The label as a number: class index or tonnes.
    pub fn target(self, y: f64) -> f64 {
        match self.label(y) {
            TaskLabel::Class(c) => c as f64,
            TaskLabel::Value(v) => v,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TaskLabel {
    Class(usize),
    Value(f64),
}

/// Convenience: label for a labeled example.
pub fn label(ex: &LabeledExample, task: Task) -> TaskLabel {
    task.label(ex.y)
}
