//! Hyper-parameter values, candidate sets and the grid file format.
//!
//! A grid file holds sections named `<model>.<classification|regression>`,
//! each a list of `param = v1, v2, ...` lines:
//!
//! ```text
//! [rf.classification]
//! n_estimators = 200, 500, 1000
//! max_features = None, sqrt, log2
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    None,
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<ParamValue>),
}

impl ParamValue {
    /// Parses one scalar token: `None`, an integer, a float, or a bare word.
    pub fn parse(token: &str) -> ParamValue {
        let t = token.trim();
        if t.eq_ignore_ascii_case("none") {
            ParamValue::None
        } else if let Ok(i) = t.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(f) = t.parse::<f64>() {
            ParamValue::Float(f)
        } else {
            ParamValue::Text(t.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::None => f.write_str("None"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) if x.fract() == 0.0 && x.abs() < 1e15 => write!(f, "{x:.1}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
            ParamValue::List(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

/// One concrete parameter assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params(pub BTreeMap<String, ParamValue>);

impl Params {
    pub fn new() -> Params {
        Params::default()
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Params {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.get(key)
    }

    /// Rejects keys outside `allowed`, catching typos in grid files.
    pub(crate) fn check_keys(&self, model: &str, allowed: &[&str]) -> Result<()> {
        for k in self.0.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Validation(format!(
                    "unknown {model} parameter {k:?} (expected one of {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn bad(key: &str, v: &ParamValue, want: &str) -> Error {
        Error::Validation(format!("parameter {key} = {v}: expected {want}"))
    }

    pub(crate) fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(*i as usize),
            Some(v) => Err(Self::bad(key, v, "a non-negative integer")),
        }
    }

    /// `None` in the grid means unbounded.
    pub(crate) fn opt_usize_or(&self, key: &str, default: Option<usize>) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::None) => Ok(None),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(Self::bad(key, v, "None or a non-negative integer")),
        }
    }

    pub(crate) fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Self::bad(key, v, "a number")),
        }
    }

    pub(crate) fn opt_f64_or(&self, key: &str, default: Option<f64>) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::None) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| Self::bad(key, v, "None or a number")),
        }
    }

    pub(crate) fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Text(s)) if s.eq_ignore_ascii_case("true") => Ok(true),
            Some(ParamValue::Text(s)) if s.eq_ignore_ascii_case("false") => Ok(false),
            Some(ParamValue::Int(i)) if *i == 0 || *i == 1 => Ok(*i == 1),
            Some(v) => Err(Self::bad(key, v, "true or false")),
        }
    }

    pub(crate) fn text(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(ParamValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    /// A list of numbers; a scalar counts as a one-element list.
    pub(crate) fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(ParamValue::List(items)) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Self::bad(key, v, "a list of numbers")))
                .collect(),
            Some(v) => v.as_f64().map(|x| vec![x]).ok_or_else(|| Self::bad(key, v, "a number")),
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Parameter name → candidate values, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub entries: Vec<(String, Vec<ParamValue>)>,
}

impl HyperGrid {
    pub fn new() -> HyperGrid {
        HyperGrid::default()
    }

    pub fn with(mut self, key: &str, values: Vec<ParamValue>) -> HyperGrid {
        self.entries.push((key.to_string(), values));
        self
    }

    /// Number of candidates in the cartesian product.
    pub fn size(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.len()).product()
    }

    /// The cartesian product; the first-declared parameter varies slowest.
    pub fn candidates(&self) -> Vec<Params> {
        let mut out = vec![Params::new()];
        for (key, values) in &self.entries {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for base in &out {
                for v in values {
                    next.push(base.clone().with(key, v.clone()));
                }
            }
            out = next;
        }
        out
    }

    /// Candidates as seen by a model kind: linear models cross-validate
    /// their `l1_ratio` list internally, so the list stays one candidate.
    pub fn candidates_for(&self, kind: ModelKind) -> Vec<Params> {
        if kind != ModelKind::Linear {
            return self.candidates();
        }
        let (inner, outer): (Vec<_>, Vec<_>) =
            self.entries.iter().cloned().partition(|(k, _)| k == "l1_ratio");
        let outer = HyperGrid { entries: outer };
        outer
            .candidates()
            .into_iter()
            .map(|p| match inner.first() {
                Some((k, values)) => p.with(k, ParamValue::List(values.clone())),
                None => p,
            })
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (k, v) in &self.entries {
            if v.is_empty() {
                return Err(Error::Validation(format!("grid parameter {k} has no values")));
            }
        }
        Ok(())
    }
}

/// Parsed grid file: section name → grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridFile {
    pub sections: BTreeMap<String, HyperGrid>,
}

impl GridFile {
    /// The grid for a model kind and task family, e.g. `rf.classification`.
    pub fn get(&self, kind: ModelKind, classification: bool) -> Option<&HyperGrid> {
        let family = if classification {
            "classification"
        } else {
            "regression"
        };
        self.sections.get(&format!("{}.{family}", kind.as_str()))
    }
}

pub fn parse_grids(text: &str) -> Result<GridFile> {
    let mut file = GridFile::default();
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::schema("grid", n as u64 + 1, m.to_string());
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if file.sections.contains_key(&name) {
                return Err(bad(&format!("duplicate section [{name}]")));
            }
            file.sections.insert(name.clone(), HyperGrid::new());
            current = Some(name);
            continue;
        }
        let Some(section) = current.as_ref() else {
            return Err(bad("parameter outside a [section]"));
        };
        let Some((key, values)) = line.split_once('=') else {
            return Err(bad("expected `name = value, value, ...`"));
        };
        let key = key.trim().replace(' ', "_");
        let values: Vec<ParamValue> = values
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(ParamValue::parse)
            .collect();
        if values.is_empty() {
            return Err(bad(&format!("{key} has no values")));
        }
        let grid = file.sections.get_mut(section).expect("section inserted above");
        if grid.entries.iter().any(|(k, _)| *k == key) {
            return Err(bad(&format!("duplicate parameter {key}")));
        }
        grid.entries.push((key, values));
    }
    Ok(file)
}

/// Default grids, one section per model kind and task family.
pub fn default_grid_text() -> &'static str {
    DEFAULT_GRIDS
}

const DEFAULT_GRIDS: &str = "\
[rf.classification]
n_estimators = 200, 500, 1000
max_samples = None, 0.8
max_depth = None, 2, 4
min_samples_split = 2, 8, 32
min_samples_leaf = 1, 4, 16
max_features = None, sqrt, log2

[rf.regression]
n_estimators = 100, 200, 500
max_samples = None, 0.8
max_depth = None, 4, 8
min_samples_split = 2, 8, 32
min_samples_leaf = 1, 4, 16
max_features = None, sqrt, log2

[gb.classification]
n_estimators = 50, 100, 200
learning_rate = 0.01, 0.1, 0.2
max_depth = None, 3, 6
min_samples_split = 2, 4, 8
min_samples_leaf = 1, 2, 4
max_features = None, sqrt, log2

[gb.regression]
n_estimators = 400
learning_rate = 0.01, 0.1, 0.2
max_depth = None, 3, 6
min_samples_split = 2, 4, 8
min_samples_leaf = 1, 2, 4
max_features = None, sqrt, log2

[xgb.classification]
n_estimators = 50
learning_rate = 0.2
max_depth = 2, 4
subsample = 1.0
colsample_bytree = 1.0

[xgb.regression]
n_estimators = 50, 100, 200
learning_rate = 0.01, 0.1, 0.2
max_depth = 2, 4, 6
subsample = 0.7, 1.0
colsample_bytree = 0.5, 1.0

[linear.classification]
l1_ratio = 0.0, 0.2, 0.4, 0.6, 0.8, 1.0

[linear.regression]
l1_ratio = 0.1, 0.5, 0.9, 1.0
";
