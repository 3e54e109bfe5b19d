//! The labeled dataset table: one row per surviving event, unimputed
//! feature values, and the train/test tag.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{feature_names, raw_features, Level};
use crate::error::{Error, Result};
use crate::ingest::table::{format_f64, format_opt_f64, parse_f64, parse_opt_f64};
use crate::ingest::{csv_err, csv_writer, EventKind};
use crate::pipeline::LabeledExample;

/// Sum of the imputed echo matrix; input to the baseline rules.
pub const WINDOW_SUM: &str = "Window.Sum";
/// Mean of the imputed echo matrix; input to the baseline rules.
pub const WINDOW_MEAN: &str = "Window.Mean";

const META: [&str; 4] = ["event_id", "kind", "y", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub event_id: String,
    pub kind: EventKind,
    pub y: f64,
    pub split: Option<Split>,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Window length the hour features were built with.
    pub w: usize,
    pub names: Vec<String>,
    pub rows: Vec<Row>,
}

impl Dataset {
    /// Columns: the two window statistics, then every `All`-level feature.
    pub fn from_examples(examples: &[LabeledExample], w: usize) -> Result<Dataset> {
        let mut names = vec![WINDOW_SUM.to_string(), WINDOW_MEAN.to_string()];
        names.extend(feature_names(Level::All, w));
        let rows = examples
            .iter()
            .map(|ex| {
                if ex.window.w != w {
                    return Err(Error::Validation(format!(
                        "example {} has a {} h window, dataset is {w} h",
                        ex.event_id, ex.window.w
                    )));
                }
                let mut values = vec![Some(ex.window.sum()), Some(ex.window.mean())];
                values.extend(raw_features(ex, Level::All));
                Ok(Row {
                    event_id: ex.event_id.clone(),
                    kind: ex.kind,
                    y: ex.y,
                    split: None,
                    values,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset { w, names, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Column indices for `names`, or a schema error listing the absent ones.
    pub fn select(&self, names: &[String]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        let mut missing = Vec::new();
        for n in names {
            match self.column(n) {
                Some(i) => idx.push(i),
                None => missing.push(n.clone()),
            }
        }
        if missing.is_empty() {
            Ok(idx)
        } else {
            Err(Error::SchemaMismatch {
                missing,
                extra: Vec::new(),
            })
        }
    }

    pub fn level_names(&self, level: Level) -> Vec<String> {
        feature_names(level, self.w)
    }

    /// Rows carrying `split`, in order.
    pub fn split_rows(&self, split: Split) -> Dataset {
        self.filter(|r| r.split == Some(split))
    }

    pub fn filter(&self, keep: impl Fn(&Row) -> bool) -> Dataset {
        Dataset {
            w: self.w,
            names: self.names.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(f, &path.display().to_string())
}

pub fn parse_dataset<R: Read>(reader: R, label: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::schema(label, 1, format!("unreadable header: {e}")))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < META.len() || cols[..META.len()] != META {
        return Err(Error::schema(label, 1, format!("header must start with {}", META.join(","))));
    }
    let names: Vec<String> = cols[META.len()..].iter().map(|s| s.to_string()).collect();
    let w = names.iter().filter(|n| n.starts_with("Agg.H")).count();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::schema(label, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::schema(label, line, m);
        let kind = EventKind::from_code(&rec[1]).ok_or_else(|| bad(format!("unknown kind {:?}", &rec[1])))?;
        let split = match &rec[3] {
            "" => None,
            s => Some(Split::parse(s).ok_or_else(|| bad(format!("unknown split {s:?}")))?),
        };
        let values = rec
            .iter()
            .skip(META.len())
            .map(parse_opt_f64)
            .collect::<std::result::Result<_, _>>()
            .map_err(bad)?;
        rows.push(Row {
            event_id: rec[0].to_string(),
            kind,
            y: parse_f64(&rec[2]).map_err(bad)?,
            split,
            values,
        });
    }
    Ok(Dataset { w, names, rows })
}

pub fn write_dataset<W: Write>(w: W, ds: &Dataset) -> Result<()> {
    let mut out = csv_writer(w);
    let header: Vec<&str> = META.iter().copied().chain(ds.names.iter().map(String::as_str)).collect();
    out.write_record(&header).map_err(csv_err)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for r in &ds.rows {
        fields.clear();
        fields.push(r.event_id.clone());
        fields.push(r.kind.code().to_string());
        fields.push(format_f64(r.y));
        fields.push(r.split.map(|s| s.as_str().to_string()).unwrap_or_default());
        fields.extend(r.values.iter().map(|v| format_opt_f64(*v)));
        out.write_record(&fields).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<dataset>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let names: Vec<String> = ["Agg.T", "Agg.H0", "Agg.H1", "Temp.0"].map(String::from).to_vec();
        Dataset {
            w: 2,
            names,
            rows: vec![
                Row {
                    event_id: "E1".into(),
                    kind: EventKind::Set,
                    y: 31.5,
                    split: Some(Split::Train),
                    values: vec![Some(4.0), Some(0.1), Some(1.0 / 3.0), None],
                },
                Row {
                    event_id: "E2".into(),
                    kind: EventKind::Deployment,
                    y: 0.0,
                    split: None,
                    values: vec![Some(0.0), Some(0.0), Some(0.0), Some(27.25)],
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let ds = tiny();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("event_id,kind,y,split,Agg.T,"));
        assert_eq!(parse_dataset(buf.as_slice(), "d").unwrap(), ds);
    }

    #[test]
    fn select_names_missing_columns() {
        let ds = tiny();
        assert_eq!(ds.select(&["Temp.0".into(), "Agg.T".into()]).unwrap(), vec![3, 0]);
        match ds.select(&["Zos.0".into()]) {
            Err(Error::SchemaMismatch { missing, .. }) => assert_eq!(missing, vec!["Zos.0"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_filter() {
        assert_eq!(tiny().split_rows(Split::Train).len(), 1);
    }
}
