//! Dataset-level training, prediction and the model file format.
//!
//! A model file is the line `tunai-model 1` followed by a JSON document
//! holding the feature schema, the training medians, the task and the
//! kind-specific body.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baseline::{fit_baseline, BaselineModel, BASELINE_COLUMNS};
use super::boost::{fit_gbdt, BoostParams, BoostVariant};
use super::forest::{fit_forest, ForestParams};
use super::linear::{fit_linear, LinearModel, LinearParams};
use super::params::Params;
use super::tree::TreeEnsemble;
use super::{Matrix, Output};
use crate::error::{Error, Result};
use crate::features::{Dataset, Medians, Task};

pub const MODEL_MAGIC: &str = "tunai-model 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Baseline,
    Linear,
    Rf,
    Gb,
    Xgb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Baseline, ModelKind::Linear, ModelKind::Rf, ModelKind::Gb, ModelKind::Xgb];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Linear => "linear",
            ModelKind::Rf => "rf",
            ModelKind::Gb => "gb",
            ModelKind::Xgb => "xgb",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelBody {
    Baseline(BaselineModel),
    Linear(LinearModel),
    Ensemble(TreeEnsemble),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// Input columns, in matrix order.
    pub schema: Vec<String>,
    /// Fill values for missing inputs, aligned with `schema`.
    pub medians: Medians,
    pub task: Task,
    pub kind: ModelKind,
    pub params: Params,
    pub seed: u64,
    pub body: ModelBody,
}

/// Selects `names` from `ds` and fills gaps with `medians`.
pub fn design_matrix(ds: &Dataset, names: &[String], medians: &Medians) -> Result<Matrix> {
    let idx = ds.select(names)?;
    let fill: Vec<f64> = names
        .iter()
        .map(|n| {
            medians
                .get(n)
                .ok_or_else(|| Error::Validation(format!("no training median for {n}")))
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(ds.len() * names.len());
    for r in &ds.rows {
        data.extend(idx.iter().zip(&fill).map(|(&j, &m)| r.values[j].unwrap_or(m)));
    }
    Matrix::new(ds.len(), names.len(), data)
}

/// Fits one model. `names` are the feature columns (ignored by the
/// baseline, which reads its fixed window statistics); `medians` must cover
/// them, and default to medians of `train` itself.
pub fn fit_model(
    train: &Dataset,
    names: &[String],
    task: Task,
    kind: ModelKind,
    params: &Params,
    seed: u64,
    medians: Option<&Medians>,
) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::Empty("training split has no rows".into()));
    }
    let schema: Vec<String> = match kind {
        ModelKind::Baseline => BASELINE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        _ => names.to_vec(),
    };
    train.select(&schema)?;
    let medians = match medians {
        Some(m) => m.clone(),
        None => Medians::fit(&schema, train.rows.iter().map(|r| &r.values[..])),
    };
    let medians = Medians {
        values: schema
            .iter()
            .map(|n| medians.get(n).ok_or_else(|| Error::Validation(format!("no training median for {n}"))))
            .collect::<Result<_>>()?,
        names: schema.clone(),
    };
    let x = design_matrix(train, &schema, &medians)?;
    let y: Vec<f64> = train.rows.iter().map(|r| task.target(r.y)).collect();
    let body = match kind {
        ModelKind::Baseline => {
            params.check_keys("baseline", &[])?;
            ModelBody::Baseline(fit_baseline(&x, &y, task)?)
        }
        ModelKind::Linear => ModelBody::Linear(fit_linear(&x, &y, task, &LinearParams::from_params(params, task)?, seed)?),
        ModelKind::Rf => ModelBody::Ensemble(fit_forest(&x, &y, task, &ForestParams::from_params(params, task)?, seed)?),
        ModelKind::Gb => ModelBody::Ensemble(fit_gbdt(
            &x,
            &y,
            task,
            &BoostParams::from_params(params, BoostVariant::GradientBoosting)?,
            seed,
        )?),
        ModelKind::Xgb => ModelBody::Ensemble(fit_gbdt(
            &x,
            &y,
            task,
            &BoostParams::from_params(params, BoostVariant::SecondOrder)?,
            seed,
        )?),
    };
    Ok(TrainedModel {
        schema,
        medians,
        task,
        kind,
        params: params.clone(),
        seed,
        body,
    })
}

impl TrainedModel {
    /// Predicts for every row of `ds`, which must carry the schema columns.
    pub fn predict(&self, ds: &Dataset) -> Result<Output> {
        let x = design_matrix(ds, &self.schema, &self.medians)?;
        Ok(self.predict_matrix(&x))
    }

    /// Predicts from a matrix whose columns are named `names`; the names
    /// must equal the schema exactly.
    pub fn predict_named(&self, names: &[String], x: &Matrix) -> Result<Output> {
        if names != self.schema.as_slice() {
            let missing = self.schema.iter().filter(|n| !names.contains(n)).cloned().collect();
            let extra = names.iter().filter(|n| !self.schema.contains(n)).cloned().collect();
            return Err(Error::SchemaMismatch { missing, extra });
        }
        Ok(self.predict_matrix(x))
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Output {
        match &self.body {
            ModelBody::Baseline(m) => m.predict(x),
            ModelBody::Linear(m) => m.predict(x),
            ModelBody::Ensemble(m) => m.predict(x),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<model>", e);
        writeln!(w, "{MODEL_MAGIC}").map_err(io)?;
        serde_json::to_writer(&mut w, self).map_err(|e| Error::ModelFormat(e.to_string()))?;
        writeln!(w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn read<R: Read>(r: R) -> Result<TrainedModel> {
        let mut r = BufReader::new(r);
        let mut first = String::new();
        r.read_line(&mut first).map_err(|e| Error::io("<model>", e))?;
        if first.trim_end() != MODEL_MAGIC {
            return Err(Error::ModelFormat(format!(
                "expected header {MODEL_MAGIC:?}, found {:?}",
                first.trim_end()
            )));
        }
        serde_json::from_reader(r).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::read(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Row, Split};
    use crate::ingest::EventKind;
    use crate::learn::ParamValue;

    fn ds() -> Dataset {
        let names: Vec<String> = ["Window.Sum", "Window.Mean", "Agg.T", "Temp.0"].map(String::from).to_vec();
        let rows = (0..30)
            .map(|i| {
                let t = f64::from(i) * 2.0;
                Row {
                    event_id: format!("E{i:02}"),
                    kind: if i % 2 == 0 { EventKind::Set } else { EventKind::Deployment },
                    y: t,
                    split: Some(Split::Train),
                    values: vec![Some(t * 50.0), Some(t / 3.0), Some(t), (i % 4 != 0).then_some(25.0 + t / 10.0)],
                }
            })
            .collect();
        Dataset { w: 0, names, rows }
    }

    #[test]
    fn every_kind_round_trips_through_the_file_format() {
        let d = ds();
        let names = vec!["Agg.T".to_string(), "Temp.0".to_string()];
        for kind in ModelKind::ALL {
            for task in Task::ALL {
                let params = match kind {
                    ModelKind::Rf | ModelKind::Gb | ModelKind::Xgb => Params::new().with("n_estimators", ParamValue::Int(5)),
                    _ => Params::new(),
                };
                let m = fit_model(&d, &names, task, kind, &params, 3, None).unwrap();
                let mut buf = Vec::new();
                m.write(&mut buf).unwrap();
                assert!(buf.starts_with(b"tunai-model 1\n"));
                let back = TrainedModel::read(buf.as_slice()).unwrap();
                assert_eq!(back, m, "{kind} {task}");
                assert_eq!(back.predict(&d).unwrap(), m.predict(&d).unwrap());
            }
        }
    }

    #[test]
    fn schema_mismatch_names_columns() {
        let d = ds();
        let m = fit_model(&d, &["Agg.T".to_string()], Task::Binary, ModelKind::Rf, &Params::new(), 0, None).unwrap();
        let x = Matrix::zeros(1, 1);
        match m.predict_named(&["Temp.0".to_string()], &x) {
            Err(Error::SchemaMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["Agg.T"]);
                assert_eq!(extra, vec!["Temp.0"]);
            }
            o => panic!("{o:?}"),
        }
        let narrow = Dataset {
            names: vec!["Temp.0".into()],
            rows: vec![],
            w: 0,
        };
        assert!(matches!(m.predict(&narrow), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn empty_input_gives_empty_predictions() {
        let d = ds();
        let m = fit_model(&d, &["Agg.T".to_string()], Task::Ternary, ModelKind::Gb, &Params::new(), 0, None).unwrap();
        assert!(m.predict(&d.filter(|_| false)).unwrap().is_empty());
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(matches!(TrainedModel::read(&b"tunai-model 9\n{}"[..]), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn missing_values_take_the_training_median() {
        let d = ds();
        let m = fit_model(&d, &["Temp.0".to_string()], Task::Regression, ModelKind::Rf, &Params::new(), 0, None).unwrap();
        let x = design_matrix(&d, &m.schema, &m.medians).unwrap();
        assert_eq!(x.get(0, 0), m.medians.values[0]);
    }
}
