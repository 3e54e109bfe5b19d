//! Permutation feature importance.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Metric;
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::learn::{design_matrix, TrainedModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Mean loss of performance when the column is shuffled, oriented so
    /// that positive means the feature helps.
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub metric: Metric,
    pub repeats: usize,
    pub baseline_score: f64,
    /// Sorted by `mean`, largest first; ties keep schema order.
    pub entries: Vec<Importance>,
}

impl ImportanceTable {
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature).map(|i| i + 1)
    }
}

/// Shuffles each model input column of `data` in turn and records the
/// drop in `metric`. Column `j` in repeat `r` is permuted with its own
/// seeded stream, so results do not depend on scheduling.
pub fn permutation_importance(
    model: &TrainedModel,
    data: &Dataset,
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceTable> {
    if repeats == 0 {
        return Err(Error::Validation("importance needs at least one repeat".into()));
    }
    let x = design_matrix(data, &model.schema, &model.medians)?;
    let y: Vec<f64> = data.rows.iter().map(|r| model.task.target(r.y)).collect();
    let base = metric.score(&model.predict_matrix(&x), &y)?;
    let sign = if metric.greater_is_better() { 1.0 } else { -1.0 };

    let mut entries = (0..x.cols())
        .into_par_iter()
        .map(|j| {
            let original = x.column(j);
            let drops = (0..repeats)
                .map(|r| {
                    let mut col = original.clone();
                    col.shuffle(&mut rng::stream(seed, &[rng::PERMUTE, j as u64, r as u64]));
                    let mut xp = x.clone();
                    xp.set_column(j, &col);
                    let s = metric.score(&model.predict_matrix(&xp), &y)?;
                    Ok(sign * (base - s))
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = drops.len() as f64;
            let mean = drops.iter().sum::<f64>() / n;
            let std = (drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt();
            Ok(Importance {
                feature: model.schema[j].clone(),
                mean,
                std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    Ok(ImportanceTable {
        metric,
        repeats,
        baseline_score: base,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Row, Task};
    use crate::ingest::EventKind;
    use crate::learn::{fit_model, ModelKind, ParamValue, Params};

    fn data() -> Dataset {
        let rows = (0..120)
            .map(|i| {
                let label = (i % 2) as f64;
                Row {
                    event_id: format!("E{i}"),
                    kind: EventKind::Set,
                    y: if label == 1.0 { 50.0 } else { 0.0 },
                    split: None,
                    values: vec![Some(label), Some(((i * 31) % 17) as f64), Some(3.0)],
                }
            })
            .collect();
        Dataset {
            w: 0,
            names: vec!["a".into(), "noise".into(), "constant".into()],
            rows,
        }
    }

    #[test]
    fn label_copy_ranks_first_and_constants_score_zero() {
        let d = data();
        let p = Params::new().with("n_estimators", ParamValue::Int(20));
        let m = fit_model(&d, &d.names, Task::Binary, ModelKind::Rf, &p, 1, None).unwrap();
        let t = permutation_importance(&m, &d, Metric::Auc, 3, 9).unwrap();
        assert_eq!(t.rank_of("a"), Some(1));
        let c = t.entries.iter().find(|e| e.feature == "constant").unwrap();
        assert_eq!(c.mean, 0.0);
    }

    #[test]
    fn constant_model_has_zero_importance_everywhere() {
        let mut d = data();
        d.rows.iter_mut().for_each(|r| r.y = 5.0);
        let m = fit_model(&d, &d.names, Task::Regression, ModelKind::Gb, &Params::new(), 0, None).unwrap();
        let t = permutation_importance(&m, &d, Metric::Mae, 2, 0).unwrap();
        assert!(t.entries.iter().all(|e| e.mean == 0.0));
    }
}
