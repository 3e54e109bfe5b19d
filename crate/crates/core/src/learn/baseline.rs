//! Baseline rules: the sum, mean or maximum of the imputed echo matrix
//! read directly as tonnes.

use serde::{Deserialize, Serialize};

use super::{Matrix, Output};
use crate::error::{Error, Result};
use crate::eval::{f1_score, mae, ConfusionMatrix, F1Mode};
use crate::features::{Task, TaskLabel, HIGH_T, PRESENCE_T, WINDOW_MEAN, WINDOW_SUM};

/// Columns the baseline reads, in this order.
pub const BASELINE_COLUMNS: [&str; 3] = [WINDOW_SUM, WINDOW_MEAN, "Agg.T"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineRule {
    Sum,
    Mean,
    Max,
}

impl BaselineRule {
    pub const ALL: [BaselineRule; 3] = [BaselineRule::Sum, BaselineRule::Mean, BaselineRule::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineRule::Sum => "sum",
            BaselineRule::Mean => "mean",
            BaselineRule::Max => "max",
        }
    }

    fn column(self) -> usize {
        match self {
            BaselineRule::Sum => 0,
            BaselineRule::Mean => 1,
            BaselineRule::Max => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub rule: BaselineRule,
    pub task: Task,
    /// Training score of each rule, in [`BaselineRule::ALL`] order.
    pub train_scores: Vec<f64>,
}

impl BaselineModel {
    /// `x` holds [`BASELINE_COLUMNS`]. Classes come from the presence and
    /// high thresholds applied to the rule value; the class scores rank
    /// rows by that value so ROC analysis stays meaningful.
    pub fn predict(&self, x: &Matrix) -> Output {
        let values: Vec<f64> = (0..x.rows()).map(|i| x.get(i, self.rule.column())).collect();
        apply(self.task, &values)
    }
}

fn apply(task: Task, values: &[f64]) -> Output {
    match task.n_classes() {
        None => Output::Regression(values.iter().map(|&v| task.target(v)).collect()),
        Some(k) => {
            let mut scores = Matrix::zeros(values.len(), k);
            let mut labels = Vec::with_capacity(values.len());
            let mid = (PRESENCE_T + HIGH_T) / 2.0;
            for (i, &v) in values.iter().enumerate() {
                let row: Vec<f64> = if k == 2 {
                    vec![-v, v]
                } else {
                    vec![-v, -(v - mid).abs(), v]
                };
                scores.row_mut(i).copy_from_slice(&row);
                labels.push(match task.label(v) {
                    TaskLabel::Class(c) => c,
                    TaskLabel::Value(_) => unreachable!("classification task"),
                });
            }
            Output::Classification { scores, labels }
        }
    }
}

/// Task metric oriented so that larger is better.
fn train_score(task: Task, out: &Output, y: &[f64]) -> Result<f64> {
    match (task.n_classes(), out) {
        (Some(k), Output::Classification { labels, .. }) => {
            let obs: Vec<usize> = y.iter().map(|&v| v as usize).collect();
            let cm = ConfusionMatrix::new(k, &obs, labels)?;
            let mode = if k == 2 { F1Mode::Binary } else { F1Mode::Weighted };
            f1_score(&cm, mode)
        }
        (None, Output::Regression(pred)) => Ok(-mae(pred, y)?),
        _ => unreachable!("output family follows the task"),
    }
}

/// Picks the rule with the best training metric (F1, weighted F1 or MAE);
/// ties go to Max, then Mean. `y` holds task targets.
pub fn fit_baseline(x: &Matrix, y: &[f64], task: Task) -> Result<BaselineModel> {
    if x.rows() == 0 {
        return Err(Error::Empty("no training rows for the baseline".into()));
    }
    let scores = BaselineRule::ALL
        .iter()
        .map(|rule| {
            let values: Vec<f64> = (0..x.rows()).map(|i| x.get(i, rule.column())).collect();
            train_score(task, &apply(task, &values), y)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = BaselineRule::Max;
    for rule in [BaselineRule::Mean, BaselineRule::Sum] {
        if scores[rule.column()] > scores[best.column()] {
            best = rule;
        }
    }
    Ok(BaselineModel {
        rule: best,
        task,
        train_scores: scores,
    })
}
