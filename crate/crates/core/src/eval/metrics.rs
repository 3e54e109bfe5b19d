//! Classification and regression metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Task;
use crate::learn::{Matrix, Output};

/// k × k counts; row = observed class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize, observed: &[usize], predicted: &[usize]) -> Result<ConfusionMatrix> {
        if observed.len() != predicted.len() {
            return Err(Error::Validation(format!(
                "{} observed vs {} predicted labels",
                observed.len(),
                predicted.len()
            )));
        }
        let mut counts = vec![0; k * k];
        for (&o, &p) in observed.iter().zip(predicted) {
            if o >= k || p >= k {
                return Err(Error::Validation(format!("class label outside 0..{k}")));
            }
            counts[o * k + p] += 1;
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<ConfusionMatrix> {
        if counts.len() != k * k {
            return Err(Error::Validation(format!("{} counts for {k} classes", counts.len())));
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, observed: usize, predicted: usize) -> u64 {
        self.counts[observed * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        (0..self.k).map(|p| self.get(class, p)).sum()
    }

    /// F1 of one class; 0 when the class is neither present nor predicted.
    pub fn class_f1(&self, c: usize) -> f64 {
        let tp = self.get(c, c) as f64;
        let fp = (0..self.k).filter(|&o| o != c).map(|o| self.get(o, c)).sum::<u64>() as f64;
        let fn_ = self.support(c) as f64 - tp;
        let denom = 2.0 * tp + fp + fn_;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.k).map(|c| self.get(c, c)).sum();
        diag as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum F1Mode {
    /// F1 of class 1.
    Binary,
    /// Support-weighted mean of per-class F1; zero-support classes drop out.
    Weighted,
}

pub fn f1_score(cm: &ConfusionMatrix, mode: F1Mode) -> Result<f64> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::Empty("confusion matrix has no entries".into()));
    }
    match mode {
        F1Mode::Binary => {
            if cm.k() != 2 {
                return Err(Error::Validation(format!("binary F1 needs 2 classes, got {}", cm.k())));
            }
            Ok(cm.class_f1(1))
        }
        F1Mode::Weighted => Ok((0..cm.k())
            .map(|c| cm.support(c) as f64 * cm.class_f1(c))
            .sum::<f64>()
            / n as f64),
    }
}

/// Mid-ranks (1-based) of `v`, ties sharing their average rank.
fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann–Whitney statistic.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Validation("scores and labels differ in length".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Validation("ROC AUC needs both classes present".into()));
    }
    let ranks = mid_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// One-vs-rest AUC per class, averaged with support weights. Classes absent
/// from `labels` are skipped; at least two must be present.
pub fn roc_auc_ovr_weighted(scores: &Matrix, labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    let mut weight = 0usize;
    let mut present = 0;
    for c in 0..scores.cols() {
        let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        let support = pos.iter().filter(|&&p| p).count();
        if support == 0 {
            continue;
        }
        present += 1;
        if support == labels.len() {
            continue;
        }
        total += support as f64 * roc_auc(&scores.column(c), &pos)?;
        weight += support;
    }
    if present < 2 {
        return Err(Error::Validation("ROC AUC needs at least two classes present".into()));
    }
    Ok(total / weight as f64)
}

pub fn mae(pred: &[f64], obs: &[f64]) -> Result<f64> {
    if pred.len() != obs.len() {
        return Err(Error::Validation(format!(
            "{} predictions vs {} observations",
            pred.len(),
            obs.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("MAE of no values".into()));
    }
    Ok(pred.iter().zip(obs).map(|(p, o)| (p - o).abs()).sum::<f64>() / pred.len() as f64)
}

/// Model-selection metric with its direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// ROC AUC (weighted one-vs-rest for more than two classes); maximized.
    Auc,
    /// Binary or weighted F1; maximized.
    F1,
    /// Mean absolute error; minimized.
    Mae,
}

impl Metric {
    /// ROC AUC for classification, MAE for regression.
    pub fn for_task(task: Task) -> Metric {
        if task.is_classification() {
            Metric::Auc
        } else {
            Metric::Mae
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::F1 => "f1",
            Metric::Mae => "mae",
        }
    }

    pub fn greater_is_better(self) -> bool {
        !matches!(self, Metric::Mae)
    }

    /// Whether `a` beats `b` strictly.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.greater_is_better() {
            a > b
        } else {
            a < b
        }
    }

    /// Scores `out` against task targets `y` (class indices or tonnes).
    pub fn score(self, out: &Output, y: &[f64]) -> Result<f64> {
        match (self, out) {
            (Metric::Mae, Output::Regression(p)) => mae(p, y),
            (Metric::Auc, Output::Classification { scores, .. }) => {
                let labels: Vec<usize> = y.iter().map(|&v| v as usize).collect();
                if scores.cols() == 2 {
                    roc_auc(&scores.column(1), &labels.iter().map(|&l| l == 1).collect::<Vec<_>>())
                } else {
                    roc_auc_ovr_weighted(scores, &labels)
                }
            }
            (Metric::F1, Output::Classification { scores, labels }) => {
                let obs: Vec<usize> = y.iter().map(|&v| v as usize).collect();
                let cm = ConfusionMatrix::new(scores.cols(), &obs, labels)?;
                f1_score(&cm, if scores.cols() == 2 { F1Mode::Binary } else { F1Mode::Weighted })
            }
            (m, _) => Err(Error::Validation(format!("metric {} does not fit this output", m.as_str()))),
        }
    }
}
