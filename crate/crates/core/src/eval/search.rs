//! Grid search with k-fold cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Metric;
use super::split::kfold;
use crate::error::{Error, Result};
use crate::features::{Dataset, Medians, Task};
use crate::learn::{fit_model, HyperGrid, ModelKind, Params, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub params: Params,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Set when any fold failed; the candidate is then out of the running.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub kind: ModelKind,
    pub task: Task,
    pub metric: Metric,
    pub folds: usize,
    pub candidates: Vec<CandidateResult>,
    pub best_index: usize,
    /// Best candidate refit on the whole training set.
    pub model: TrainedModel,
}

impl SearchResult {
    pub fn best(&self) -> &CandidateResult {
        &self.candidates[self.best_index]
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub folds: usize,
    pub seed: u64,
    pub metric: Option<Metric>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            folds: 5,
            seed: 0,
            metric: None,
        }
    }
}

/// Sweeps the full cartesian grid. Every candidate is scored by its mean
/// fold metric; the best (ties: first in grid order) is refit on all of
/// `train`. Folds are stratified by class for classification tasks.
/// `medians` fill missing values in every fold.
pub fn grid_search(
    train: &Dataset,
    names: &[String],
    task: Task,
    kind: ModelKind,
    grid: &HyperGrid,
    medians: &Medians,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    grid.validate()?;
    let metric = cfg.metric.unwrap_or_else(|| Metric::for_task(task));
    let candidates = grid.candidates_for(kind);
    let targets: Vec<f64> = train.rows.iter().map(|r| task.target(r.y)).collect();
    let labels: Option<Vec<usize>> = task
        .is_classification()
        .then(|| targets.iter().map(|&v| v as usize).collect());
    let folds = kfold(train.len(), cfg.folds, cfg.seed, labels.as_deref())?;
    let fold_sets: Vec<(Dataset, Dataset)> = folds
        .iter()
        .map(|held| {
            let mut is_held = vec![false; train.len()];
            held.iter().for_each(|&i| is_held[i] = true);
            let subset = |keep: bool| Dataset {
                w: train.w,
                names: train.names.clone(),
                rows: (0..train.len())
                    .filter(|&i| is_held[i] != keep)
                    .map(|i| train.rows[i].clone())
                    .collect(),
            };
            (subset(true), subset(false))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..fold_sets.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (fit, held) = &fold_sets[f];
            let m = fit_model(fit, names, task, kind, &candidates[c], cfg.seed, Some(medians))?;
            let y: Vec<f64> = held.rows.iter().map(|r| task.target(r.y)).collect();
            metric.score(&m.predict(held)?, &y)
        })
        .collect();

    let mut results = Vec::with_capacity(candidates.len());
    let mut by_candidate = scores.into_iter();
    for params in candidates {
        let mut fold_scores = Vec::with_capacity(fold_sets.len());
        let mut error = None;
        for s in by_candidate.by_ref().take(fold_sets.len()) {
            match s {
                Ok(v) if v.is_finite() => fold_scores.push(v),
                Ok(v) => error = error.or(Some(format!("non-finite fold score {v}"))),
                Err(e) => error = error.or(Some(e.to_string())),
            }
        }
        let (mean, std) = if error.is_none() {
            mean_std(&fold_scores)
        } else {
            (f64::NAN, f64::NAN)
        };
        results.push(CandidateResult {
            params,
            fold_scores,
            mean,
            std,
            error,
        });
    }

    let mut best: Option<usize> = None;
    for (i, c) in results.iter().enumerate() {
        if c.error.is_none() && best.is_none_or(|b| metric.better(c.mean, results[b].mean)) {
            best = Some(i);
        }
    }
    let best_index = best.ok_or(Error::AllCandidatesFailed(results.len()))?;
    let model = fit_model(train, names, task, kind, &results[best_index].params, cfg.seed, Some(medians))?;
    Ok(SearchResult {
        kind,
        task,
        metric,
        folds: fold_sets.len(),
        candidates: results,
        best_index,
        model,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}
