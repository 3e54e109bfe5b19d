//! Random forests: bagged CART trees with per-node feature subsampling.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tree::{grow, task_criterion, Criterion, EnsembleKind, MaxFeatures, Targets, Tree, TreeEnsemble, TreeParams};
use super::{class_targets, Matrix};
use crate::error::{Error, Result};
use crate::features::Task;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    /// Draw rows with replacement per tree; otherwise every tree sees all rows.
    pub bootstrap: bool,
    /// Bootstrap sample size as a fraction of the rows; `None` draws n.
    pub max_samples: Option<f64>,
    pub tree: TreeParams,
}

impl ForestParams {
    pub fn for_task(task: Task) -> ForestParams {
        let (criterion, max_features) = if task.is_classification() {
            (Criterion::Gini, MaxFeatures::Sqrt)
        } else {
            (Criterion::SquaredError, MaxFeatures::All)
        };
        ForestParams {
            n_estimators: 100,
            bootstrap: true,
            max_samples: None,
            tree: TreeParams {
                criterion,
                max_features,
                ..TreeParams::default()
            },
        }
    }

    pub fn from_params(p: &Params, task: Task) -> Result<ForestParams> {
        p.check_keys(
            "rf",
            &[
                "n_estimators",
                "bootstrap",
                "max_samples",
                "max_depth",
                "min_samples_split",
                "min_samples_leaf",
                "max_features",
                "criterion",
            ],
        )?;
        let base = ForestParams::for_task(task);
        let fp = ForestParams {
            n_estimators: p.usize_or("n_estimators", base.n_estimators)?,
            bootstrap: p.bool_or("bootstrap", base.bootstrap)?,
            max_samples: p.opt_f64_or("max_samples", base.max_samples)?,
            tree: TreeParams::from_params(p, base.tree)?,
        };
        if fp.n_estimators == 0 {
            return Err(Error::Validation("n_estimators must be positive".into()));
        }
        if fp.max_samples.is_some_and(|f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Validation("max_samples must lie in (0, 1]".into()));
        }
        Ok(fp)
    }
}

/// Per-row weights for tree `t`: bootstrap counts, or all ones.
fn bag(n: usize, params: &ForestParams, rng: &mut rng::Rng) -> Vec<f64> {
    if !params.bootstrap {
        return vec![1.0; n];
    }
    let draws = params
        .max_samples
        .map_or(n, |f| ((f * n as f64).round() as usize).max(1));
    let mut w = vec![0.0; n];
    for _ in 0..draws {
        w[rng.random_range(0..n)] += 1.0;
    }
    w
}

pub fn fit_forest(x: &Matrix, y: &[f64], task: Task, params: &ForestParams, seed: u64) -> Result<TreeEnsemble> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("no training rows for a forest".into()));
    }
    let tree_params = task_criterion(&params.tree, task)?;
    let classes = task.n_classes().map(|k| class_targets(y, k)).transpose()?;
    let targets = match (&classes, task.n_classes()) {
        (Some(c), Some(k)) => Targets::Classes { y: c, k },
        _ => Targets::Values(y),
    };

    let fitted: Vec<(Tree, Vec<f64>)> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, &[rng::TREE, t as u64]);
            let w = bag(n, params, &mut r);
            (grow(x, &targets, &w, &tree_params, None, &mut r), w)
        })
        .collect();

    let oob_error = params.bootstrap.then(|| oob(x, y, task, &fitted)).flatten();
    Ok(TreeEnsemble {
        kind: EnsembleKind::RandomForest,
        n_classes: task.n_classes(),
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        trees_per_stage: 1,
        learning_rate: 1.0,
        init: Vec::new(),
        seed,
        oob_error,
        loss_trace: Vec::new(),
    })
}

/// Out-of-bag error over rows left out by at least one tree.
fn oob(x: &Matrix, y: &[f64], task: Task, fitted: &[(Tree, Vec<f64>)]) -> Option<f64> {
    let mut err = 0.0;
    let mut counted = 0usize;
    for i in 0..x.rows() {
        let mut acc: Option<Vec<f64>> = None;
        let mut m = 0.0;
        for (tree, w) in fitted {
            if w[i] == 0.0 {
                let v = tree.predict_row(x.row(i));
                let a = acc.get_or_insert_with(|| vec![0.0; v.len()]);
                a.iter_mut().zip(v).for_each(|(a, v)| *a += v);
                m += 1.0;
            }
        }
        let Some(acc) = acc else { continue };
        counted += 1;
        if task.is_classification() {
            let pred = super::predict_class(&Matrix::new(1, acc.len(), acc).expect("one row"))[0];
            err += f64::from(u8::from(pred as f64 != y[i]));
        } else {
            let d = acc[0] / m - y[i];
            err += d * d;
        }
    }
    (counted > 0).then(|| err / counted as f64)
}
