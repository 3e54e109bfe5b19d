//! Gradient-boosted trees.
//!
//! `GradientBoosting` fits squared-error trees to the negative gradient and
//! then sets classification leaves by a Newton step. `SecondOrder` grows
//! trees directly on gradient/hessian sums with leaf weight −G/(H+λ), plus
//! row subsampling per stage and column subsampling per tree.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tree::{grow, Criterion, EnsembleKind, Targets, TreeEnsemble, TreeParams};
use super::{class_targets, Matrix};
use crate::error::{Error, Result};
use crate::features::Task;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoostVariant {
    GradientBoosting,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub variant: BoostVariant,
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
    /// Fraction of rows drawn without replacement for each stage.
    pub subsample: f64,
    /// Fraction of columns available to each tree.
    pub colsample_bytree: f64,
    /// Second-order only: L2 penalty on leaf weights.
    pub reg_lambda: f64,
    /// Second-order only: minimum hessian sum per child.
    pub min_child_weight: f64,
}

const SHARED_KEYS: [&str; 6] = [
    "n_estimators",
    "learning_rate",
    "max_depth",
    "min_samples_split",
    "min_samples_leaf",
    "max_features",
];

impl BoostParams {
    pub fn defaults(variant: BoostVariant) -> BoostParams {
        match variant {
            BoostVariant::GradientBoosting => BoostParams {
                variant,
                n_estimators: 100,
                learning_rate: 0.1,
                tree: TreeParams {
                    max_depth: Some(3),
                    ..TreeParams::default()
                },
                subsample: 1.0,
                colsample_bytree: 1.0,
                reg_lambda: 0.0,
                min_child_weight: 0.0,
            },
            BoostVariant::SecondOrder => BoostParams {
                variant,
                n_estimators: 100,
                learning_rate: 0.3,
                tree: TreeParams {
                    max_depth: Some(6),
                    ..TreeParams::default()
                },
                subsample: 1.0,
                colsample_bytree: 1.0,
                reg_lambda: 1.0,
                min_child_weight: 1.0,
            },
        }
    }

    pub fn from_params(p: &Params, variant: BoostVariant) -> Result<BoostParams> {
        let mut keys = SHARED_KEYS.to_vec();
        match variant {
            BoostVariant::GradientBoosting => {
                keys.push("subsample");
                p.check_keys("gb", &keys)?;
            }
            BoostVariant::SecondOrder => {
                keys.extend(["subsample", "colsample_bytree", "reg_lambda", "min_child_weight"]);
                p.check_keys("xgb", &keys)?;
            }
        }
        let base = BoostParams::defaults(variant);
        let bp = BoostParams {
            variant,
            n_estimators: p.usize_or("n_estimators", base.n_estimators)?,
            learning_rate: p.f64_or("learning_rate", base.learning_rate)?,
            tree: TreeParams::from_params(p, base.tree)?,
            subsample: p.f64_or("subsample", base.subsample)?,
            colsample_bytree: p.f64_or("colsample_bytree", base.colsample_bytree)?,
            reg_lambda: p.f64_or("reg_lambda", base.reg_lambda)?,
            min_child_weight: p.f64_or("min_child_weight", base.min_child_weight)?,
        };
        bp.validate()?;
        Ok(bp)
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Validation(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, f) in [("subsample", self.subsample), ("colsample_bytree", self.colsample_bytree)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Validation(format!("{name} must lie in (0, 1], got {f}")));
            }
        }
        if self.reg_lambda < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::Validation("reg_lambda and min_child_weight must be non-negative".into()));
        }
        Ok(())
    }
}

/// Loss-specific pieces: targets as one-hot / values and the mean loss.
enum Loss {
    Squared(Vec<f64>),
    Logistic(Vec<usize>),
    Multinomial(Vec<usize>, usize),
}

const P_CLAMP: f64 = 1e-12;

impl Loss {
    fn outputs(&self) -> usize {
        match self {
            Loss::Multinomial(_, k) => *k,
            _ => 1,
        }
    }

    fn init(&self) -> Vec<f64> {
        match self {
            Loss::Squared(y) => vec![y.iter().sum::<f64>() / y.len() as f64],
            Loss::Logistic(y) => {
                let p = (y.iter().sum::<usize>() as f64 / y.len() as f64).clamp(P_CLAMP, 1.0 - P_CLAMP);
                vec![(p / (1.0 - p)).ln()]
            }
            Loss::Multinomial(y, k) => {
                let mut counts = vec![0.0; *k];
                y.iter().for_each(|&c| counts[c] += 1.0);
                counts
                    .iter()
                    .map(|c| (c / y.len() as f64).max(P_CLAMP).ln())
                    .collect()
            }
        }
    }

    fn n_classes(&self) -> Option<usize> {
        match self {
            Loss::Squared(_) => None,
            Loss::Logistic(_) => Some(2),
            Loss::Multinomial(_, k) => Some(*k),
        }
    }

    /// Mean training loss for margins `f` (n × outputs, row-major).
    fn mean(&self, f: &[f64]) -> f64 {
        let m = self.outputs();
        let n = f.len() / m;
        let total: f64 = match self {
            Loss::Squared(y) => y.iter().zip(f).map(|(y, f)| (y - f) * (y - f)).sum(),
            Loss::Logistic(y) => y
                .iter()
                .zip(f)
                .map(|(&c, &z)| {
                    // log(1 + e^z) − y·z, written to avoid overflow.
                    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                    softplus - if c == 1 { z } else { 0.0 }
                })
                .sum(),
            Loss::Multinomial(y, _) => y
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let row = &f[i * m..(i + 1) * m];
                    let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lse = mx + row.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
                    lse - row[c]
                })
                .sum(),
        };
        total / n as f64
    }

    /// Gradient and hessian of output `k` for every row.
    fn grad_hess(&self, f: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.outputs();
        match self {
            Loss::Squared(y) => (y.iter().zip(f).map(|(y, f)| f - y).collect(), vec![1.0; y.len()]),
            Loss::Logistic(y) => y
                .iter()
                .zip(f)
                .map(|(&c, &z)| {
                    let p = super::sigmoid(z);
                    (p - c as f64, (p * (1.0 - p)).max(P_CLAMP))
                })
                .unzip(),
            Loss::Multinomial(y, _) => y
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let mut row = f[i * m..(i + 1) * m].to_vec();
                    super::softmax(&mut row);
                    let p = row[k];
                    (p - f64::from(u8::from(c == k)), (p * (1.0 - p)).max(P_CLAMP))
                })
                .unzip(),
        }
    }
}

/// Fits a boosted ensemble. Regression uses squared error, binary tasks
/// log-loss and ternary tasks multinomial deviance with one tree per class
/// per stage.
pub fn fit_gbdt(x: &Matrix, y: &[f64], task: Task, params: &BoostParams, seed: u64) -> Result<TreeEnsemble> {
    params.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("no training rows for boosting".into()));
    }
    let loss = match task.n_classes() {
        None => Loss::Squared(y.to_vec()),
        Some(2) => Loss::Logistic(class_targets(y, 2)?),
        Some(k) => Loss::Multinomial(class_targets(y, k)?, k),
    };
    let m = loss.outputs();
    let init = loss.init();
    let mut f: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
    let mut loss_trace = vec![loss.mean(&f)];

    let tree_params = TreeParams {
        criterion: match params.variant {
            BoostVariant::GradientBoosting => Criterion::SquaredError,
            BoostVariant::SecondOrder => Criterion::SecondOrder {
                lambda: params.reg_lambda,
                min_child_weight: params.min_child_weight,
            },
        },
        ..params.tree
    };
    let p = x.cols();
    let n_rows = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols = ((params.colsample_bytree * p as f64).round() as usize).clamp(1, p.max(1));

    let mut trees = Vec::with_capacity(params.n_estimators * m);
    for stage in 0..params.n_estimators {
        let mut r = rng::stream(seed, &[rng::STAGE, stage as u64]);
        let weights = if n_rows < n {
            let mut w = vec![0.0; n];
            sample(&mut r, n, n_rows).into_iter().for_each(|i| w[i] = 1.0);
            w
        } else {
            vec![1.0; n]
        };
        let mut stage_trees = Vec::with_capacity(m);
        for k in 0..m {
            let (g, h) = loss.grad_hess(&f, k);
            let cols = (n_cols < p).then(|| {
                let mut c = sample(&mut r, p, n_cols).into_vec();
                c.sort_unstable();
                c
            });
            let tree = match params.variant {
                BoostVariant::GradientBoosting => {
                    let resid: Vec<f64> = g.iter().map(|v| -v).collect();
                    let mut t = grow(x, &Targets::Values(&resid), &weights, &tree_params, cols.as_deref(), &mut r);
                    if loss.n_classes().is_some() {
                        newton_leaves(&mut t, x, &resid, &h, &weights, m);
                    }
                    t
                }
                BoostVariant::SecondOrder => grow(
                    x,
                    &Targets::Gradients { g: &g, h: &h },
                    &weights,
                    &tree_params,
                    cols.as_deref(),
                    &mut r,
                ),
            };
            stage_trees.push(tree);
        }
        // Margins update only after every class tree of the stage is grown.
        for i in 0..n {
            for (k, t) in stage_trees.iter().enumerate() {
                f[i * m + k] += params.learning_rate * t.predict_row(x.row(i))[0];
            }
        }
        loss_trace.push(loss.mean(&f));
        trees.extend(stage_trees);
    }

    Ok(TreeEnsemble {
        kind: match params.variant {
            BoostVariant::GradientBoosting => EnsembleKind::GradientBoosting,
            BoostVariant::SecondOrder => EnsembleKind::SecondOrderBoosting,
        },
        n_classes: loss.n_classes(),
        trees,
        trees_per_stage: m,
        learning_rate: params.learning_rate,
        init,
        seed,
        oob_error: None,
        loss_trace,
    })
}

/// Replaces each leaf with one Newton step on the log-loss: Σr / Σh, scaled
/// by (K−1)/K for K-class deviance.
fn newton_leaves(tree: &mut super::tree::Tree, x: &Matrix, resid: &[f64], hess: &[f64], w: &[f64], m: usize) {
    let mut sums: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for i in (0..x.rows()).filter(|&i| w[i] > 0.0) {
        let e = sums.entry(tree.apply(x.row(i))).or_default();
        e.0 += w[i] * resid[i];
        e.1 += w[i] * hess[i];
    }
    let scale = if m > 1 { (m as f64 - 1.0) / m as f64 } else { 1.0 };
    for (leaf, (num, den)) in sums {
        let v = if den > 1e-150 { scale * num / den } else { 0.0 };
        tree.set_leaf(leaf, vec![v]);
    }
}
