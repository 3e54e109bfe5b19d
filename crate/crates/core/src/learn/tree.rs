//! CART trees and the ensembles built from them.
//!
//! Split search works on per-feature index arrays sorted once per tree and
//! partitioned stably at every node, so each level costs O(n·p).

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::params::{ParamValue, Params};
use super::{class_targets, sigmoid, softmax, Matrix, Output};
use crate::error::{Error, Result};
use crate::features::Task;
use crate::rng::{self, Rng};

/// Depth bound applied when a tree is requested unbounded.
pub const MAX_DEPTH_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    Gini,
    Entropy,
    SquaredError,
    /// Gradient/hessian statistics with leaf weight −G/(H+λ).
    SecondOrder { lambda: f64, min_child_weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Fraction(f64),
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt() as usize,
            MaxFeatures::Log2 => (p as f64).log2() as usize,
            MaxFeatures::Fraction(f) => (f * p as f64) as usize,
            MaxFeatures::Count(c) => c,
        };
        m.clamp(1, p.max(1))
    }

    pub(crate) fn from_param(v: Option<&ParamValue>, default: MaxFeatures) -> Result<MaxFeatures> {
        Ok(match v {
            None => default,
            Some(ParamValue::None) => MaxFeatures::All,
            Some(ParamValue::Text(s)) if s == "sqrt" || s == "auto" => MaxFeatures::Sqrt,
            Some(ParamValue::Text(s)) if s == "log2" => MaxFeatures::Log2,
            Some(ParamValue::Float(f)) if *f > 0.0 && *f <= 1.0 => MaxFeatures::Fraction(*f),
            Some(ParamValue::Int(c)) if *c >= 1 => MaxFeatures::Count(*c as usize),
            Some(v) => {
                return Err(Error::Validation(format!(
                    "max_features = {v}: expected None, sqrt, log2, a fraction or a count"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure, bounded by [`MAX_DEPTH_CAP`].
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            criterion: Criterion::SquaredError,
        }
    }
}

impl TreeParams {
    /// Reads the shared tree keys; `criterion` and `max_features` fall back
    /// to `base`.
    pub(crate) fn from_params(p: &Params, base: TreeParams) -> Result<TreeParams> {
        let criterion = match p.text("criterion") {
            None => base.criterion,
            Some("gini") => Criterion::Gini,
            Some("entropy") => Criterion::Entropy,
            Some("squared_error") => Criterion::SquaredError,
            Some(c) => return Err(Error::Validation(format!("unknown criterion {c:?}"))),
        };
        let tp = TreeParams {
            max_depth: p.opt_usize_or("max_depth", base.max_depth)?,
            min_samples_split: p.usize_or("min_samples_split", base.min_samples_split)?,
            min_samples_leaf: p.usize_or("min_samples_leaf", base.min_samples_leaf)?,
            max_features: MaxFeatures::from_param(p.get("max_features"), base.max_features)?,
            criterion,
        };
        if tp.min_samples_split < 2 || tp.min_samples_leaf < 1 {
            return Err(Error::Validation(
                "min_samples_split must be at least 2 and min_samples_leaf at least 1".into(),
            ));
        }
        Ok(tp)
    }

    fn depth_limit(&self) -> usize {
        self.max_depth.unwrap_or(MAX_DEPTH_CAP).min(MAX_DEPTH_CAP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf `x` falls into.
    pub fn apply(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> &[f64] {
        match &self.nodes[self.apply(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("apply returns a leaf"),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Features used by at least one split, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub(crate) fn set_leaf(&mut self, i: usize, value: Vec<f64>) {
        if let Node::Leaf { value: v } = &mut self.nodes[i] {
            *v = value;
        }
    }
}

/// Training signal a tree is grown on.
pub(crate) enum Targets<'a> {
    Classes { y: &'a [usize], k: usize },
    Values(&'a [f64]),
    Gradients { g: &'a [f64], h: &'a [f64] },
}

impl Targets<'_> {
    fn width(&self) -> usize {
        match self {
            Targets::Classes { k, .. } => *k,
            _ => 3,
        }
    }

    fn add(&self, stats: &mut [f64], i: usize, w: f64) {
        match self {
            Targets::Classes { y, .. } => stats[y[i]] += w,
            Targets::Values(y) => {
                stats[0] += w;
                stats[1] += w * y[i];
                stats[2] += w * y[i] * y[i];
            }
            Targets::Gradients { g, h } => {
                stats[0] += w;
                stats[1] += w * g[i];
                stats[2] += w * h[i];
            }
        }
    }
}

impl Criterion {
    /// Node score; a split's gain is score(L) + score(R) − score(parent).
    fn score(&self, s: &[f64]) -> f64 {
        match self {
            Criterion::Gini => {
                let w: f64 = s.iter().sum();
                if w > 0.0 {
                    s.iter().map(|c| c * c).sum::<f64>() / w
                } else {
                    0.0
                }
            }
            Criterion::Entropy => {
                let w: f64 = s.iter().sum();
                s.iter().filter(|&&c| c > 0.0).map(|&c| c * (c / w).ln()).sum()
            }
            Criterion::SquaredError => {
                if s[0] > 0.0 {
                    s[1] * s[1] / s[0]
                } else {
                    0.0
                }
            }
            Criterion::SecondOrder { lambda, .. } => s[1] * s[1] / (s[2] + lambda),
        }
    }

    fn leaf(&self, s: &[f64]) -> Vec<f64> {
        match self {
            Criterion::Gini | Criterion::Entropy => {
                let w: f64 = s.iter().sum();
                s.iter().map(|c| if w > 0.0 { c / w } else { 0.0 }).collect()
            }
            Criterion::SquaredError => vec![if s[0] > 0.0 { s[1] / s[0] } else { 0.0 }],
            Criterion::SecondOrder { lambda, .. } => vec![-s[1] / (s[2] + lambda)],
        }
    }

    fn is_pure(&self, s: &[f64]) -> bool {
        match self {
            Criterion::Gini | Criterion::Entropy => s.iter().filter(|&&c| c > 0.0).count() <= 1,
            _ => false,
        }
    }

    fn children_ok(&self, l: &[f64], r: &[f64]) -> bool {
        match self {
            Criterion::SecondOrder { min_child_weight, .. } => {
                l[2] >= *min_child_weight && r[2] >= *min_child_weight
            }
            _ => true,
        }
    }

    fn matches(&self, t: &Targets) -> bool {
        matches!(
            (self, t),
            (Criterion::Gini | Criterion::Entropy, Targets::Classes { .. })
                | (Criterion::SquaredError, Targets::Values(_))
                | (Criterion::SecondOrder { .. }, Targets::Gradients { .. })
        )
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    targets: &'a Targets<'a>,
    weights: &'a [f64],
    params: &'a TreeParams,
    /// Per allowed feature, row indices sorted by value; node segments are
    /// contiguous and aligned across features.
    orders: Vec<(usize, Vec<u32>)>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    m_try: usize,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
}

struct Best {
    gain: f64,
    slot: usize,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn stats(&self, start: usize, end: usize) -> Vec<f64> {
        let mut s = vec![0.0; self.targets.width()];
        for &i in &self.orders[0].1[start..end] {
            self.targets.add(&mut s, i as usize, self.weights[i as usize]);
        }
        s
    }

    fn build(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let parent = self.stats(start, end);
        self.nodes.push(Node::Leaf {
            value: self.params.criterion.leaf(&parent),
        });
        let n = end - start;
        let p = self.params;
        if depth >= p.depth_limit()
            || n < p.min_samples_split
            || n < 2 * p.min_samples_leaf
            || p.criterion.is_pure(&parent)
        {
            return id;
        }
        let Some(best) = self.best_split(start, end, &parent) else {
            return id;
        };
        let n_left = self.partition(start, end, &best);
        let left = self.build(start, start + n_left, depth + 1);
        let right = self.build(start + n_left, end, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, start: usize, end: usize, parent: &[f64]) -> Option<Best> {
        let crit = self.params.criterion;
        let msl = self.params.min_samples_leaf;
        let n_allowed = self.orders.len();
        let mut slots: Vec<usize> = if self.m_try < n_allowed {
            sample(self.rng, n_allowed, self.m_try).into_vec()
        } else {
            (0..n_allowed).collect()
        };
        slots.sort_unstable();

        let s_parent = crit.score(parent);
        let mut best: Option<Best> = None;
        let mut left = vec![0.0; parent.len()];
        let mut right = vec![0.0; parent.len()];
        for slot in slots {
            let (feature, order) = &self.orders[slot];
            let seg = &order[start..end];
            left.iter_mut().for_each(|v| *v = 0.0);
            for (pos, pair) in seg.windows(2).enumerate() {
                let i = pair[0] as usize;
                self.targets.add(&mut left, i, self.weights[i]);
                let n_left = pos + 1;
                if n_left < msl || seg.len() - n_left < msl {
                    continue;
                }
                let a = self.x.get(i, *feature);
                let b = self.x.get(pair[1] as usize, *feature);
                if a >= b {
                    continue;
                }
                for ((r, p), l) in right.iter_mut().zip(parent).zip(&left) {
                    *r = p - l;
                }
                if !crit.children_ok(&left, &right) {
                    continue;
                }
                let (sl, sr) = (crit.score(&left), crit.score(&right));
                let gain = sl + sr - s_parent;
                let floor = 1e-12 * (sl.abs() + sr.abs() + s_parent.abs());
                if gain > floor && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = a + (b - a) / 2.0;
                    best = Some(Best {
                        gain,
                        slot,
                        feature: *feature,
                        threshold: if mid < b { mid } else { a },
                    });
                }
            }
        }
        best
    }

    /// Stable partition of every feature's segment; returns the left count.
    fn partition(&mut self, start: usize, end: usize, best: &Best) -> usize {
        let order = &self.orders[best.slot].1;
        for &i in &order[start..end] {
            self.goes_left[i as usize] = self.x.get(i as usize, best.feature) <= best.threshold;
        }
        let mut n_left = 0;
        for (_, order) in self.orders.iter_mut() {
            let seg = &mut order[start..end];
            self.scratch.clear();
            let mut w = 0;
            for k in 0..seg.len() {
                let i = seg[k];
                if self.goes_left[i as usize] {
                    seg[w] = i;
                    w += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            seg[w..].copy_from_slice(&self.scratch);
            n_left = w;
        }
        n_left
    }
}

/// Grows one tree. Rows with zero weight are left out; `features` limits
/// the candidate columns (all when `None`).
pub(crate) fn grow(
    x: &Matrix,
    targets: &Targets,
    weights: &[f64],
    params: &TreeParams,
    features: Option<&[usize]>,
    rng: &mut Rng,
) -> Tree {
    debug_assert!(params.criterion.matches(targets));
    let rows: Vec<u32> = (0..x.rows() as u32).filter(|&i| weights[i as usize] > 0.0).collect();
    let allowed: Vec<usize> = features.map_or_else(|| (0..x.cols()).collect(), <[usize]>::to_vec);
    let mut orders: Vec<(usize, Vec<u32>)> = allowed
        .iter()
        .map(|&f| {
            let mut o = rows.clone();
            o.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
            (f, o)
        })
        .collect();
    if orders.is_empty() {
        // No candidate columns: keep the row list so the root gets a leaf.
        orders.push((usize::MAX, rows.clone()));
    }
    let no_features = allowed.is_empty();
    let m_try = if no_features { 0 } else { params.max_features.resolve(allowed.len()) };
    let mut b = Builder {
        x,
        targets,
        weights,
        params,
        orders,
        goes_left: vec![false; x.rows()],
        scratch: Vec::with_capacity(rows.len()),
        m_try,
        rng,
        nodes: Vec::new(),
    };
    if no_features {
        let s = b.stats(0, rows.len());
        return Tree {
            nodes: vec![Node::Leaf {
                value: params.criterion.leaf(&s),
            }],
        };
    }
    b.build(0, rows.len(), 0);
    Tree { nodes: b.nodes }
}

/// Fits a single CART tree for `task`. Classification uses the Gini or
/// entropy criterion, regression squared error; the leaf holds class
/// probabilities or the mean target.
pub fn fit_cart(x: &Matrix, y: &[f64], task: Task, params: &TreeParams, seed: u64) -> Result<Tree> {
    if x.rows() == 0 {
        return Err(Error::Empty("no training rows for a tree".into()));
    }
    let params = task_criterion(params, task)?;
    let weights = vec![1.0; x.rows()];
    let mut rng = rng::stream(seed, &[rng::TREE, 0]);
    Ok(match task.n_classes() {
        Some(k) => {
            let y = class_targets(y, k)?;
            grow(x, &Targets::Classes { y: &y, k }, &weights, &params, None, &mut rng)
        }
        None => grow(x, &Targets::Values(y), &weights, &params, None, &mut rng),
    })
}

/// Swaps in the criterion family the task needs, keeping a compatible one.
pub(crate) fn task_criterion(params: &TreeParams, task: Task) -> Result<TreeParams> {
    let mut p = *params;
    p.criterion = match (task.is_classification(), params.criterion) {
        (true, c @ (Criterion::Gini | Criterion::Entropy)) => c,
        (true, Criterion::SquaredError) => Criterion::Gini,
        (false, Criterion::Gini) | (false, Criterion::SquaredError) => Criterion::SquaredError,
        (false, Criterion::Entropy) => {
            return Err(Error::Validation("entropy criterion needs a classification task".into()))
        }
        (_, c @ Criterion::SecondOrder { .. }) => c,
    };
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosting,
    SecondOrderBoosting,
}

/// A fitted forest or boosted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub kind: EnsembleKind,
    /// `None` for regression.
    pub n_classes: Option<usize>,
    pub trees: Vec<Tree>,
    /// Boosting: trees per stage (one per class for multinomial, else one).
    pub trees_per_stage: usize,
    pub learning_rate: f64,
    /// Boosting: initial raw score per output.
    pub init: Vec<f64>,
    pub seed: u64,
    /// Forest with bootstrap: out-of-bag misclassification rate or MSE.
    pub oob_error: Option<f64>,
    /// Boosting: training loss after the initial guess and after each stage.
    pub loss_trace: Vec<f64>,
}

impl TreeEnsemble {
    /// Boosting margin (pre-link) for one row.
    pub fn raw(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.init.clone();
        for stage in self.trees.chunks(self.trees_per_stage) {
            for (k, t) in stage.iter().enumerate() {
                f[k] += self.learning_rate * t.predict_row(x)[0];
            }
        }
        f
    }

    /// Class probabilities or the predicted value for one row.
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            EnsembleKind::RandomForest => {
                let mut acc = vec![0.0; self.trees[0].predict_row(x).len()];
                for t in &self.trees {
                    for (a, v) in acc.iter_mut().zip(t.predict_row(x)) {
                        *a += v;
                    }
                }
                let n = self.trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                acc
            }
            _ => link(self.n_classes, self.raw(x)),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Output {
        let rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect();
        match self.n_classes {
            None => Output::Regression(rows.into_iter().map(|r| r[0]).collect()),
            Some(k) => {
                let mut scores = Matrix::zeros(rows.len(), k);
                for (i, r) in rows.iter().enumerate() {
                    scores.row_mut(i).copy_from_slice(r);
                }
                Output::from_scores(scores)
            }
        }
    }
}

/// Maps a boosting margin to probabilities (classification) or a value.
pub(crate) fn link(n_classes: Option<usize>, mut raw: Vec<f64>) -> Vec<f64> {
    match n_classes {
        None => raw,
        Some(2) => {
            let p = sigmoid(raw[0]);
            vec![1.0 - p, p]
        }
        Some(_) => {
            softmax(&mut raw);
            raw
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn col(xs: &[f64]) -> Matrix {
        Matrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x = col(&[1.0, 2.0, 3.0]);
        let t = fit_cart(&x, &[1.0, 1.0, 1.0], Task::Binary, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![0.0, 1.0] }]);
    }

    #[test]
    fn step_function_splits_once_between_the_groups() {
        let xs = [0.1, 0.3, 0.45, 0.5, 0.55, 0.7, 0.9];
        let y: Vec<f64> = xs.iter().map(|&x| f64::from(u8::from(x > 0.5))).collect();
        let t = fit_cart(&col(&xs), &y, Task::Regression, &TreeParams::default(), 0).unwrap();
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold >= 0.5 && *threshold < 0.55),
            n => panic!("{n:?}"),
        }
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn depth_zero_is_a_single_leaf() {
        let p = TreeParams {
            max_depth: Some(0),
            ..TreeParams::default()
        };
        let t = fit_cart(&col(&[1.0, 2.0]), &[0.0, 4.0], Task::Regression, &p, 0).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![2.0] }]);
    }

    #[test]
    fn ties_prefer_the_lower_feature() {
        // Both columns separate the labels identically.
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = fit_cart(&x, &[0.0, 1.0], Task::Binary, &TreeParams::default(), 0).unwrap();
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = xs.iter().map(|&x| if x < 1.0 { 10.0 } else { 0.0 }).collect();
        let p = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let t = fit_cart(&col(&xs), &y, Task::Regression, &p, 0).unwrap();
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold > 2.0),
            n => panic!("{n:?}"),
        }
    }

    #[test]
    fn second_order_leaf_weight() {
        let x = col(&[0.0, 0.0]);
        let (g, h) = ([1.0, 2.0], [1.0, 1.0]);
        let p = TreeParams {
            criterion: Criterion::SecondOrder {
                lambda: 1.0,
                min_child_weight: 1.0,
            },
            ..TreeParams::default()
        };
        let mut r = rng::stream(0, &[]);
        let t = grow(&x, &Targets::Gradients { g: &g, h: &h }, &[1.0, 1.0], &p, None, &mut r);
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![-1.0] }]);
    }

    #[test]
    fn feature_subsampling_is_seeded() {
        let mut r = rng::stream(3, &[]);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..6).map(|_| r.random::<f64>()).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|v| v[0] + v[3]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let p = TreeParams {
            max_features: MaxFeatures::Sqrt,
            ..TreeParams::default()
        };
        let a = fit_cart(&x, &y, Task::Regression, &p, 9).unwrap();
        assert_eq!(a, fit_cart(&x, &y, Task::Regression, &p, 9).unwrap());
    }

    proptest! {
        #[test]
        fn fitted_tree_reproduces_distinct_training_points(
            pts in proptest::collection::btree_map(-1000i32..1000, -50.0f64..50.0, 1..40)
        ) {
            let xs: Vec<f64> = pts.keys().map(|&k| f64::from(k)).collect();
            let ys: Vec<f64> = pts.values().copied().collect();
            let x = col(&xs);
            let t = fit_cart(&x, &ys, Task::Regression, &TreeParams::default(), 0).unwrap();
            for (i, y) in ys.iter().enumerate() {
                prop_assert!((t.predict_row(x.row(i))[0] - y).abs() < 1e-9);
            }
        }

        #[test]
        fn thresholds_lie_between_observed_values(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 2..40),
            seed in 0u64..50,
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[1] > r[2]))).collect();
            let t = fit_cart(&x, &y, Task::Binary, &TreeParams::default(), seed).unwrap();
            for n in &t.nodes {
                if let Node::Split { feature, threshold, .. } = n {
                    let col = x.column(*feature);
                    prop_assert!(col.iter().any(|&v| v <= *threshold));
                    prop_assert!(col.iter().any(|&v| v > *threshold));
                }
            }
        }
    }
}
