//! Model zoo: baseline rules, penalized linear models, CART, random forests
//! and two gradient-boosting variants.

mod baseline;
mod boost;
mod forest;
pub mod linear;
mod model;
mod params;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{fit_baseline, BaselineModel, BaselineRule};
pub use boost::{fit_gbdt, BoostParams, BoostVariant};
pub use forest::{fit_forest, ForestParams};
pub use linear::{fit_linear, LinearModel, LinearParams};
pub use model::{design_matrix, fit_model, ModelBody, ModelKind, TrainedModel, MODEL_MAGIC};
pub use params::{default_grid_text, parse_grids, GridFile, HyperGrid, ParamValue, Params};
pub use tree::{fit_cart, Criterion, MaxFeatures, Tree, TreeEnsemble, TreeParams};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "matrix data length {} != {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    /// New matrix holding the given rows, in order.
    pub fn take_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix holding the given columns, in order.
    pub fn take_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Model output for a batch of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Output {
    Regression(Vec<f64>),
    /// `scores` is n × k (probabilities for fitted classifiers); `labels`
    /// are the predicted class indices.
    Classification { scores: Matrix, labels: Vec<usize> },
}

impl Output {
    pub fn len(&self) -> usize {
        match self {
            Output::Regression(v) => v.len(),
            Output::Classification { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-row point estimate: the value, or the predicted class index.
    pub fn point(&self) -> Vec<f64> {
        match self {
            Output::Regression(v) => v.clone(),
            Output::Classification { labels, .. } => labels.iter().map(|&c| c as f64).collect(),
        }
    }

    /// Builds a classification output labelled by argmax.
    pub fn from_scores(scores: Matrix) -> Output {
        let labels = predict_class(&scores);
        Output::Classification { scores, labels }
    }
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn predict_class(scores: &Matrix) -> Vec<usize> {
    (0..scores.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// In-place softmax of one row of logits.
pub(crate) fn softmax(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
}

/// Class indices from a target vector, validated against `k` classes.
pub(crate) fn class_targets(y: &[f64], k: usize) -> Result<Vec<usize>> {
    y.iter()
        .map(|&v| {
            let c = v as usize;
            if v >= 0.0 && v.fract() == 0.0 && c < k {
                Ok(c)
            } else {
                Err(Error::Validation(format!("class label {v} outside 0..{k}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn argmax_ties_go_low() {
        let m = Matrix::from_rows(&[vec![0.2, 0.2, 0.1], vec![0.1, 0.3, 0.3], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(predict_class(&m), vec![0, 1, 2]);
    }

    #[test]
    fn matrix_views() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.take_rows(&[2, 0]).as_slice(), &[5.0, 6.0, 1.0, 2.0]);
        assert_eq!(m.take_cols(&[1]).as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(m.column(0), vec![1.0, 3.0, 5.0]);
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn empty_input_predicts_nothing() {
        assert!(predict_class(&Matrix::zeros(0, 3)).is_empty());
    }

    proptest! {
        #[test]
        fn argmax_is_scale_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 1..20),
            scale in 0.001f64..1000.0,
        ) {
            let m = Matrix::from_rows(&rows).unwrap();
            let scaled = Matrix::from_rows(&rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(predict_class(&m), predict_class(&scaled));
        }
    }
}
