//! Penalized linear models on standardized features.
//!
//! Both solvers minimize a mean loss plus
//! α·(ρ‖w‖₁ + (1−ρ)/2·‖w‖²) with the intercept unpenalized. Regression uses
//! Gram-matrix coordinate descent stopped on the duality gap; logistic and
//! multinomial models use FISTA with backtracking, stopped on the norm of
//! the proximal gradient mapping. The penalty strength α and the mixing ρ
//! (`l1_ratio`) are chosen by internal k-fold CV.

use serde::{Deserialize, Serialize};

use super::params::Params;
use super::{class_targets, sigmoid, softmax, Matrix, Output};
use crate::error::{Error, Result};
use crate::eval::kfold;
use crate::features::Task;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    Identity,
    Logistic,
    Multinomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// Candidate mixings; 0 is pure L2, 1 pure L1.
    pub l1_ratios: Vec<f64>,
    /// Fixed penalty strength; `None` searches a path by CV.
    pub alpha: Option<f64>,
    pub n_alphas: usize,
    /// Smallest path α as a fraction of the largest.
    pub alpha_min_ratio: f64,
    pub cv_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl LinearParams {
    pub fn for_task(task: Task) -> LinearParams {
        let classification = task.is_classification();
        LinearParams {
            l1_ratios: vec![if classification { 0.0 } else { 0.5 }],
            alpha: None,
            n_alphas: if classification { 10 } else { 30 },
            alpha_min_ratio: if classification { 1e-4 } else { 1e-3 },
            cv_folds: 5,
            tol: 1e-4,
            max_iter: if classification { 5000 } else { 10_000 },
        }
    }

    pub fn from_params(p: &Params, task: Task) -> Result<LinearParams> {
        p.check_keys("linear", &["l1_ratio", "alpha", "n_alphas", "cv", "tol", "max_iter"])?;
        let base = LinearParams::for_task(task);
        let lp = LinearParams {
            l1_ratios: p.f64_list_or("l1_ratio", &base.l1_ratios)?,
            alpha: p.opt_f64_or("alpha", base.alpha)?,
            n_alphas: p.usize_or("n_alphas", base.n_alphas)?,
            alpha_min_ratio: base.alpha_min_ratio,
            cv_folds: p.usize_or("cv", base.cv_folds)?,
            tol: p.f64_or("tol", base.tol)?,
            max_iter: p.usize_or("max_iter", base.max_iter)?,
        };
        lp.validate()?;
        Ok(lp)
    }

    fn validate(&self) -> Result<()> {
        if self.l1_ratios.is_empty() || self.l1_ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Validation("l1_ratio values must lie in [0, 1]".into()));
        }
        if self.alpha.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::Validation("alpha must be non-negative".into()));
        }
        if self.n_alphas == 0 || self.cv_folds < 2 || !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Validation("n_alphas ≥ 1, cv ≥ 2, tol > 0 and max_iter ≥ 1 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub link: Link,
    /// Standardization fitted on the training rows.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// One row of weights per output, in standardized units.
    pub weights: Matrix,
    pub intercepts: Vec<f64>,
    pub alpha: f64,
    pub l1_ratio: f64,
}

impl LinearModel {
    fn margins(&self, x: &[f64]) -> Vec<f64> {
        (0..self.weights.rows())
            .map(|k| {
                let w = self.weights.row(k);
                self.intercepts[k]
                    + x.iter()
                        .zip(&self.means)
                        .zip(&self.scales)
                        .zip(w)
                        .map(|(((v, m), s), w)| w * (v - m) / s)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Output {
        let rows = (0..x.rows()).map(|i| self.margins(x.row(i)));
        match self.link {
            Link::Identity => Output::Regression(rows.map(|r| r[0]).collect()),
            Link::Logistic | Link::Multinomial => {
                let k = if self.link == Link::Logistic { 2 } else { self.weights.rows() };
                let mut scores = Matrix::zeros(x.rows(), k);
                for (i, mut r) in rows.enumerate() {
                    if self.link == Link::Logistic {
                        let p = sigmoid(r[0]);
                        r = vec![1.0 - p, p];
                    } else {
                        softmax(&mut r);
                    }
                    scores.row_mut(i).copy_from_slice(&r);
                }
                Output::from_scores(scores)
            }
        }
    }
}

struct Standardizer {
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardizer {
    /// Constant columns keep scale 1 so they map to zero.
    fn fit(x: &Matrix) -> Standardizer {
        let n = x.rows() as f64;
        let (means, scales) = (0..x.cols())
            .map(|j| {
                let c = x.column(j);
                let m = c.iter().sum::<f64>() / n;
                let var = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                (m, if var > 0.0 { var.sqrt() } else { 1.0 })
            })
            .unzip();
        Standardizer { means, scales }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut z = x.clone();
        for i in 0..z.rows() {
            for ((v, m), s) in z.row_mut(i).iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        z
    }
}

/// Result of one penalized solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    /// Final duality gap (coordinate descent) or gradient-mapping norm.
    pub measure: f64,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Precomputed XᵀX, Xᵀy and yᵀy for coordinate descent.
struct Gram {
    p: usize,
    n: f64,
    g: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
}

impl Gram {
    fn new(x: &Matrix, y: &[f64]) -> Gram {
        let p = x.cols();
        let mut g = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        for i in 0..x.rows() {
            let r = x.row(i);
            for a in 0..p {
                xty[a] += r[a] * y[i];
                for b in a..p {
                    g[a * p + b] += r[a] * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        Gram {
            p,
            n: x.rows() as f64,
            g,
            xty,
            yty: y.iter().map(|v| v * v).sum(),
        }
    }

    /// Coordinate descent without intercept on
    /// 1/(2n)‖y − Xw‖² + α(ρ‖w‖₁ + (1−ρ)/2‖w‖²).
    fn solve(&self, alpha: f64, rho: f64, tol: f64, max_iter: usize, mut w: Vec<f64>) -> Solution {
        let p = self.p;
        let l1 = alpha * rho * self.n;
        let l2 = alpha * (1.0 - rho) * self.n;
        let mut q: Vec<f64> = (0..p).map(|a| (0..p).map(|b| self.g[a * p + b] * w[b]).sum()).collect();
        let gap_tol = tol * self.yty.max(f64::MIN_POSITIVE);
        let mut gap = f64::INFINITY;
        for iter in 1..=max_iter {
            let (mut d_max, mut w_max) = (0.0f64, 0.0f64);
            for j in 0..p {
                let gjj = self.g[j * p + j];
                if gjj == 0.0 {
                    continue;
                }
                let old = w[j];
                let z = self.xty[j] - (q[j] - gjj * old);
                let new = soft(z, l1) / (gjj + l2);
                if new != old {
                    let d = new - old;
                    for (a, qa) in q.iter_mut().enumerate() {
                        *qa += self.g[a * p + j] * d;
                    }
                    w[j] = new;
                    d_max = d_max.max(d.abs());
                }
                w_max = w_max.max(new.abs());
            }
            if w_max == 0.0 || d_max / w_max < tol || iter == max_iter {
                gap = self.gap(&w, &q, l1, l2);
                if gap <= gap_tol || (l1 == 0.0 && d_max <= tol * w_max.max(1e-300)) {
                    return Solution {
                        weights: w,
                        intercepts: Vec::new(),
                        n_iter: iter,
                        converged: true,
                        measure: gap,
                    };
                }
            }
        }
        Solution {
            weights: w,
            intercepts: Vec::new(),
            n_iter: max_iter,
            converged: false,
            measure: gap,
        }
    }

    fn gap(&self, w: &[f64], q: &[f64], l1: f64, l2: f64) -> f64 {
        let wxty: f64 = w.iter().zip(&self.xty).map(|(a, b)| a * b).sum();
        let wq: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
        let r_norm2 = (self.yty - 2.0 * wxty + wq).max(0.0);
        let r_y = self.yty - wxty;
        let w_norm2: f64 = w.iter().map(|v| v * v).sum();
        let l1_norm: f64 = w.iter().map(|v| v.abs()).sum();
        let dual_norm = (0..self.p)
            .map(|j| (self.xty[j] - q[j] - l2 * w[j]).abs())
            .fold(0.0, f64::max);
        let c = if l1 > 0.0 && dual_norm > l1 { l1 / dual_norm } else { 1.0 };
        let a_norm2 = r_norm2 * c * c;
        0.5 * (r_norm2 + a_norm2) + l1 * l1_norm - c * r_y + 0.5 * l2 * (1.0 + c * c) * w_norm2
    }
}

/// Elastic net by coordinate descent, no intercept:
/// minimizes 1/(2n)‖y − Xw‖² + α(ρ‖w‖₁ + (1−ρ)/2‖w‖²).
pub fn elastic_net_cd(x: &Matrix, y: &[f64], alpha: f64, l1_ratio: f64, tol: f64, max_iter: usize) -> Solution {
    Gram::new(x, y).solve(alpha, l1_ratio, tol, max_iter, vec![0.0; x.cols()])
}

/// Smooth part of the penalized logistic objective and its gradient.
///
/// `theta` holds the k weight rows (k = 1 for binary, else one per class)
/// followed by the k intercepts. The value is the mean log-loss plus
/// α(1−ρ)/2‖W‖².
pub fn logistic_objective(x: &Matrix, y: &[usize], k: usize, theta: &[f64], alpha: f64, l1_ratio: f64) -> (f64, Vec<f64>) {
    let (n, p) = (x.rows(), x.cols());
    let mut grad = vec![0.0; theta.len()];
    let (w, b) = theta.split_at(k * p);
    let l2 = alpha * (1.0 - l1_ratio);
    let mut loss = 0.0;
    let mut z = vec![0.0; k];
    for i in 0..n {
        let r = x.row(i);
        for c in 0..k {
            z[c] = b[c] + w[c * p..(c + 1) * p].iter().zip(r).map(|(a, v)| a * v).sum::<f64>();
        }
        if k == 1 {
            let zi = z[0];
            let yi = y[i] as f64;
            loss += if zi > 0.0 { zi + (-zi).exp().ln_1p() } else { zi.exp().ln_1p() } - yi * zi;
            z[0] = sigmoid(zi) - yi;
        } else {
            let mx = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + z.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            loss += lse - z[y[i]];
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = (*zc - lse).exp() - f64::from(u8::from(c == y[i]));
            }
        }
        for c in 0..k {
            let d = z[c];
            for (g, v) in grad[c * p..(c + 1) * p].iter_mut().zip(r) {
                *g += d * v;
            }
            grad[k * p + c] += d;
        }
    }
    let nf = n as f64;
    grad.iter_mut().for_each(|g| *g /= nf);
    let mut value = loss / nf;
    for (g, wv) in grad.iter_mut().zip(w) {
        *g += l2 * wv;
        value += 0.5 * l2 * wv * wv;
    }
    (value, grad)
}

/// FISTA with backtracking and restart for the penalized logistic
/// objective; `theta` is the warm start in [`logistic_objective`] layout.
fn fista(x: &Matrix, y: &[usize], k: usize, alpha: f64, rho: f64, tol: f64, max_iter: usize, theta: Vec<f64>) -> Solution {
    let wlen = k * x.cols();
    let l1 = alpha * rho;
    let prox = |v: &mut [f64], step: f64| {
        for w in v[..wlen].iter_mut() {
            *w = soft(*w, l1 * step);
        }
    };
    let penalty = |v: &[f64]| l1 * v[..wlen].iter().map(|w| w.abs()).sum::<f64>();
    let mut lip = 1.0f64;
    let mut xk = theta;
    let mut fx = logistic_objective(x, y, k, &xk, alpha, rho).0 + penalty(&xk);
    let mut yk = xk.clone();
    let mut t = 1.0f64;
    let mut measure = f64::INFINITY;
    for iter in 1..=max_iter {
        let (fy, gy) = logistic_objective(x, y, k, &yk, alpha, rho);
        let (z, fz_smooth) = loop {
            let mut z: Vec<f64> = yk.iter().zip(&gy).map(|(a, g)| a - g / lip).collect();
            prox(&mut z, 1.0 / lip);
            let fz = logistic_objective(x, y, k, &z, alpha, rho).0;
            let mut quad = fy;
            for ((zi, yi), gi) in z.iter().zip(&yk).zip(&gy) {
                let d = zi - yi;
                quad += gi * d + 0.5 * lip * d * d;
            }
            if fz <= quad + 1e-12 * fz.abs() || lip > 1e12 {
                break (z, fz);
            }
            lip *= 2.0;
        };
        measure = lip * z.iter().zip(&yk).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let fz = fz_smooth + penalty(&z);
        if measure <= tol {
            return Solution {
                weights: z[..wlen].to_vec(),
                intercepts: z[wlen..].to_vec(),
                n_iter: iter,
                converged: true,
                measure,
            };
        }
        if fz > fx {
            // Momentum overshot: restart from the last accepted point.
            t = 1.0;
            yk = xk.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        yk = z.iter().zip(&xk).map(|(a, b)| a + beta * (a - b)).collect();
        xk = z;
        fx = fz;
        t = t_next;
    }
    Solution {
        weights: xk[..wlen].to_vec(),
        intercepts: xk[wlen..].to_vec(),
        n_iter: max_iter,
        converged: false,
        measure,
    }
}

/// The family-specific solver behind [`fit_linear`].
enum Problem {
    Regression(Vec<f64>),
    Classes(Vec<usize>, usize),
}

impl Problem {
    fn outputs(&self) -> usize {
        match self {
            Problem::Regression(_) => 1,
            Problem::Classes(_, k) => {
                if *k == 2 {
                    1
                } else {
                    *k
                }
            }
        }
    }

    fn subset(&self, idx: &[usize]) -> Problem {
        match self {
            Problem::Regression(y) => Problem::Regression(idx.iter().map(|&i| y[i]).collect()),
            Problem::Classes(y, k) => Problem::Classes(idx.iter().map(|&i| y[i]).collect(), *k),
        }
    }

    /// Largest useful α: the smallest that zeroes every weight when ρ > 0.
    fn alpha_max(&self, z: &Matrix, rho: f64) -> f64 {
        let n = z.rows() as f64;
        let m = self.outputs();
        let resid: Vec<Vec<f64>> = match self {
            Problem::Regression(y) => {
                let mean = y.iter().sum::<f64>() / n;
                vec![y.iter().map(|v| v - mean).collect()]
            }
            Problem::Classes(y, k) => {
                let classes: Vec<usize> = if m == 1 { vec![1] } else { (0..*k).collect() };
                classes
                    .iter()
                    .map(|&c| {
                        let ind: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v == c))).collect();
                        let mean = ind.iter().sum::<f64>() / n;
                        ind.iter().map(|v| v - mean).collect()
                    })
                    .collect()
            }
        };
        let top = resid
            .iter()
            .flat_map(|r| (0..z.cols()).map(move |j| (0..z.rows()).map(|i| z.get(i, j) * r[i]).sum::<f64>().abs()))
            .fold(0.0, f64::max);
        let a = top / (n * rho.max(1e-3));
        if a > 0.0 {
            a
        } else {
            1.0
        }
    }

    /// Solves along a descending α path with warm starts.
    fn path(&self, z: &Matrix, alphas: &[f64], rho: f64, params: &LinearParams) -> Vec<Solution> {
        let p = z.cols();
        match self {
            Problem::Regression(y) => {
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                let yc: Vec<f64> = y.iter().map(|v| v - mean).collect();
                let gram = Gram::new(z, &yc);
                let mut w = vec![0.0; p];
                alphas
                    .iter()
                    .map(|&a| {
                        let mut s = gram.solve(a, rho, params.tol, params.max_iter, w.clone());
                        w.clone_from(&s.weights);
                        s.intercepts = vec![mean];
                        s
                    })
                    .collect()
            }
            Problem::Classes(y, k) => {
                let m = self.outputs();
                let mut theta = vec![0.0; m * (p + 1)];
                alphas
                    .iter()
                    .map(|&a| {
                        let s = fista(z, y, if *k == 2 { 1 } else { *k }, a, rho, params.tol, params.max_iter, theta.clone());
                        theta = [s.weights.clone(), s.intercepts.clone()].concat();
                        s
                    })
                    .collect()
            }
        }
    }

    /// Held-out loss: mean squared error or mean log-loss.
    fn score(&self, z: &Matrix, s: &Solution) -> f64 {
        match self {
            Problem::Regression(y) => {
                let p = z.cols();
                let mut total = 0.0;
                for (i, yi) in y.iter().enumerate() {
                    let f = s.intercepts[0] + (0..p).map(|j| z.get(i, j) * s.weights[j]).sum::<f64>();
                    total += (yi - f) * (yi - f);
                }
                total / y.len() as f64
            }
            Problem::Classes(y, k) => {
                let kk = if *k == 2 { 1 } else { *k };
                let theta = [s.weights.clone(), s.intercepts.clone()].concat();
                logistic_objective(z, y, kk, &theta, 0.0, 0.0).0
            }
        }
    }

    fn stratify(&self) -> Option<Vec<usize>> {
        match self {
            Problem::Regression(_) => None,
            Problem::Classes(y, _) => Some(y.clone()),
        }
    }
}

fn alpha_grid(max: f64, params: &LinearParams) -> Vec<f64> {
    let n = params.n_alphas;
    if n == 1 {
        return vec![max];
    }
    let ratio = params.alpha_min_ratio;
    (0..n)
        .map(|i| max * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Fits a penalized linear model: identity link for regression, logistic
/// for binary and multinomial for ternary tasks. Candidates (ρ, α) are
/// scored by k-fold CV on the training rows; ties keep the earlier ρ and
/// the larger α.
pub fn fit_linear(x: &Matrix, y: &[f64], task: Task, params: &LinearParams, seed: u64) -> Result<LinearModel> {
    params.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("no training rows for a linear model".into()));
    }
    let problem = match task.n_classes() {
        None => Problem::Regression(y.to_vec()),
        Some(k) => Problem::Classes(class_targets(y, k)?, k),
    };
    let std = Standardizer::fit(x);
    let z = std.apply(x);

    let paths: Vec<(f64, Vec<f64>)> = params
        .l1_ratios
        .iter()
        .map(|&rho| {
            let alphas = match params.alpha {
                Some(a) => vec![a],
                None => alpha_grid(problem.alpha_max(&z, rho), params),
            };
            (rho, alphas)
        })
        .collect();

    let n_candidates: usize = paths.iter().map(|(_, a)| a.len()).sum();
    let (rho, alpha) = if n_candidates == 1 || n < 2 {
        (paths[0].0, paths[0].1[0])
    } else {
        let folds = kfold(n, params.cv_folds.min(n), rng::derive(seed, &[rng::LINEAR_CV]), problem.stratify().as_deref())?;
        let mut best: Option<(f64, f64, f64)> = None;
        for (rho, alphas) in &paths {
            let mut loss = vec![0.0; alphas.len()];
            for held in &folds {
                let mut is_held = vec![false; n];
                held.iter().for_each(|&i| is_held[i] = true);
                let train: Vec<usize> = (0..n).filter(|&i| !is_held[i]).collect();
                let xt = x.take_rows(&train);
                let st = Standardizer::fit(&xt);
                let sols = problem.subset(&train).path(&st.apply(&xt), alphas, *rho, params);
                let zh = st.apply(&x.take_rows(held));
                let ph = problem.subset(held);
                for (l, s) in loss.iter_mut().zip(&sols) {
                    *l += ph.score(&zh, s) / folds.len() as f64;
                }
            }
            for (a, l) in alphas.iter().zip(loss) {
                if best.is_none_or(|(_, _, b)| l < b) {
                    best = Some((*rho, *a, l));
                }
            }
        }
        let (rho, alpha, _) = best.expect("at least one candidate");
        (rho, alpha)
    };

    // Refit on all rows, walking the path down to the chosen α for a warm start.
    let alphas: Vec<f64> = paths
        .iter()
        .find(|(r, _)| *r == rho)
        .map(|(_, a)| a.iter().copied().filter(|&v| v >= alpha).collect())
        .expect("chosen ratio is on the grid");
    let sol = problem.path(&z, &alphas, rho, params).pop().expect("non-empty path");
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.n_iter,
            measure: match problem {
                Problem::Regression(_) => "duality gap",
                Problem::Classes(..) => "gradient-mapping norm",
            },
            value: sol.measure,
        });
    }
    let m = problem.outputs();
    Ok(LinearModel {
        link: match task.n_classes() {
            None => Link::Identity,
            Some(2) => Link::Logistic,
            Some(_) => Link::Multinomial,
        },
        means: std.means,
        scales: std.scales,
        weights: Matrix::new(m, x.cols(), sol.weights)?,
        intercepts: sol.intercepts,
        alpha,
        l1_ratio: rho,
    })
}
