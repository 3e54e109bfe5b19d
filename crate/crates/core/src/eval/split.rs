//! Stratified train/test allocation and k-fold partitions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::{Dataset, Split};
use crate::rng;

/// Splits rows into (train, test) index lists, stratified by event kind.
///
/// The test total is round(n·frac); strata get floor(n_s·frac) each and
/// the leftover goes to the largest fractional parts (earlier stratum wins
/// ties), so every stratum lands within one item of its exact share.
pub fn stratified_split(ds: &Dataset, test_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Validation(format!("test fraction must lie in (0, 1), got {test_frac}")));
    }
    let mut strata: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.rows.iter().enumerate() {
        strata.entry(r.kind.code()).or_default().push(i);
    }
    if let Some((kind, rows)) = strata.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::Validation(format!(
            "stratum {kind} has {} row(s); at least 2 are needed",
            rows.len()
        )));
    }
    let n = ds.len();
    let total = (n as f64 * test_frac).round() as usize;
    let exact: Vec<f64> = strata.values().map(|v| v.len() as f64 * test_frac).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let assigned: usize = quota.iter().sum();
    for &s in order.iter().take(total.saturating_sub(assigned)) {
        quota[s] += 1;
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (s, ((_, rows), q)) in strata.iter().zip(quota).enumerate() {
        let mut rows = rows.clone();
        rows.shuffle(&mut rng::stream(seed, &[rng::SPLIT, s as u64]));
        test.extend_from_slice(&rows[..q]);
        train.extend_from_slice(&rows[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Returns `ds` with every row tagged train or test.
pub fn assign_split(ds: &Dataset, test_frac: f64, seed: u64) -> Result<Dataset> {
    let (_, test) = stratified_split(ds, test_frac, seed)?;
    let mut out = ds.clone();
    out.rows.iter_mut().for_each(|r| r.split = Some(Split::Train));
    for i in test {
        out.rows[i].split = Some(Split::Test);
    }
    Ok(out)
}

/// Partitions 0..n into k folds whose sizes differ by at most one. With
/// labels, each class is shuffled and dealt round-robin in turn, so
/// per-fold class counts also differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64, stratify: Option<&[usize]>) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Validation(format!("k-fold needs k ≥ 2, got {k}")));
    }
    if k > n {
        return Err(Error::Validation(format!("{k} folds for {n} rows")));
    }
    let mut r = rng::stream(seed, &[rng::FOLD]);
    let deal: Vec<usize> = match stratify {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut r);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::Validation("stratification labels differ in length".into()));
            }
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &l) in labels.iter().enumerate() {
                by_class.entry(l).or_default().push(i);
            }
            let mut out = Vec::with_capacity(n);
            for (_, mut v) in by_class {
                v.shuffle(&mut r);
                out.extend(v);
            }
            out
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in deal.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
