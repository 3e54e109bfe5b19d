//! Held-out evaluation and its CSV / aligned-text renderings.

use serde::{Deserialize, Serialize};

use super::importance::ImportanceTable;
use super::metrics::{f1_score, mae, ConfusionMatrix, F1Mode, Metric};
use super::search::SearchResult;
use crate::error::Result;
use crate::features::{Dataset, Task};
use crate::ingest::EventKind;
use crate::learn::{Output, TrainedModel};

/// MAE restricted to one event kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindMae {
    pub kind: EventKind,
    pub n: usize,
    /// `None` when the subset is empty.
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub task: Task,
    pub model: String,
    pub n: usize,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub mae: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
    /// Absolute error split by event kind, on the task's target scale.
    pub by_kind: Vec<KindMae>,
}

/// Scores `model` on `data`. Classification reports AUC (when both
/// classes occur), F1 and the confusion matrix; every task reports the
/// per-kind absolute error of the point prediction.
pub fn evaluate(model: &TrainedModel, data: &Dataset, label: &str) -> Result<Evaluation> {
    let out = model.predict(data)?;
    let task = model.task;
    let y: Vec<f64> = data.rows.iter().map(|r| task.target(r.y)).collect();
    let point = out.point();
    let mut ev = Evaluation {
        task,
        model: label.to_string(),
        n: data.len(),
        auc: None,
        f1: None,
        accuracy: None,
        mae: None,
        confusion: None,
        by_kind: Vec::new(),
    };
    if data.is_empty() {
        return Ok(ev);
    }
    match &out {
        Output::Classification { scores, labels } => {
            let obs: Vec<usize> = y.iter().map(|&v| v as usize).collect();
            let cm = ConfusionMatrix::new(scores.cols(), &obs, labels)?;
            let mode = if scores.cols() == 2 { F1Mode::Binary } else { F1Mode::Weighted };
            ev.f1 = Some(f1_score(&cm, mode)?);
            ev.accuracy = Some(cm.accuracy());
            ev.auc = Metric::Auc.score(&out, &y).ok();
            ev.confusion = Some(cm);
        }
        Output::Regression(pred) => ev.mae = Some(mae(pred, &y)?),
    }
    for kind in [EventKind::Set, EventKind::Deployment] {
        let idx: Vec<usize> = (0..data.len()).filter(|&i| data.rows[i].kind == kind).collect();
        let sub_p: Vec<f64> = idx.iter().map(|&i| point[i]).collect();
        let sub_y: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        ev.by_kind.push(KindMae {
            kind,
            n: idx.len(),
            mae: mae(&sub_p, &sub_y).ok(),
        });
    }
    Ok(ev)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

fn kind_mae(ev: &Evaluation, kind: EventKind) -> Option<f64> {
    ev.by_kind.iter().find(|k| k.kind == kind).and_then(|k| k.mae)
}

/// Renders rows as columns padded to their widest cell.
pub fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    s += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        s += &line(r.iter().map(String::as_str).collect());
    }
    s
}

pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

const SCORE_HEADER: [&str; 10] = ["task", "model", "n", "auc", "f1", "accuracy", "mae", "mae_set", "mae_deployment", "n_set"];

fn score_rows(evals: &[Evaluation]) -> Vec<Vec<String>> {
    evals
        .iter()
        .map(|e| {
            vec![
                e.task.to_string(),
                e.model.clone(),
                e.n.to_string(),
                opt(e.auc),
                opt(e.f1),
                opt(e.accuracy),
                opt(e.mae),
                opt(kind_mae(e, EventKind::Set)),
                opt(kind_mae(e, EventKind::Deployment)),
                e.by_kind.iter().find(|k| k.kind == EventKind::Set).map_or(0, |k| k.n).to_string(),
            ]
        })
        .collect()
}

/// Score table: one row per evaluation.
pub fn scores_csv(evals: &[Evaluation]) -> String {
    to_csv(&SCORE_HEADER, &score_rows(evals))
}

pub fn scores_text(evals: &[Evaluation]) -> String {
    aligned(&SCORE_HEADER, &score_rows(evals))
}

fn confusion_rows(task: Task, cm: &ConfusionMatrix) -> (Vec<String>, Vec<Vec<String>>) {
    let names = task.class_names();
    let mut header = vec!["observed \\ predicted".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    let rows = (0..cm.k())
        .map(|o| {
            let mut r = vec![names[o].to_string()];
            r.extend((0..cm.k()).map(|p| cm.get(o, p).to_string()));
            r
        })
        .collect();
    (header, rows)
}

pub fn confusion_csv(task: Task, cm: &ConfusionMatrix) -> String {
    let (h, rows) = confusion_rows(task, cm);
    to_csv(&h.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
}

pub fn confusion_text(task: Task, cm: &ConfusionMatrix) -> String {
    let (h, rows) = confusion_rows(task, cm);
    aligned(&h.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
}

const SEARCH_HEADER: [&str; 6] = ["candidate", "params", "mean", "std", "folds", "error"];

fn search_rows(r: &SearchResult) -> Vec<Vec<String>> {
    r.candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let folds: Vec<String> = c.fold_scores.iter().map(|s| format!("{s:.4}")).collect();
            vec![
                format!("{i}{}", if i == r.best_index { "*" } else { "" }),
                c.params.to_string(),
                if c.mean.is_nan() { String::new() } else { format!("{:.4}", c.mean) },
                if c.std.is_nan() { String::new() } else { format!("{:.4}", c.std) },
                folds.join(" "),
                c.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

/// Search trace; the best candidate's index carries a `*`.
pub fn search_csv(r: &SearchResult) -> String {
    to_csv(&SEARCH_HEADER, &search_rows(r))
}

pub fn search_text(r: &SearchResult) -> String {
    aligned(&SEARCH_HEADER, &search_rows(r))
}

const IMPORTANCE_HEADER: [&str; 4] = ["rank", "feature", "importance", "std"];

fn importance_rows(t: &ImportanceTable, top: usize) -> Vec<Vec<String>> {
    t.entries
        .iter()
        .take(top)
        .enumerate()
        .map(|(i, e)| vec![(i + 1).to_string(), e.feature.clone(), format!("{:.5}", e.mean), format!("{:.5}", e.std)])
        .collect()
}

pub fn importance_csv(t: &ImportanceTable) -> String {
    to_csv(&IMPORTANCE_HEADER, &importance_rows(t, usize::MAX))
}

/// The ten most important features, one per line.
pub fn top_ten_text(t: &ImportanceTable, title: &str) -> String {
    format!(
        "Top ten most important features: {title}\n{}",
        aligned(&IMPORTANCE_HEADER, &importance_rows(t, 10))
    )
}
