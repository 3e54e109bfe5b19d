//! Metrics, data splitting, hyper-parameter search and feature importance.

mod importance;
mod metrics;
pub mod report;
mod search;
mod split;

pub use importance::{permutation_importance, Importance, ImportanceTable};
pub use metrics::{f1_score, mae, roc_auc, roc_auc_ovr_weighted, ConfusionMatrix, F1Mode, Metric};
pub use report::{evaluate, Evaluation, KindMae};
pub use search::{grid_search, CandidateResult, SearchConfig, SearchResult};
pub use split::{assign_split, kfold, stratified_split};
