//! Reference predictors: trivial heuristics and a log-linear candidate ranker.

mod features;
mod heuristic;
mod loglinear;

pub use features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_NAMES};
pub use heuristic::{predict_heuristic, rank_heuristic, HeuristicKind};
pub use loglinear::{
    fit, objective, predict_loglinear, top1_accuracy, train_loglinear, EpochLog, Hyperparameters,
    Instance, LogLinearModel, TrainingLog,
};

use std::collections::BTreeMap;

use crate::corpus::EntityRef;
use crate::evalkit::PredictionRecord;
use crate::taskgen::{Query, Task, Variable};

/// Turns a candidate ranking into a prediction: the top entity for SV/MVS,
/// the top two distinct entities as `x1`, `x2` for TV (the single candidate
/// twice when there is only one).
pub(crate) fn assign_ranked(query: &Query, ranking: &[EntityRef]) -> PredictionRecord {
    let mut assignments = BTreeMap::new();
    match query.task {
        Task::Sv | Task::Mvs => {
            assignments.insert(Variable::X, ranking[0]);
        }
        Task::Tv => {
            assignments.insert(Variable::X1, ranking[0]);
            assignments.insert(Variable::X2, *ranking.get(1).unwrap_or(&ranking[0]));
        }
    }
    PredictionRecord {
        query_id: query.query_id.clone(),
        assignments,
    }
}
