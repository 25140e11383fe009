//! Prediction scoring and error-analysis worksheets.
//!
//! SV and MVS are scored by accuracy, `C_r / C_t`, where every gold query
//! counts in `C_t` whether or not it was predicted. TV is scored by
//! micro-averaged precision `C_r / C_a`, recall `C_r / C_g` and their
//! harmonic mean, with correctness checked per variable: a predicted `x1`
//! is right only if it equals the gold `x1`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Corpus, DialogueKey, EntityRef};
use crate::datasplit::Split;
use crate::taskgen::{Query, Task, Variable};
use crate::{jsonl, rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub assignments: BTreeMap<Variable, EntityRef>,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let records: Vec<PredictionRecord> = jsonl::read(path)?;
    for (i, r) in records.iter().enumerate() {
        if r.assignments.is_empty() || r.assignments.len() > 2 {
            return Err(Error::malformed(
                path,
                format!("line {}", i + 1),
                format!(
                    "prediction for {} must assign one or two variables",
                    r.query_id
                ),
            ));
        }
    }
    Ok(records)
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    jsonl::write(path, records)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Right predictions.
    pub c_r: usize,
    /// Gold queries.
    pub c_t: usize,
    /// Actual predictions (variable assignments).
    pub c_a: usize,
    /// Gold answers (variable assignments).
    pub c_g: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metrics {
    F1 {
        precision: f64,
        recall: f64,
        f1: f64,
    },
    Accuracy {
        accuracy: f64,
    },
}

impl Metrics {
    /// Accuracy for SV/MVS, F1 for TV.
    pub fn headline(&self) -> f64 {
        match *self {
            Metrics::Accuracy { accuracy } => accuracy,
            Metrics::F1 { f1, .. } => f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub query_id: String,
    /// Every gold variable right and nothing extra predicted.
    pub correct: bool,
    pub right: usize,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub split: Option<Split>,
    pub n_queries: usize,
    pub metrics: Metrics,
    pub counters: Counters,
    pub verdicts: Vec<QueryVerdict>,
}

impl EvalReport {
    pub fn wrong(&self) -> impl Iterator<Item = &QueryVerdict> {
        self.verdicts.iter().filter(|v| !v.correct)
    }
}

pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn index_predictions<'p>(
    gold: &[Query],
    preds: &'p [PredictionRecord],
) -> Result<HashMap<&'p str, &'p PredictionRecord>> {
    let by_id: HashMap<&str, &Query> = gold.iter().map(|q| (q.query_id.as_str(), q)).collect();
    let mut out = HashMap::with_capacity(preds.len());
    for p in preds {
        let query = by_id
            .get(p.query_id.as_str())
            .ok_or_else(|| Error::UnknownQueryId(p.query_id.clone()))?;
        if let Some(v) = p.assignments.keys().find(|v| !query.task.allows(**v)) {
            return Err(Error::IllegalVariable {
                query_id: p.query_id.clone(),
                task: query.task.to_string(),
                variable: v.to_string(),
            });
        }
        if out.insert(p.query_id.as_str(), p).is_some() {
            return Err(Error::DuplicatePrediction(p.query_id.clone()));
        }
    }
    Ok(out)
}

fn verdicts(gold: &[Query], preds: &[PredictionRecord]) -> Result<(Vec<QueryVerdict>, Counters)> {
    let index = index_predictions(gold, preds)?;
    let mut counters = Counters::default();
    let mut out = Vec::with_capacity(gold.len());
    for q in gold {
        let (right, predicted) = match index.get(q.query_id.as_str()) {
            None => (0, 0),
            Some(p) => {
                let right = p
                    .assignments
                    .iter()
                    .filter(|(v, e)| q.gold.get(v) == Some(e))
                    .count();
                (right, p.assignments.len())
            }
        };
        counters.c_r += right;
        counters.c_t += 1;
        counters.c_a += predicted;
        counters.c_g += q.gold.len();
        out.push(QueryVerdict {
            query_id: q.query_id.clone(),
            correct: right == q.gold.len() && predicted == q.gold.len(),
            right,
            predicted,
            gold: q.gold.len(),
        });
    }
    Ok((out, counters))
}

fn task_of(gold: &[Query], fallback: Task) -> Task {
    gold.first().map_or(fallback, |q| q.task)
}

pub fn score_sv_mvs(gold: &[Query], preds: &[PredictionRecord]) -> Result<EvalReport> {
    let (verdicts, counters) = verdicts(gold, preds)?;
    Ok(EvalReport {
        task: task_of(gold, Task::Sv),
        split: None,
        n_queries: gold.len(),
        metrics: Metrics::Accuracy {
            accuracy: ratio(counters.c_r, counters.c_t),
        },
        counters,
        verdicts,
    })
}

pub fn score_tv(gold: &[Query], preds: &[PredictionRecord]) -> Result<EvalReport> {
    let (verdicts, counters) = verdicts(gold, preds)?;
    let precision = ratio(counters.c_r, counters.c_a);
    let recall = ratio(counters.c_r, counters.c_g);
    Ok(EvalReport {
        task: task_of(gold, Task::Tv),
        split: None,
        n_queries: gold.len(),
        metrics: Metrics::F1 {
            precision,
            recall,
            f1: f1(precision, recall),
        },
        counters,
        verdicts,
    })
}

pub fn score(task: Task, gold: &[Query], preds: &[PredictionRecord]) -> Result<EvalReport> {
    let mut report = match task {
        Task::Sv | Task::Mvs => score_sv_mvs(gold, preds)?,
        Task::Tv => score_tv(gold, preds)?,
    };
    report.task = task;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    HiddenMeaning,
    UtteranceReasoningSummary,
    CoreferenceResolution,
    ObjectLinking,
    Annotation,
    HandleSingleVariable,
    Miscellaneous,
}

/// `None` is written as an empty string so annotators can fill it in place.
mod category_field {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<ErrorCategory>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_str(""),
            Some(c) => c.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ErrorCategory>, D::Error> {
        let raw = String::deserialize(d)?;
        if raw.is_empty() {
            return Ok(None);
        }
        ErrorCategory::deserialize(serde::de::value::StrDeserializer::<D::Error>::new(&raw))
            .map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorksheetRow {
    pub query_id: String,
    pub task: Task,
    pub dialogue: DialogueKey,
    /// `speaker: tokens` per utterance.
    pub passage: Vec<String>,
    pub query: String,
    pub gold: BTreeMap<Variable, EntityRef>,
    pub predicted: BTreeMap<Variable, EntityRef>,
    #[serde(with = "category_field")]
    pub category: Option<ErrorCategory>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorWorksheet {
    pub rows: Vec<WorksheetRow>,
}

impl ErrorWorksheet {
    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write(path, &self.rows)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(ErrorWorksheet {
            rows: jsonl::read(path)?,
        })
    }

    /// Category counts and percentages over categorized rows.
    pub fn tally(&self) -> CategoryTally {
        let mut counts = BTreeMap::new();
        let mut uncategorized = 0;
        for row in &self.rows {
            match row.category {
                Some(c) => *counts.entry(c).or_insert(0) += 1,
                None => uncategorized += 1,
            }
        }
        let total: usize = counts.values().sum();
        let percentages = counts
            .iter()
            .map(|(&c, &n)| (c, 100.0 * ratio(n, total)))
            .collect();
        CategoryTally {
            counts,
            percentages,
            uncategorized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryTally {
    pub counts: BTreeMap<ErrorCategory, usize>,
    pub percentages: BTreeMap<ErrorCategory, f64>,
    pub uncategorized: usize,
}

/// Seeded uniform sample of up to `n` wrong predictions, each bundled with
/// its passage and query for manual categorization. Rows are sorted by
/// query id.
pub fn export_worksheet(
    report: &EvalReport,
    corpus: &Corpus,
    gold: &[Query],
    preds: &[PredictionRecord],
    n: usize,
    seed: u64,
) -> Result<ErrorWorksheet> {
    let by_id: HashMap<&str, &Query> = gold.iter().map(|q| (q.query_id.as_str(), q)).collect();
    let pred_by_id: HashMap<&str, &PredictionRecord> =
        preds.iter().map(|p| (p.query_id.as_str(), p)).collect();

    let mut wrong: Vec<&str> = report.wrong().map(|v| v.query_id.as_str()).collect();
    wrong.sort_unstable();
    rng::shuffle(&mut wrong, &mut rng::seeded(seed));
    wrong.truncate(n);
    wrong.sort_unstable();

    let mut rows = Vec::with_capacity(wrong.len());
    for id in wrong {
        let q = by_id
            .get(id)
            .ok_or_else(|| Error::UnknownQueryId(id.to_owned()))?;
        let dialogue = corpus
            .dialogue(q.dialogue)
            .ok_or_else(|| Error::UnknownDialogue(q.dialogue.to_string()))?;
        rows.push(WorksheetRow {
            query_id: q.query_id.clone(),
            task: q.task,
            dialogue: q.dialogue,
            passage: dialogue
                .utterances
                .iter()
                .map(|u| format!("{}: {}", u.speaker, u.tokens.join(" ")))
                .collect(),
            query: q.text(),
            gold: q.gold.clone(),
            predicted: pred_by_id
                .get(id)
                .map(|p| p.assignments.clone())
                .unwrap_or_default(),
            category: None,
        });
    }
    Ok(ErrorWorksheet { rows })
}
