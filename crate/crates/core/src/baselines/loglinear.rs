//! Log-linear candidate ranker trained with mini-batch gradient descent.
//!
//! A candidate's score is `w · f`. The loss of one query is the softmax
//! cross-entropy of each gold entity against all candidates,
//!
//! ```text
//! L = (1/B) Σ_q Σ_t [ log Σ_c exp(w·f_c) − w·f_t ] + (λ/2) ‖w‖²
//! ∂L/∂w = (1/B) Σ_q Σ_t [ Σ_c p_c f_c − f_t ] + λ w
//! ```
//!
//! with `p` the softmax of the scores. TV queries contribute one term per
//! gold variable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, FEATURE_DIM, FEATURE_NAMES};
use crate::corpus::{Corpus, Dialogue, EntityRef};
use crate::evalkit::PredictionRecord;
use crate::taskgen::{Query, Task, Variable};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// A single-variable TV query gets one assignment when the runner-up's
    /// softmax probability is below this value; 0 always emits two.
    pub tv_margin: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 0.05,
            epochs: 30,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
            tv_margin: 0.0,
        }
    }
}

/// One training example: candidate feature rows and the indices of the gold
/// candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
}

fn dot(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(a, b)| a * b).sum()
}

fn softmax(scores: &[f64]) -> (Vec<f64>, f64) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let log_z = max + z.ln();
    (exps.into_iter().map(|e| e / z).collect(), log_z)
}

/// Mean loss over `batch` and its gradient.
pub fn objective(weights: &[f64], batch: &[Instance], l2: f64) -> (f64, Vec<f64>) {
    let dim = weights.len();
    let mut grad = vec![0.0; dim];
    let mut loss = 0.0;
    let scale = if batch.is_empty() {
        0.0
    } else {
        1.0 / batch.len() as f64
    };
    for inst in batch {
        let scores: Vec<f64> = inst.features.iter().map(|f| dot(weights, f)).collect();
        let (probs, log_z) = softmax(&scores);
        for &t in &inst.targets {
            loss += scale * (log_z - scores[t]);
            for (c, f) in inst.features.iter().enumerate() {
                let coef = scale * (probs[c] - if c == t { 1.0 } else { 0.0 });
                for (g, x) in grad.iter_mut().zip(f) {
                    *g += coef * x;
                }
            }
        }
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (loss, grad)
}

/// Index of the best-scoring row; ties go to the lowest index.
fn argmax(weights: &[f64], features: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, f) in features.iter().enumerate() {
        let s = dot(weights, f);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Fraction of instances whose top-scoring candidate is a gold candidate.
pub fn top1_accuracy(weights: &[f64], instances: &[Instance]) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let hits = instances
        .iter()
        .filter(|inst| inst.targets.contains(&argmax(weights, &inst.features)))
        .count();
    hits as f64 / instances.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub skipped_train: usize,
    pub skipped_dev: usize,
    pub best_epoch: usize,
    pub epochs: Vec<EpochLog>,
}

/// Mini-batch descent from zero weights. Epoch 0 is the untrained model;
/// the returned weights are those of the epoch with the best dev accuracy
/// (earliest on ties), or the last epoch when `dev` is empty.
pub fn fit(
    train: &[Instance],
    dev: &[Instance],
    dim: usize,
    hp: &Hyperparameters,
) -> Result<(Vec<f64>, TrainingLog)> {
    if train.is_empty() {
        return Err(Error::NoTrainableQueries { skipped: 0 });
    }
    let mut weights = vec![0.0; dim];
    let mut rng = rng::seeded(hp.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch_size = hp.batch_size.max(1);

    let summarize = |epoch: usize, w: &[f64]| -> Result<EpochLog> {
        let (train_loss, _) = objective(w, train, hp.l2);
        if !train_loss.is_finite() {
            return Err(Error::DivergenceDetected {
                epoch,
                loss: train_loss,
            });
        }
        Ok(EpochLog {
            epoch,
            train_loss,
            train_accuracy: top1_accuracy(w, train),
            dev_accuracy: top1_accuracy(w, dev),
        })
    };

    let mut epochs = vec![summarize(0, &weights)?];
    let mut best = (epochs[0].dev_accuracy, 0, weights.clone());
    let mut batch = Vec::with_capacity(batch_size);
    for epoch in 1..=hp.epochs {
        rng::shuffle(&mut order, &mut rng);
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grad) = objective(&weights, &batch, hp.l2);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergenceDetected { epoch, loss });
            }
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= hp.learning_rate * g;
            }
        }
        let log = summarize(epoch, &weights)?;
        if dev.is_empty() || log.dev_accuracy > best.0 {
            best = (log.dev_accuracy, epoch, weights.clone());
        }
        epochs.push(log);
    }

    Ok((
        best.2,
        TrainingLog {
            skipped_train: 0,
            skipped_dev: 0,
            best_epoch: best.1,
            epochs,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearModel {
    pub task: Task,
    pub hyperparameters: Hyperparameters,
    pub weights: Vec<f64>,
}

const MODEL_HEADER: &str = "dialcloze-loglinear v1";

impl LogLinearModel {
    /// Text model file: a version line, `key value` lines for the task and
    /// hyperparameters, the feature names, then one weight per line. Reals
    /// use Rust's shortest round-trip rendering, so save/load is exact.
    pub fn to_text(&self) -> String {
        let hp = &self.hyperparameters;
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_HEADER}");
        let _ = writeln!(out, "task {}", self.task);
        let _ = writeln!(out, "dim {}", self.weights.len());
        let _ = writeln!(out, "learning_rate {:?}", hp.learning_rate);
        let _ = writeln!(out, "epochs {}", hp.epochs);
        let _ = writeln!(out, "l2 {:?}", hp.l2);
        let _ = writeln!(out, "batch_size {}", hp.batch_size);
        let _ = writeln!(out, "seed {}", hp.seed);
        let _ = writeln!(out, "tv_margin {:?}", hp.tv_margin);
        let _ = writeln!(out, "features {}", FEATURE_NAMES.join(","));
        let _ = writeln!(out, "weights");
        for w in &self.weights {
            let _ = writeln!(out, "{w:?}");
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::malformed(origin, format!("line {line}"), msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, MODEL_HEADER)) => {}
            other => {
                return Err(bad(
                    1,
                    format!("expected {MODEL_HEADER:?}, found {other:?}"),
                ));
            }
        }
        let mut fields = BTreeMap::new();
        let mut weights_line = None;
        for (n, line) in lines.by_ref() {
            if line == "weights" {
                weights_line = Some(n);
                break;
            }
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| bad(n, format!("expected `key value`, found {line:?}")))?;
            fields.insert(k.to_owned(), (n, v.to_owned()));
        }
        let Some(weights_line) = weights_line else {
            return Err(bad(0, "missing `weights` section".to_owned()));
        };
        fn get<T: std::str::FromStr>(
            fields: &BTreeMap<String, (usize, String)>,
            key: &str,
            bad: &dyn Fn(usize, String) -> Error,
        ) -> Result<T> {
            let (n, v) = fields
                .get(key)
                .ok_or_else(|| bad(0, format!("missing field {key:?}")))?;
            v.parse()
                .map_err(|_| bad(*n, format!("cannot parse {key} value {v:?}")))
        }
        let task: String = get(&fields, "task", &bad)?;
        let task: Task = task.parse().map_err(|e: String| bad(2, e))?;
        let dim: usize = get(&fields, "dim", &bad)?;
        let hyperparameters = Hyperparameters {
            learning_rate: get(&fields, "learning_rate", &bad)?,
            epochs: get(&fields, "epochs", &bad)?,
            l2: get(&fields, "l2", &bad)?,
            batch_size: get(&fields, "batch_size", &bad)?,
            seed: get(&fields, "seed", &bad)?,
            tv_margin: get(&fields, "tv_margin", &bad)?,
        };
        let names: String = get(&fields, "features", &bad)?;
        if names != FEATURE_NAMES.join(",") {
            return Err(bad(0, format!("unsupported feature set {names:?}")));
        }
        let weights = lines
            .filter(|(_, l)| !l.is_empty())
            .map(|(n, l)| {
                l.parse::<f64>()
                    .map_err(|_| bad(n, format!("weight {l:?} is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if weights.len() != dim {
            return Err(bad(
                weights_line,
                format!("header says {dim} weights, found {}", weights.len()),
            ));
        }
        Ok(LogLinearModel {
            task,
            hyperparameters,
            weights,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

fn instances(corpus: &Corpus, queries: &[&Query]) -> (Vec<Instance>, usize) {
    let mut out = Vec::with_capacity(queries.len());
    let mut skipped = 0;
    for q in queries {
        let Some(dialogue) = corpus.dialogue(q.dialogue) else {
            skipped += 1;
            continue;
        };
        if !q.answer_in_candidates || q.candidates.is_empty() {
            skipped += 1;
            continue;
        }
        let feats = extract_features(dialogue, q);
        let targets = q
            .gold
            .values()
            .map(|g| {
                feats
                    .iter()
                    .position(|(e, _)| e == g)
                    .expect("answerable query has gold among candidates")
            })
            .collect();
        out.push(Instance {
            features: feats.into_iter().map(|(_, f)| f.to_vec()).collect(),
            targets,
        });
    }
    (out, skipped)
}

/// Trains on `train`, selecting weights by dev accuracy. Queries whose gold
/// answer is not a candidate are skipped and counted in the log.
pub fn train_loglinear(
    corpus: &Corpus,
    task: Task,
    train: &[&Query],
    dev: &[&Query],
    hp: &Hyperparameters,
) -> Result<(LogLinearModel, TrainingLog)> {
    let (train_set, skipped_train) = instances(corpus, train);
    let (dev_set, skipped_dev) = instances(corpus, dev);
    if train_set.is_empty() {
        return Err(Error::NoTrainableQueries {
            skipped: skipped_train,
        });
    }
    let (weights, mut log) = fit(&train_set, &dev_set, FEATURE_DIM, hp)?;
    log.skipped_train = skipped_train;
    log.skipped_dev = skipped_dev;
    Ok((
        LogLinearModel {
            task,
            hyperparameters: hp.clone(),
            weights,
        },
        log,
    ))
}

/// Candidates ranked by score, ties by lowest local id, with their softmax
/// probabilities.
fn ranked(
    model: &LogLinearModel,
    dialogue: &Dialogue,
    query: &Query,
) -> Result<Vec<(EntityRef, f64)>> {
    if model.weights.len() != FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            model: model.weights.len(),
            features: FEATURE_DIM,
        });
    }
    if query.candidates.is_empty() {
        return Err(Error::EmptyCandidates(query.query_id.clone()));
    }
    let feats = extract_features(dialogue, query);
    let scores: Vec<f64> = feats.iter().map(|(_, f)| dot(&model.weights, f)).collect();
    let (probs, _) = softmax(&scores);
    let mut rows: Vec<(EntityRef, f64, f64)> = feats
        .iter()
        .zip(scores.iter().zip(probs))
        .map(|((e, _), (&s, p))| (*e, s, p))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(rows.into_iter().map(|(e, _, p)| (e, p)).collect())
}

pub fn predict_loglinear(
    model: &LogLinearModel,
    dialogue: &Dialogue,
    query: &Query,
) -> Result<PredictionRecord> {
    let ranking = ranked(model, dialogue, query)?;
    let mut assignments = BTreeMap::new();
    match query.task {
        Task::Sv | Task::Mvs => {
            assignments.insert(Variable::X, ranking[0].0);
        }
        Task::Tv => {
            let variables = query.variables();
            let runner_up = ranking.get(1).copied();
            let single = variables.len() == 1
                && runner_up.is_none_or(|(_, p)| p < model.hyperparameters.tv_margin);
            if single {
                let v = *variables.iter().next().expect("one variable");
                assignments.insert(v, ranking[0].0);
            } else {
                assignments.insert(Variable::X1, ranking[0].0);
                assignments.insert(Variable::X2, runner_up.map_or(ranking[0].0, |(e, _)| e));
            }
        }
    }
    Ok(PredictionRecord {
        query_id: query.query_id.clone(),
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{predict_heuristic, HeuristicKind};
    use crate::corpus::tests::credit_card_corpus;
    use crate::taskgen::{generate_sv, generate_tv};

    fn model(weights: Vec<f64>, task: Task) -> LogLinearModel {
        LogLinearModel {
            task,
            hyperparameters: Hyperparameters::default(),
            weights,
        }
    }

    #[test]
    fn zero_weights_pick_lowest_id() {
        let corpus = credit_card_corpus();
        let d = &corpus.dialogues()[0];
        let m = model(vec![0.0; FEATURE_DIM], Task::Sv);
        for q in generate_sv(&corpus) {
            let p = predict_loglinear(&m, d, &q).unwrap();
            assert_eq!(p.assignments[&Variable::X], EntityRef::new(0));
        }
    }

    #[test]
    fn one_hot_mention_count_equals_most_frequent() {
        let corpus = credit_card_corpus();
        let d = &corpus.dialogues()[0];
        let mut w = vec![0.0; FEATURE_DIM];
        w[0] = 1.0;
        let m = model(w, Task::Sv);
        for q in generate_sv(&corpus) {
            assert_eq!(
                predict_loglinear(&m, d, &q).unwrap(),
                predict_heuristic(d, &q, HeuristicKind::MostFrequentEntity, 0).unwrap()
            );
        }
    }

    #[test]
    fn tv_margin_controls_single_emission() {
        let corpus = credit_card_corpus();
        let d = &corpus.dialogues()[0];
        let tv = generate_tv(&corpus);
        let mut m = model(vec![0.0; FEATURE_DIM], Task::Tv);
        for q in &tv {
            let p = predict_loglinear(&m, d, q).unwrap();
            assert_eq!(p.assignments.len(), 2);
            assert_ne!(p.assignments[&Variable::X1], p.assignments[&Variable::X2]);
        }
        // Uniform over five candidates: runner-up probability is 0.2.
        m.hyperparameters.tv_margin = 0.5;
        let p = predict_loglinear(&m, d, &tv[1]).unwrap();
        assert_eq!(
            p.assignments.keys().copied().collect::<Vec<_>>(),
            [Variable::X2]
        );
        let p = predict_loglinear(&m, d, &tv[2]).unwrap();
        assert_eq!(
            p.assignments.len(),
            2,
            "two-variable queries always get two"
        );
    }

    #[test]
    fn dimension_mismatch() {
        let corpus = credit_card_corpus();
        let d = &corpus.dialogues()[0];
        let q = &generate_sv(&corpus)[0];
        let err = predict_loglinear(&model(vec![0.0; 3], Task::Sv), d, q).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
    }

    #[test]
    fn model_text_round_trips_exactly() {
        let m = LogLinearModel {
            task: Task::Mvs,
            hyperparameters: Hyperparameters {
                learning_rate: 0.1,
                epochs: 3,
                l2: 1e-7,
                batch_size: 8,
                seed: 42,
                tv_margin: 0.25,
            },
            weights: vec![
                0.1,
                -3.0e-12,
                1.0 / 3.0,
                f64::MIN_POSITIVE,
                12345.678,
                -0.0,
                1.0,
            ],
        };
        let text = m.to_text();
        assert!(text.starts_with("dialcloze-loglinear v1\ntask mvs\ndim 7\n"));
        let back = LogLinearModel::from_text(&text, Path::new("m")).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights.iter().zip(&m.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let truncated = text.lines().take(13).collect::<Vec<_>>().join("\n");
        assert_eq!(
            LogLinearModel::from_text(&truncated, Path::new("m"))
                .unwrap_err()
                .kind(),
            "MalformedFile"
        );
    }

    #[test]
    fn zero_epochs_keeps_the_uniform_model() {
        let corpus = credit_card_corpus();
        let queries = generate_sv(&corpus);
        let refs: Vec<&Query> = queries.iter().collect();
        let hp = Hyperparameters {
            epochs: 0,
            ..Default::default()
        };
        let (m, log) = train_loglinear(&corpus, Task::Sv, &refs, &refs, &hp).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(log.epochs.len(), 1);
        // Untrained: always @ent00, right on 4 of 5 queries.
        assert_eq!(log.epochs[0].dev_accuracy, 0.8);
    }

    #[test]
    fn no_trainable_queries() {
        let corpus = credit_card_corpus();
        let mut queries = generate_sv(&corpus);
        for q in &mut queries {
            q.answer_in_candidates = false;
        }
        let refs: Vec<&Query> = queries.iter().collect();
        let err = train_loglinear(&corpus, Task::Sv, &refs, &[], &Hyperparameters::default())
            .unwrap_err();
        assert_eq!(err.kind(), "NoTrainableQueries");
    }

    #[test]
    fn huge_learning_rate_is_reported_as_divergence() {
        let inst = Instance {
            features: vec![vec![1e200, 0.0], vec![-1e200, 1.0]],
            targets: vec![1],
        };
        let hp = Hyperparameters {
            learning_rate: 1e200,
            epochs: 5,
            l2: 0.0,
            ..Default::default()
        };
        let err = fit(&[inst], &[], 2, &hp).unwrap_err();
        assert_eq!(err.kind(), "DivergenceDetected");
    }

    #[test]
    fn same_seed_same_weights() {
        let corpus = credit_card_corpus();
        let queries = generate_tv(&corpus);
        let refs: Vec<&Query> = queries.iter().collect();
        let hp = Hyperparameters {
            epochs: 5,
            batch_size: 3,
            seed: 9,
            ..Default::default()
        };
        let a = train_loglinear(&corpus, Task::Tv, &refs, &refs, &hp).unwrap();
        let b = train_loglinear(&corpus, Task::Tv, &refs, &refs, &hp).unwrap();
        assert_eq!(a.0.to_text(), b.0.to_text());
        assert_eq!(a.1, b.1);
    }
}
