//! Train/dev/test assignment and plot-level leakage auditing.
//!
//! The chronological policy puts episodes 1-18 of every season in train,
//! 19-21 in dev and the rest in test. The random policy shuffles sorted query
//! ids with a seeded ChaCha8 stream (see [`crate::rng`]) and cuts 80/10/10 by
//! query count. `RandomByPlot` shuffles whole plot sentences instead, which
//! keeps all queries of a sentence in one split.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taskgen::{Query, Task};
use crate::{jsonl, rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "chrono")]
    Chronological,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "random-by-plot")]
    RandomByPlot,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Chronological => "chrono",
            PolicyKind::Random => "random",
            PolicyKind::RandomByPlot => "random-by-plot",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chrono" | "chronological" => Ok(PolicyKind::Chronological),
            "random" => Ok(PolicyKind::Random),
            "random-by-plot" => Ok(PolicyKind::RandomByPlot),
            other => Err(format!("unknown split policy {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPolicy {
    pub kind: PolicyKind,
    /// Ignored by the chronological policy.
    pub seed: Option<u64>,
}

impl SplitPolicy {
    pub fn chronological() -> Self {
        SplitPolicy {
            kind: PolicyKind::Chronological,
            seed: None,
        }
    }

    pub fn random(seed: u64) -> Self {
        SplitPolicy {
            kind: PolicyKind::Random,
            seed: Some(seed),
        }
    }

    pub fn random_by_plot(seed: u64) -> Self {
        SplitPolicy {
            kind: PolicyKind::RandomByPlot,
            seed: Some(seed),
        }
    }

    /// `split_{policy}.jsonl`
    pub fn file_name(&self) -> String {
        format!("split_{}.jsonl", self.kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Split of an episode under the chronological policy.
pub fn chronological_split(episode: u32) -> Split {
    match episode {
        0..=18 => Split::Train,
        19..=21 => Split::Dev,
        _ => Split::Test,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }

    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Dev => self.dev += 1,
            Split::Test => self.test += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct SplitLine {
    query_id: String,
    split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAssignment {
    /// Unknown when the assignment was read back from a split file.
    pub policy: Option<SplitPolicy>,
    assignments: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, query_id: &str) -> Option<Split> {
        self.assignments.get(query_id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignments.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn counts(&self) -> SplitCounts {
        let mut counts = SplitCounts::default();
        for &s in self.assignments.values() {
            counts.bump(s);
        }
        counts
    }

    pub fn counts_by_task(&self, queries: &[Query]) -> BTreeMap<Task, SplitCounts> {
        let mut out: BTreeMap<Task, SplitCounts> = BTreeMap::new();
        for q in queries {
            if let Some(s) = self.get(&q.query_id) {
                out.entry(q.task).or_default().bump(s);
            }
        }
        out
    }

    /// Queries assigned to `split`, in their original order.
    pub fn select<'q>(&self, queries: &'q [Query], split: Split) -> Vec<&'q Query> {
        queries
            .iter()
            .filter(|q| self.get(&q.query_id) == Some(split))
            .collect()
    }

    /// One `{"query_id", "split"}` line per query, sorted by query id.
    pub fn write(&self, path: &Path) -> Result<()> {
        let lines: Vec<SplitLine> = self
            .assignments
            .iter()
            .map(|(query_id, &split)| SplitLine {
                query_id: query_id.clone(),
                split,
            })
            .collect();
        jsonl::write(path, &lines)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let lines: Vec<SplitLine> = jsonl::read(path)?;
        let mut assignments = BTreeMap::new();
        for line in lines {
            if assignments
                .insert(line.query_id.clone(), line.split)
                .is_some()
            {
                return Err(Error::DuplicateQueryId(line.query_id));
            }
        }
        Ok(SplitAssignment {
            policy: None,
            assignments,
        })
    }
}

pub fn split(queries: &[Query], policy: SplitPolicy) -> Result<SplitAssignment> {
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let mut seen = HashSet::with_capacity(queries.len());
    for q in queries {
        if !seen.insert(q.query_id.as_str()) {
            return Err(Error::DuplicateQueryId(q.query_id.clone()));
        }
    }

    let assignments = match policy.kind {
        PolicyKind::Chronological => queries
            .iter()
            .map(|q| (q.query_id.clone(), chronological_split(q.dialogue.episode)))
            .collect(),
        PolicyKind::Random => {
            let seed = policy.seed.ok_or(Error::MissingSeed)?;
            let mut ids: Vec<&str> = queries.iter().map(|q| q.query_id.as_str()).collect();
            ids.sort_unstable();
            rng::shuffle(&mut ids, &mut rng::seeded(seed));
            let n = ids.len();
            let train = n * 8 / 10;
            let dev = n / 10;
            ids.into_iter()
                .enumerate()
                .map(|(i, id)| {
                    let s = if i < train {
                        Split::Train
                    } else if i < train + dev {
                        Split::Dev
                    } else {
                        Split::Test
                    };
                    (id.to_owned(), s)
                })
                .collect()
        }
        PolicyKind::RandomByPlot => {
            let seed = policy.seed.ok_or(Error::MissingSeed)?;
            let mut per_plot: BTreeMap<&str, usize> = BTreeMap::new();
            for q in queries {
                *per_plot.entry(q.plot_id.as_str()).or_default() += 1;
            }
            let mut plots: Vec<&str> = per_plot.keys().copied().collect();
            rng::shuffle(&mut plots, &mut rng::seeded(seed));
            let n = queries.len();
            let mut before = 0;
            let mut plot_split = BTreeMap::new();
            for p in plots {
                let s = if before * 10 < n * 8 {
                    Split::Train
                } else if before * 10 < n * 9 {
                    Split::Dev
                } else {
                    Split::Test
                };
                plot_split.insert(p, s);
                before += per_plot[p];
            }
            queries
                .iter()
                .map(|q| (q.query_id.clone(), plot_split[q.plot_id.as_str()]))
                .collect()
        }
    };

    Ok(SplitAssignment {
        policy: Some(policy),
        assignments,
    })
}

/// Leakage of one held-out split against the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakagePair {
    pub split: Split,
    pub against: Split,
    pub n_queries: usize,
    pub n_leaked: usize,
    pub fraction: f64,
    pub offending_plots: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub pairs: Vec<LeakagePair>,
}

impl LeakageReport {
    pub fn pair(&self, split: Split) -> Option<&LeakagePair> {
        self.pairs.iter().find(|p| p.split == split)
    }
}

/// A dev or test query leaks when its source plot sentence also sources at
/// least one training query.
pub fn audit_leakage(queries: &[Query], assignment: &SplitAssignment) -> Result<LeakageReport> {
    let mut train_plots = HashSet::new();
    for q in queries {
        if q.plot_id.is_empty() {
            return Err(Error::MissingProvenance(q.query_id.clone()));
        }
        match assignment.get(&q.query_id) {
            None => return Err(Error::UnassignedQuery(q.query_id.clone())),
            Some(Split::Train) => {
                train_plots.insert(q.plot_id.as_str());
            }
            Some(_) => {}
        }
    }

    let pairs = [Split::Dev, Split::Test]
        .into_iter()
        .map(|held_out| {
            let mut n_queries = 0;
            let mut n_leaked = 0;
            let mut offending = BTreeSet::new();
            for q in queries {
                if assignment.get(&q.query_id) != Some(held_out) {
                    continue;
                }
                n_queries += 1;
                if train_plots.contains(q.plot_id.as_str()) {
                    n_leaked += 1;
                    offending.insert(q.plot_id.clone());
                }
            }
            LeakagePair {
                split: held_out,
                against: Split::Train,
                n_queries,
                n_leaked,
                fraction: if n_queries == 0 {
                    0.0
                } else {
                    n_leaked as f64 / n_queries as f64
                },
                offending_plots: offending.into_iter().collect(),
            }
        })
        .collect();
    Ok(LeakageReport { pairs })
}
