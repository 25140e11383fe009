use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::assign_ranked;
use crate::corpus::{Dialogue, EntityRef, Speaker};
use crate::evalkit::PredictionRecord;
use crate::taskgen::Query;
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    Random,
    MostFrequentEntity,
    QueryExclusionFrequency,
    FirstSpeaker,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::Random => "random",
            HeuristicKind::MostFrequentEntity => "freq",
            HeuristicKind::QueryExclusionFrequency => "exclusion",
            HeuristicKind::FirstSpeaker => "first-speaker",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(HeuristicKind::Random),
            "freq" | "most-frequent" => Ok(HeuristicKind::MostFrequentEntity),
            "exclusion" | "query-exclusion" => Ok(HeuristicKind::QueryExclusionFrequency),
            "first-speaker" => Ok(HeuristicKind::FirstSpeaker),
            other => Err(format!("unknown heuristic {other:?}")),
        }
    }
}

/// Candidates by descending mention count, ties by lowest local id.
fn by_frequency(dialogue: &Dialogue, candidates: &[EntityRef]) -> Vec<EntityRef> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by_key(|&e| (std::cmp::Reverse(dialogue.mentions_of(e)), e));
    ranked
}

/// Full candidate ranking for `kind`; the prediction takes the top one or two.
///
/// `Random` draws from a stream keyed by `seed` and the query id, so the
/// result does not depend on the order queries are processed in.
pub fn rank_heuristic(
    dialogue: &Dialogue,
    query: &Query,
    kind: HeuristicKind,
    seed: u64,
) -> Result<Vec<EntityRef>> {
    if query.candidates.is_empty() {
        return Err(Error::EmptyCandidates(query.query_id.clone()));
    }
    let mut candidates = query.candidates.clone();
    candidates.sort_unstable();
    Ok(match kind {
        HeuristicKind::Random => {
            let mut rng = rng::seeded(rng::derive(seed, &query.query_id));
            rng::shuffle(&mut candidates, &mut rng);
            candidates
        }
        HeuristicKind::MostFrequentEntity => by_frequency(dialogue, &candidates),
        HeuristicKind::QueryExclusionFrequency => {
            let visible = query.unmasked_entities();
            let (hidden, shown): (Vec<_>, Vec<_>) =
                candidates.iter().partition(|e| !visible.contains(e));
            let mut ranked = by_frequency(dialogue, &hidden);
            ranked.extend(by_frequency(dialogue, &shown));
            ranked
        }
        HeuristicKind::FirstSpeaker => {
            let mut ranked: Vec<EntityRef> = Vec::new();
            for u in &dialogue.utterances {
                if let Speaker::Entity(e) = u.speaker {
                    if candidates.contains(&e) && !ranked.contains(&e) {
                        ranked.push(e);
                    }
                }
            }
            ranked.extend(
                candidates
                    .iter()
                    .filter(|e| !ranked.contains(e))
                    .collect::<Vec<_>>(),
            );
            ranked
        }
    })
}

pub fn predict_heuristic(
    dialogue: &Dialogue,
    query: &Query,
    kind: HeuristicKind,
    seed: u64,
) -> Result<PredictionRecord> {
    let ranking = rank_heuristic(dialogue, query, kind, seed)?;
    Ok(assign_ranked(query, &ranking))
}
