use std::collections::HashSet;

use crate::corpus::{Dialogue, EntityRef, Speaker};
use crate::taskgen::{Query, Variable};

pub const FEATURE_DIM: usize = 7;

/// Column order of [`FeatureVector`]; also written into model files.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "mention_count",
    "speaker_turns",
    "in_query",
    "overlap_count",
    "overlap_norm",
    "recency",
    "bias",
];

pub type FeatureVector = [f64; FEATURE_DIM];

fn content_tokens(query: &Query) -> HashSet<String> {
    query
        .tokens
        .iter()
        .filter(|t| t.parse::<Variable>().is_err() && !crate::corpus::EntityRef::is_entity_token(t))
        .map(|t| t.to_lowercase())
        .collect()
}

/// Features of every candidate of `query`, in candidate order.
///
/// * `mention_count`: mention spans of the candidate in the passage
/// * `speaker_turns`: utterances the candidate speaks
/// * `in_query`: 1 when the candidate is still visible in the query text
/// * `overlap_count`: distinct query words found in the candidate's own utterances
/// * `overlap_norm`: `overlap_count` over the number of distinct query words
/// * `recency`: `(n - last) / n` for the last utterance mentioning the
///   candidate, 1 when never mentioned
/// * `bias`: constant 1
pub fn extract_features(dialogue: &Dialogue, query: &Query) -> Vec<(EntityRef, FeatureVector)> {
    let words = content_tokens(query);
    let visible = query.unmasked_entities();
    let n = dialogue.utterances.len().max(1) as f64;
    query
        .candidates
        .iter()
        .map(|&candidate| {
            let mut spoken = HashSet::new();
            let mut last_mention = None;
            for u in &dialogue.utterances {
                if u.speaker == Speaker::Entity(candidate) {
                    spoken.extend(u.tokens.iter().map(|t| t.to_lowercase()));
                }
                if u.mentions.iter().any(|m| m.entity == candidate) {
                    last_mention = Some(u.index as f64);
                }
            }
            let overlap = words.iter().filter(|w| spoken.contains(*w)).count() as f64;
            let features = [
                dialogue.mentions_of(candidate) as f64,
                dialogue.turns_of(candidate) as f64,
                if visible.contains(&candidate) {
                    1.0
                } else {
                    0.0
                },
                overlap,
                if words.is_empty() {
                    0.0
                } else {
                    overlap / words.len() as f64
                },
                last_mention.map_or(1.0, |last| (n - last) / n),
                1.0,
            ];
            (candidate, features)
        })
        .collect()
}
