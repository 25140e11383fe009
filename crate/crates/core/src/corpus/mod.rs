//! Dialogue corpus model, importers and statistics.
//!
//! A corpus is a set of scene-scoped dialogues plus plot-summary sentences
//! aligned to those scenes. Character mentions are anonymized per dialogue as
//! `@entNN` tokens; the same character keeps the same id within one dialogue
//! and all of its plot sentences.

mod canonical;
mod import;
mod stats;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub use canonical::{export_canonical, import_canonical, DIALOGUES_FILE, PLOTS_FILE};
pub use import::{import_corpus, ImportOptions};
pub use stats::{compute_stats, CorpusStats};

/// Dialogue-local entity id, rendered `@entNN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityRef(u16);

impl EntityRef {
    pub const PREFIX: &'static str = "@ent";

    pub fn new(local_id: u16) -> Self {
        EntityRef(local_id)
    }

    pub fn local_id(self) -> u16 {
        self.0
    }

    pub fn render(self) -> String {
        self.to_string()
    }

    /// True when `token` is exactly the rendering of some entity.
    pub fn is_entity_token(token: &str) -> bool {
        token.parse::<EntityRef>().is_ok()
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:02}", Self::PREFIX, self.0)
    }
}

impl FromStr for EntityRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix(Self::PREFIX)
            .ok_or_else(|| format!("entity token must start with {}: {s:?}", Self::PREFIX))?;
        if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("entity token needs at least two digits: {s:?}"));
        }
        let id: u16 = digits
            .parse()
            .map_err(|_| format!("entity id out of range: {s:?}"))?;
        // Canonical rendering only: "@ent4" and "@ent004" are rejected.
        if EntityRef(id).to_string() != s {
            return Err(format!("non-canonical entity token {s:?}"));
        }
        Ok(EntityRef(id))
    }
}

impl Serialize for EntityRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Who speaks an utterance. Narrator lines render as `-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Speaker {
    Narrator,
    Entity(EntityRef),
}

impl Speaker {
    pub fn entity(self) -> Option<EntityRef> {
        match self {
            Speaker::Narrator => None,
            Speaker::Entity(e) => Some(e),
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Narrator => f.write_str("-"),
            Speaker::Entity(e) => e.fmt(f),
        }
    }
}

impl Serialize for Speaker {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Speaker {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s == "-" {
            return Ok(Speaker::Narrator);
        }
        s.parse()
            .map(Speaker::Entity)
            .map_err(serde::de::Error::custom)
    }
}

/// (season, episode, scene), ordered chronologically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DialogueKey {
    pub season: u32,
    pub episode: u32,
    pub scene: u32,
}

impl DialogueKey {
    pub fn new(season: u32, episode: u32, scene: u32) -> Self {
        DialogueKey {
            season,
            episode,
            scene,
        }
    }

    /// Parses the `sNN_eNN_cNN` scene id used by the transcript release.
    pub fn parse_scene_id(id: &str) -> Option<Self> {
        let mut parts = id.split('_');
        let season = parts.next()?.strip_prefix('s')?.parse().ok()?;
        let episode = parts.next()?.strip_prefix('e')?.parse().ok()?;
        let scene = parts.next()?.strip_prefix('c')?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(DialogueKey::new(season, episode, scene))
    }
}

impl fmt::Display for DialogueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s{:02}_e{:02}_c{:02}",
            self.season, self.episode, self.scene
        )
    }
}

/// A half-open token span `[start, end)` inside an utterance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub entity: EntityRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub index: u32,
    pub speaker: Speaker,
    pub tokens: Vec<String>,
    pub mentions: Vec<Mention>,
}

/// Links a dialogue-local id back to the annotated character, when known.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastEntry {
    pub entity: EntityRef,
    pub character: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub key: DialogueKey,
    pub cast: Vec<CastEntry>,
    pub utterances: Vec<Utterance>,
}

impl Dialogue {
    /// Distinct entities that appear in the passage, as a mention or as a
    /// speaker, ordered by local id.
    pub fn entities(&self) -> BTreeSet<EntityRef> {
        let mut out = BTreeSet::new();
        for u in &self.utterances {
            out.extend(u.speaker.entity());
            out.extend(u.mentions.iter().map(|m| m.entity));
        }
        out
    }

    pub fn character(&self, entity: EntityRef) -> Option<&str> {
        self.cast
            .iter()
            .find(|c| c.entity == entity)
            .and_then(|c| c.character.as_deref())
    }

    pub fn token_count(&self) -> usize {
        self.utterances.iter().map(|u| u.tokens.len()).sum()
    }

    pub fn mention_count(&self) -> usize {
        self.utterances.iter().map(|u| u.mentions.len()).sum()
    }

    /// Number of mention spans of `entity` in the passage.
    pub fn mentions_of(&self, entity: EntityRef) -> usize {
        self.utterances
            .iter()
            .flat_map(|u| &u.mentions)
            .filter(|m| m.entity == entity)
            .count()
    }

    pub fn turns_of(&self, entity: EntityRef) -> usize {
        self.utterances
            .iter()
            .filter(|u| u.speaker == Speaker::Entity(entity))
            .count()
    }
}

/// A single entity occurrence in a plot sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotMention {
    pub position: usize,
    pub entity: EntityRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotSentence {
    pub plot_id: String,
    pub dialogue: DialogueKey,
    pub tokens: Vec<String>,
    pub mentions: Vec<PlotMention>,
}

impl PlotSentence {
    pub fn entities(&self) -> BTreeSet<EntityRef> {
        self.mentions.iter().map(|m| m.entity).collect()
    }
}

/// Validated, immutable corpus. Dialogues are sorted by key and plots by
/// (dialogue key, plot id).
#[derive(Clone, Debug)]
pub struct Corpus {
    dialogues: Vec<Dialogue>,
    plots: Vec<PlotSentence>,
    by_key: HashMap<DialogueKey, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.dialogues == other.dialogues && self.plots == other.plots
    }
}

impl Corpus {
    pub fn new(mut dialogues: Vec<Dialogue>, mut plots: Vec<PlotSentence>) -> Result<Self> {
        dialogues.sort_by_key(|d| d.key);
        let mut by_key = HashMap::with_capacity(dialogues.len());
        for (i, d) in dialogues.iter().enumerate() {
            if by_key.insert(d.key, i).is_some() {
                return Err(Error::DuplicateDialogue(d.key.to_string()));
            }
            validate_dialogue(d)?;
        }

        plots.sort_by(|a, b| (a.dialogue, &a.plot_id).cmp(&(b.dialogue, &b.plot_id)));
        let mut seen = HashSet::with_capacity(plots.len());
        for p in &plots {
            if p.plot_id.is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "plot sentence for {} has an empty plot id",
                    p.dialogue
                )));
            }
            if !seen.insert(p.plot_id.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate plot id {}",
                    p.plot_id
                )));
            }
            if !by_key.contains_key(&p.dialogue) {
                return Err(Error::DanglingPlot {
                    plot_id: p.plot_id.clone(),
                    dialogue: p.dialogue.to_string(),
                });
            }
            validate_plot(p)?;
        }

        Ok(Corpus {
            dialogues,
            plots,
            by_key,
        })
    }

    pub fn dialogues(&self) -> &[Dialogue] {
        &self.dialogues
    }

    pub fn plots(&self) -> &[PlotSentence] {
        &self.plots
    }

    pub fn dialogue(&self, key: DialogueKey) -> Option<&Dialogue> {
        self.by_key.get(&key).map(|&i| &self.dialogues[i])
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }
}

fn validate_dialogue(d: &Dialogue) -> Result<()> {
    for (i, u) in d.utterances.iter().enumerate() {
        if u.index as usize != i + 1 {
            return Err(Error::InvalidCorpus(format!(
                "{}: utterance indices must run 1..n, found {} at position {}",
                d.key,
                u.index,
                i + 1
            )));
        }
        let context = || format!("{} utterance {}", d.key, u.index);
        let mut last_end = 0;
        for m in &u.mentions {
            if m.start >= m.end || m.end > u.tokens.len() {
                return Err(Error::BadSpan {
                    context: context(),
                    message: format!(
                        "span [{}, {}) outside {} tokens",
                        m.start,
                        m.end,
                        u.tokens.len()
                    ),
                });
            }
            if m.start < last_end {
                return Err(Error::BadSpan {
                    context: context(),
                    message: format!("span [{}, {}) overlaps or is out of order", m.start, m.end),
                });
            }
            last_end = m.end;
            let rendered = m.entity.render();
            if let Some(t) = u.tokens[m.start..m.end].iter().find(|t| **t != rendered) {
                return Err(Error::BadSpan {
                    context: context(),
                    message: format!("token {t:?} in span of {rendered} is not the entity token"),
                });
            }
        }
    }

    let mut ids = HashSet::new();
    let mut names = HashSet::new();
    for c in &d.cast {
        if !ids.insert(c.entity) {
            return Err(Error::InvalidCorpus(format!(
                "{}: {} listed twice in cast",
                d.key, c.entity
            )));
        }
        if let Some(name) = &c.character {
            if !names.insert(name.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "{}: character {name:?} has more than one local id",
                    d.key
                )));
            }
        }
    }
    Ok(())
}

fn validate_plot(p: &PlotSentence) -> Result<()> {
    let mut last: Option<usize> = None;
    for m in &p.mentions {
        if m.position >= p.tokens.len() {
            return Err(Error::BadSpan {
                context: p.plot_id.clone(),
                message: format!(
                    "mention position {} outside {} tokens",
                    m.position,
                    p.tokens.len()
                ),
            });
        }
        if last.is_some_and(|l| m.position <= l) {
            return Err(Error::BadSpan {
                context: p.plot_id.clone(),
                message: format!("mention position {} repeated or out of order", m.position),
            });
        }
        last = Some(m.position);
        if p.tokens[m.position] != m.entity.render() {
            return Err(Error::BadSpan {
                context: p.plot_id.clone(),
                message: format!(
                    "token {:?} at {} is not {}",
                    p.tokens[m.position], m.position, m.entity
                ),
            });
        }
    }
    Ok(())
}
