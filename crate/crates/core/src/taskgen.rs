//! Cloze query generation for the three passage-completion tasks.
//!
//! Every query is a plot sentence in which one or two entity occurrences are
//! replaced by variable tokens (`x`, `x1`, `x2`), paired with the gold
//! entities and the candidate entities of the evidence dialogue.
//!
//! * SV: one query per mention occurrence, masking that occurrence with `x`.
//! * MVS: one query per distinct entity, masking all of its occurrences.
//! * TV: one query per ordered pair of distinct occurrences, `x1` at the first
//!   element and `x2` at the second; a sentence with a single occurrence gives
//!   an `x1` query and an `x2` query.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DialogueKey, EntityRef, PlotSentence};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    X,
    X1,
    X2,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::X1 => "x1",
            Variable::X2 => "x2",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(Variable::X),
            "x1" => Ok(Variable::X1),
            "x2" => Ok(Variable::X2),
            other => Err(format!("unknown variable {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sv,
    Mvs,
    Tv,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Sv, Task::Mvs, Task::Tv];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sv => "sv",
            Task::Mvs => "mvs",
            Task::Tv => "tv",
        }
    }

    pub fn allows(self, variable: Variable) -> bool {
        match self {
            Task::Sv | Task::Mvs => variable == Variable::X,
            Task::Tv => variable != Variable::X,
        }
    }

    /// File name of the generated query set, e.g. `queries_sv.jsonl`.
    pub fn queries_file(self) -> String {
        format!("queries_{}.jsonl", self.as_str())
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sv" => Ok(Task::Sv),
            "mvs" => Ok(Task::Mvs),
            "tv" => Ok(Task::Tv),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedOccurrence {
    pub position: usize,
    pub variable: Variable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub task: Task,
    pub dialogue: DialogueKey,
    pub plot_id: String,
    pub tokens: Vec<String>,
    pub masked: Vec<MaskedOccurrence>,
    pub gold: BTreeMap<Variable, EntityRef>,
    pub candidates: Vec<EntityRef>,
    pub answer_in_candidates: bool,
}

impl Query {
    /// Substitutes the gold entities back into the masked positions.
    pub fn unmask(&self) -> Vec<String> {
        let mut tokens = self.tokens.clone();
        for m in &self.masked {
            tokens[m.position] = self.gold[&m.variable].render();
        }
        tokens
    }

    /// Entities still visible in the query text.
    pub fn unmasked_entities(&self) -> BTreeSet<EntityRef> {
        self.tokens.iter().filter_map(|t| t.parse().ok()).collect()
    }

    /// Variables whose token occurs in the query, in x, x1, x2 order.
    pub fn variables(&self) -> BTreeSet<Variable> {
        self.masked.iter().map(|m| m.variable).collect()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Distinct entities of one dialogue (mentions and entity speakers), ordered
/// by local id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub dialogue: DialogueKey,
    pub entities: Vec<EntityRef>,
}

pub fn build_candidates(corpus: &Corpus, key: DialogueKey) -> Result<CandidateSet> {
    let dialogue = corpus
        .dialogue(key)
        .ok_or_else(|| Error::UnknownDialogue(key.to_string()))?;
    Ok(CandidateSet {
        dialogue: key,
        entities: dialogue.entities().into_iter().collect(),
    })
}

pub fn generate(corpus: &Corpus, task: Task) -> Vec<Query> {
    let mut out = Vec::new();
    for plot in corpus.plots() {
        let candidates = build_candidates(corpus, plot.dialogue)
            .expect("validated corpus resolves every plot's dialogue");
        let builder = QueryBuilder {
            task,
            plot,
            candidates: &candidates.entities,
        };
        match task {
            Task::Sv => sv_masks(plot, &builder, &mut out),
            Task::Mvs => mvs_masks(plot, &builder, &mut out),
            Task::Tv => tv_masks(plot, &builder, &mut out),
        }
    }
    out
}

pub fn generate_sv(corpus: &Corpus) -> Vec<Query> {
    generate(corpus, Task::Sv)
}

pub fn generate_mvs(corpus: &Corpus) -> Vec<Query> {
    generate(corpus, Task::Mvs)
}

pub fn generate_tv(corpus: &Corpus) -> Vec<Query> {
    generate(corpus, Task::Tv)
}

pub fn drop_unanswerable(queries: Vec<Query>) -> Vec<Query> {
    queries
        .into_iter()
        .filter(|q| q.answer_in_candidates)
        .collect()
}

fn sv_masks(plot: &PlotSentence, builder: &QueryBuilder<'_>, out: &mut Vec<Query>) {
    for i in 0..plot.mentions.len() {
        out.push(builder.build(&[(i, Variable::X)]));
    }
}

fn mvs_masks(plot: &PlotSentence, builder: &QueryBuilder<'_>, out: &mut Vec<Query>) {
    let mut seen = Vec::new();
    for m in &plot.mentions {
        if !seen.contains(&m.entity) {
            seen.push(m.entity);
        }
    }
    for entity in seen {
        let masks: Vec<_> = plot
            .mentions
            .iter()
            .enumerate()
            .filter(|(_, m)| m.entity == entity)
            .map(|(i, _)| (i, Variable::X))
            .collect();
        out.push(builder.build(&masks));
    }
}

fn tv_masks(plot: &PlotSentence, builder: &QueryBuilder<'_>, out: &mut Vec<Query>) {
    let m = plot.mentions.len();
    if m == 1 {
        out.push(builder.build(&[(0, Variable::X1)]));
        out.push(builder.build(&[(0, Variable::X2)]));
        return;
    }
    for i in 0..m {
        for j in i + 1..m {
            out.push(builder.build(&[(i, Variable::X1), (j, Variable::X2)]));
            out.push(builder.build(&[(i, Variable::X2), (j, Variable::X1)]));
        }
    }
}

struct QueryBuilder<'a> {
    task: Task,
    plot: &'a PlotSentence,
    candidates: &'a [EntityRef],
}

impl QueryBuilder<'_> {
    /// `masks` lists (mention ordinal, variable) in increasing ordinal order.
    fn build(&self, masks: &[(usize, Variable)]) -> Query {
        let mut tokens = self.plot.tokens.clone();
        let mut masked = Vec::with_capacity(masks.len());
        let mut gold = BTreeMap::new();
        for &(ordinal, variable) in masks {
            let mention = &self.plot.mentions[ordinal];
            tokens[mention.position] = variable.to_string();
            masked.push(MaskedOccurrence {
                position: mention.position,
                variable,
            });
            gold.insert(variable, mention.entity);
        }
        let ordinals: Vec<String> = masks.iter().map(|(i, _)| format!("{i:02}")).collect();
        let variables: Vec<&str> = masks.iter().map(|(_, v)| v.as_str()).collect();
        let answer_in_candidates = gold.values().all(|e| self.candidates.contains(e));
        Query {
            query_id: format!(
                "{}:{}:{}:{}",
                self.task,
                self.plot.plot_id,
                ordinals.join(","),
                variables.join(",")
            ),
            task: self.task,
            dialogue: self.plot.dialogue,
            plot_id: self.plot.plot_id.clone(),
            tokens,
            masked,
            gold,
            candidates: self.candidates.to_vec(),
            answer_in_candidates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{credit_card_corpus, plot, utterance};
    use crate::corpus::{Dialogue, DialogueKey};

    fn texts(queries: &[Query], plot_id: &str) -> Vec<String> {
        queries
            .iter()
            .filter(|q| q.plot_id == plot_id)
            .map(Query::text)
            .collect()
    }

    const P2: &str = "s01_e21_c01_p02";
    const TAIL: &str = "how someone could get a hold of";

    #[test]
    fn sv_matches_the_worked_example() {
        let queries = generate_sv(&credit_card_corpus());
        assert_eq!(
            texts(&queries, "s01_e21_c01_p01"),
            ["x spent $ 69.95 on a Wonder Mop"]
        );
        let rows = texts(&queries, P2);
        assert_eq!(rows.len(), 4);
        let end = "'s credit card number and";
        assert_eq!(
            rows[0],
            format!(
                "x asks @ent00 {TAIL} @ent00 {end} @ent00 is surprised at how much was spent ."
            )
        );
        assert_eq!(
            rows[1],
            format!(
                "@ent04 asks x {TAIL} @ent00 {end} @ent00 is surprised at how much was spent ."
            )
        );
        assert_eq!(
            rows[2],
            format!(
                "@ent04 asks @ent00 {TAIL} x {end} @ent00 is surprised at how much was spent ."
            )
        );
        assert_eq!(
            rows[3],
            format!(
                "@ent04 asks @ent00 {TAIL} @ent00 {end} x is surprised at how much was spent ."
            )
        );
        let q = queries
            .iter()
            .find(|q| q.query_id == "sv:s01_e21_c01_p02:00:x")
            .unwrap();
        assert_eq!(q.gold[&Variable::X], EntityRef::new(4));
    }

    #[test]
    fn mvs_matches_the_worked_example() {
        let queries = generate_mvs(&credit_card_corpus());
        assert_eq!(
            texts(&queries, "s01_e21_c01_p01"),
            ["x spent $ 69.95 on a Wonder Mop"]
        );
        let rows = texts(&queries, P2);
        let end = "'s credit card number and";
        assert_eq!(
            rows,
            [
                format!(
                    "x asks @ent00 {TAIL} @ent00 {end} @ent00 is surprised at how much was spent ."
                ),
                format!("@ent04 asks x {TAIL} x {end} x is surprised at how much was spent ."),
            ]
        );
        assert_eq!(queries[2].query_id, "mvs:s01_e21_c01_p02:01,02,03:x,x,x");
        assert_eq!(queries[2].gold[&Variable::X], EntityRef::new(0));
    }

    #[test]
    fn tv_matches_the_worked_example() {
        let queries = generate_tv(&credit_card_corpus());
        assert_eq!(
            texts(&queries, "s01_e21_c01_p01"),
            [
                "x1 spent $ 69.95 on a Wonder Mop",
                "x2 spent $ 69.95 on a Wonder Mop"
            ]
        );
        let rows = texts(&queries, P2);
        assert_eq!(rows.len(), 12);
        let end = "'s credit card number and @ent00 is surprised at how much was spent .";
        let shown = [
            format!("x1 asks x2 {TAIL} @ent00 {end}"),
            format!("x2 asks x1 {TAIL} @ent00 {end}"),
            format!("x1 asks @ent00 {TAIL} x2 {end}"),
            format!("x2 asks @ent00 {TAIL} x1 {end}"),
            format!("@ent04 asks x1 {TAIL} x2 {end}"),
        ];
        // The table lists these five before eliding the rest.
        assert_eq!(rows[..4], shown[..4]);
        assert!(rows.contains(&shown[4]));
        let ids: BTreeSet<_> = queries.iter().map(|q| q.query_id.as_str()).collect();
        assert_eq!(ids.len(), queries.len());
        assert!(ids.contains("tv:s01_e21_c01_p02:00,01:x2,x1"));
    }

    #[test]
    fn zero_mention_plot_yields_nothing() {
        let key = DialogueKey::new(1, 1, 1);
        let d = Dialogue {
            key,
            cast: vec![],
            utterances: vec![utterance(1, Some(0), "hello")],
        };
        let corpus =
            Corpus::new(vec![d], vec![plot("s01_e01_c01_p01", key, "nobody here .")]).unwrap();
        for task in Task::ALL {
            assert!(generate(&corpus, task).is_empty());
        }
    }

    #[test]
    fn candidates_cover_speakers_and_flag_absent_answers() {
        let corpus = credit_card_corpus();
        let set = build_candidates(&corpus, DialogueKey::new(1, 21, 1)).unwrap();
        let ids: Vec<u16> = set.entities.iter().map(|e| e.local_id()).collect();
        assert_eq!(ids, [0, 1, 4, 5, 6]);
        assert_eq!(
            build_candidates(&corpus, DialogueKey::new(2, 1, 1))
                .unwrap_err()
                .kind(),
            "UnknownDialogue"
        );

        let key = DialogueKey::new(1, 1, 1);
        let d = Dialogue {
            key,
            cast: vec![],
            utterances: vec![utterance(1, Some(0), "hello there")],
        };
        let corpus = Corpus::new(
            vec![d],
            vec![plot("s01_e01_c01_p01", key, "@ent00 greets @ent07 .")],
        )
        .unwrap();
        assert_eq!(
            build_candidates(&corpus, key).unwrap().entities,
            [EntityRef::new(0)]
        );
        let sv = generate_sv(&corpus);
        assert!(sv[0].answer_in_candidates);
        assert!(!sv[1].answer_in_candidates);
        assert_eq!(drop_unanswerable(sv).len(), 1);
        let tv = generate_tv(&corpus);
        assert!(tv.iter().all(|q| !q.answer_in_candidates));
    }

    #[test]
    fn single_occurrence_mvs_equals_sv() {
        let corpus = credit_card_corpus();
        let sv = generate_sv(&corpus);
        let mvs = generate_mvs(&corpus);
        assert_eq!(sv[0].tokens, mvs[0].tokens);
        assert_eq!(sv[0].gold, mvs[0].gold);
    }

    #[test]
    fn query_json_uses_plain_variable_names() {
        let q = &generate_tv(&credit_card_corpus())[0];
        let json = serde_json::to_string(q).unwrap();
        assert!(json.contains(r#""gold":{"x1":"@ent00"}"#), "{json}");
        let back: Query = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, q);
    }
}
