//! Importer for the raw transcript release and plot-summary files.
//!
//! Transcripts: one JSON file per season,
//!
//! ```json
//! {"season_id": "s01", "episodes": [{"episode_id": "s01_e01", "scenes": [
//!   {"scene_id": "s01_e01_c01", "utterances": [
//!     {"speakers": ["Monica Geller"],
//!      "tokens": [["There", "'s", "nothing", "to", "tell", "!"]],
//!      "character_entities": [[[0, 1, "Joey Tribbiani"]]]}]}]}]}
//! ```
//!
//! `tokens` holds one list per sentence and `character_entities` one list of
//! `[begin, end, label...]` spans per sentence, offsets relative to that
//! sentence. Plot summaries: one JSON file per season,
//!
//! ```json
//! {"scenes": [{"scene_id": "s01_e01_c01", "sentences": [
//!   {"tokens": ["Monica", "tells", "..."], "character_entities": [[0, 1, "Monica Geller"]]}]}]}
//! ```
//!
//! Only spans labelled with exactly one proper character name are kept;
//! labels such as `#GENERAL#` or plural mentions are dropped. Every kept span
//! collapses to a single `@entNN` token. An utterance with no speaker or the
//! speaker `-` is a narrator line; with several speakers the first is used.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    CastEntry, Corpus, Dialogue, DialogueKey, EntityRef, Mention, PlotMention, PlotSentence,
    Speaker, Utterance,
};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, Default)]
pub struct ImportOptions {
    /// Permute `@entNN` ids within each dialogue instead of numbering by
    /// first appearance.
    pub shuffle_seed: Option<u64>,
    /// Keep scenes that have no plot sentence. Off by default: a dialogue is
    /// a passage only when some plot sentence is aligned to it.
    pub keep_unplotted: bool,
}

#[derive(Deserialize)]
struct SeasonFile {
    episodes: Vec<RawEpisode>,
}

#[derive(Deserialize)]
struct RawEpisode {
    scenes: Vec<RawScene>,
}

#[derive(Deserialize)]
struct RawScene {
    scene_id: String,
    utterances: Vec<RawUtterance>,
}

#[derive(Deserialize)]
struct RawUtterance {
    #[serde(default)]
    speakers: Vec<String>,
    tokens: Vec<Vec<String>>,
    #[serde(default)]
    character_entities: Vec<Vec<RawSpan>>,
}

#[derive(Deserialize)]
struct PlotFile {
    scenes: Vec<RawPlotScene>,
}

#[derive(Deserialize)]
struct RawPlotScene {
    scene_id: String,
    sentences: Vec<RawPlotSentence>,
}

#[derive(Deserialize)]
struct RawPlotSentence {
    tokens: Vec<String>,
    #[serde(default)]
    character_entities: Vec<RawSpan>,
}

#[derive(Deserialize)]
#[serde(try_from = "Vec<serde_json::Value>")]
struct RawSpan {
    begin: usize,
    end: usize,
    labels: Vec<String>,
}

impl TryFrom<Vec<serde_json::Value>> for RawSpan {
    type Error = String;

    fn try_from(v: Vec<serde_json::Value>) -> Result<Self, Self::Error> {
        let offset = |i: usize| {
            v.get(i)
                .and_then(serde_json::Value::as_u64)
                .map(|n| n as usize)
                .ok_or_else(|| format!("entity span needs integer offsets, got {v:?}"))
        };
        let labels = v[2.min(v.len())..]
            .iter()
            .map(|l| {
                l.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| format!("entity label must be a string, got {l}"))
            })
            .collect::<Result<_, _>>()?;
        Ok(RawSpan {
            begin: offset(0)?,
            end: offset(1)?,
            labels,
        })
    }
}

impl RawSpan {
    fn character(&self) -> Option<&str> {
        match self.labels.as_slice() {
            [name] if !name.starts_with('#') && !name.trim().is_empty() => Some(name),
            _ => None,
        }
    }
}

/// Reads every `*.json` file under `transcript_root` and `plot_root` and
/// builds a validated, anonymized corpus.
pub fn import_corpus(
    transcript_root: &Path,
    plot_root: &Path,
    options: &ImportOptions,
) -> Result<Corpus> {
    let mut scenes: BTreeMap<DialogueKey, RawScene> = BTreeMap::new();
    for path in json_files(transcript_root)? {
        let season: SeasonFile = parse_file(&path)?;
        for scene in season.episodes.into_iter().flat_map(|e| e.scenes) {
            let key = DialogueKey::parse_scene_id(&scene.scene_id).ok_or_else(|| {
                Error::malformed(&path, &scene.scene_id, "scene_id is not sNN_eNN_cNN")
            })?;
            if scenes.insert(key, scene).is_some() {
                return Err(Error::DuplicateDialogue(key.to_string()));
            }
        }
    }
    if scenes.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no scenes found under {}",
            transcript_root.display()
        )));
    }

    let mut plots: BTreeMap<DialogueKey, Vec<RawPlotSentence>> = BTreeMap::new();
    for path in json_files(plot_root)? {
        let file: PlotFile = parse_file(&path)?;
        for scene in file.scenes {
            let key = DialogueKey::parse_scene_id(&scene.scene_id).ok_or_else(|| {
                Error::malformed(&path, &scene.scene_id, "scene_id is not sNN_eNN_cNN")
            })?;
            if !scenes.contains_key(&key) {
                return Err(Error::DanglingPlot {
                    plot_id: plot_id(key, plots.get(&key).map_or(0, Vec::len)),
                    dialogue: key.to_string(),
                });
            }
            plots.entry(key).or_default().extend(scene.sentences);
        }
    }

    let mut dialogues = Vec::new();
    let mut sentences = Vec::new();
    for (key, scene) in scenes {
        let scene_plots = plots.remove(&key).unwrap_or_default();
        if scene_plots.is_empty() && !options.keep_unplotted {
            continue;
        }
        let (dialogue, mut plot_sentences) = anonymize(key, scene, scene_plots, options)?;
        dialogues.push(dialogue);
        sentences.append(&mut plot_sentences);
    }
    if dialogues.is_empty() {
        return Err(Error::EmptyCorpus(
            "no scene has an aligned plot sentence".to_owned(),
        ));
    }
    Corpus::new(dialogues, sentences)
}

fn plot_id(key: DialogueKey, ordinal: usize) -> String {
    format!("{key}_p{:02}", ordinal + 1)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        Error::malformed(
            path,
            format!("line {} col {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Character spans with absolute token offsets, sorted and non-overlapping.
fn character_spans<'a>(
    context: &str,
    sentences: impl Iterator<Item = (usize, usize, &'a [RawSpan])>,
) -> Result<Vec<(usize, usize, &'a str)>> {
    let mut spans = Vec::new();
    for (offset, len, raw) in sentences {
        for span in raw {
            let Some(name) = span.character() else {
                continue;
            };
            if span.begin >= span.end || span.end > len {
                return Err(Error::BadSpan {
                    context: context.to_owned(),
                    message: format!(
                        "span [{}, {}) for {name:?} outside sentence of {len} tokens",
                        span.begin, span.end
                    ),
                });
            }
            spans.push((offset + span.begin, offset + span.end, name));
        }
    }
    spans.sort_by_key(|s| (s.0, s.1));
    for pair in spans.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::BadSpan {
                context: context.to_owned(),
                message: format!(
                    "spans [{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                ),
            });
        }
    }
    Ok(spans)
}

/// Replaces each span with the rendered entity token; returns the new tokens
/// and the position of every entity token.
fn collapse(
    tokens: &[String],
    spans: &[(usize, usize, EntityRef)],
) -> (Vec<String>, Vec<(usize, EntityRef)>) {
    let mut out = Vec::with_capacity(tokens.len());
    let mut positions = Vec::with_capacity(spans.len());
    let mut next = spans.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        match next.peek() {
            Some(&&(start, end, entity)) if start == i => {
                positions.push((out.len(), entity));
                out.push(entity.render());
                i = end;
                next.next();
            }
            _ => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    (out, positions)
}

struct Numbering {
    order: Vec<String>,
    index: HashMap<String, usize>,
}

impl Numbering {
    fn see(&mut self, name: &str) {
        if !self.index.contains_key(name) {
            self.index.insert(name.to_owned(), self.order.len());
            self.order.push(name.to_owned());
        }
    }
}

fn anonymize(
    key: DialogueKey,
    scene: RawScene,
    plots: Vec<RawPlotSentence>,
    options: &ImportOptions,
) -> Result<(Dialogue, Vec<PlotSentence>)> {
    let mut utterances = Vec::with_capacity(scene.utterances.len());
    for (i, u) in scene.utterances.iter().enumerate() {
        let context = format!("{key} utterance {}", i + 1);
        let mut offset = 0;
        let mut per_sentence = Vec::with_capacity(u.tokens.len());
        for (s, sentence) in u.tokens.iter().enumerate() {
            let raw = u.character_entities.get(s).map_or(&[][..], Vec::as_slice);
            per_sentence.push((offset, sentence.len(), raw));
            offset += sentence.len();
        }
        let spans = character_spans(&context, per_sentence.into_iter())?;
        let speaker = u
            .speakers
            .iter()
            .map(|s| s.trim())
            .find(|s| !s.is_empty() && *s != "-");
        let tokens: Vec<String> = u.tokens.iter().flatten().cloned().collect();
        utterances.push((speaker, tokens, spans));
    }

    let mut plot_spans = Vec::with_capacity(plots.len());
    for (p, sentence) in plots.iter().enumerate() {
        let id = plot_id(key, p);
        let spans = character_spans(
            &id,
            std::iter::once((
                0,
                sentence.tokens.len(),
                sentence.character_entities.as_slice(),
            )),
        )?;
        plot_spans.push(spans);
    }

    // Speakers first, then utterance mentions, then plot-only characters.
    let mut numbering = Numbering {
        order: Vec::new(),
        index: HashMap::new(),
    };
    for (speaker, _, _) in &utterances {
        if let Some(name) = speaker {
            numbering.see(name);
        }
    }
    for (_, _, spans) in &utterances {
        for (_, _, name) in spans {
            numbering.see(name);
        }
    }
    for spans in &plot_spans {
        for (_, _, name) in spans {
            numbering.see(name);
        }
    }

    let mut ids: Vec<u16> = (0..numbering.order.len() as u16).collect();
    if let Some(seed) = options.shuffle_seed {
        rng::shuffle(
            &mut ids,
            &mut rng::seeded(rng::derive(seed, &key.to_string())),
        );
    }
    let entity_of = |name: &str| EntityRef::new(ids[numbering.index[name]]);

    let utterances = utterances
        .into_iter()
        .enumerate()
        .map(|(i, (speaker, tokens, spans))| {
            let spans: Vec<_> = spans
                .iter()
                .map(|&(b, e, n)| (b, e, entity_of(n)))
                .collect();
            let (tokens, positions) = collapse(&tokens, &spans);
            Utterance {
                index: i as u32 + 1,
                speaker: speaker.map_or(Speaker::Narrator, |s| Speaker::Entity(entity_of(s))),
                tokens,
                mentions: positions
                    .into_iter()
                    .map(|(p, entity)| Mention {
                        start: p,
                        end: p + 1,
                        entity,
                    })
                    .collect(),
            }
        })
        .collect();

    let sentences = plots
        .iter()
        .zip(&plot_spans)
        .enumerate()
        .map(|(p, (sentence, spans))| {
            let spans: Vec<_> = spans
                .iter()
                .map(|&(b, e, n)| (b, e, entity_of(n)))
                .collect();
            let (tokens, positions) = collapse(&sentence.tokens, &spans);
            PlotSentence {
                plot_id: plot_id(key, p),
                dialogue: key,
                tokens,
                mentions: positions
                    .into_iter()
                    .map(|(position, entity)| PlotMention { position, entity })
                    .collect(),
            }
        })
        .collect();

    let mut cast: Vec<CastEntry> = numbering
        .order
        .iter()
        .map(|name| CastEntry {
            entity: entity_of(name),
            character: Some(name.clone()),
        })
        .collect();
    cast.sort_by_key(|c| c.entity);

    Ok((
        Dialogue {
            key,
            cast,
            utterances,
        },
        sentences,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: serde_json::Value) {
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(dir.join(name), body.to_string()).unwrap();
    }

    fn setup(season: serde_json::Value, plots: serde_json::Value) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t"), "friends_season_01.json", season);
        write(&dir.path().join("p"), "plots_season_01.json", plots);
        dir
    }

    fn import(dir: &tempfile::TempDir, options: &ImportOptions) -> Result<Corpus> {
        import_corpus(&dir.path().join("t"), &dir.path().join("p"), options)
    }

    fn one_scene() -> serde_json::Value {
        serde_json::json!({"season_id": "s01", "episodes": [{"episode_id": "s01_e01", "scenes": [
            {"scene_id": "s01_e01_c01", "utterances": [
                {"speakers": ["Ross Geller"], "tokens": [["Hi", "Monica", "Geller", "!"], ["Where", "is", "Joey", "?"]],
                 "character_entities": [[[1, 3, "Monica Geller"]], [[2, 3, "Joey Tribbiani"]]]},
                {"speakers": [], "tokens": [["(", "They", "all", "leave", ")"]],
                 "character_entities": [[[1, 2, "Ross Geller", "Monica Geller"]]]},
                {"speakers": ["Monica Geller", "Ross Geller"], "tokens": [["You", "guys", "!"]],
                 "character_entities": [[[0, 2, "#GENERAL#"]]]}
            ]},
            {"scene_id": "s01_e01_c02", "utterances": [
                {"speakers": ["Chandler Bing"], "tokens": [["Hey", "."]]}
            ]}
        ]}]})
    }

    #[test]
    fn anonymizes_by_first_appearance_speakers_first() {
        let plots = serde_json::json!({"scenes": [{"scene_id": "s01_e01_c01", "sentences": [
            {"tokens": ["Joey", "is", "missing", "and", "Rachel", "Green", "worries", "."],
             "character_entities": [[0, 1, "Joey Tribbiani"], [4, 6, "Rachel Green"]]}
        ]}]});
        let dir = setup(one_scene(), plots);
        let corpus = import(&dir, &ImportOptions::default()).unwrap();
        // c02 has no plot and is dropped.
        assert_eq!(corpus.dialogues().len(), 1);
        let d = &corpus.dialogues()[0];
        let names: Vec<_> = d
            .cast
            .iter()
            .map(|c| c.character.clone().unwrap())
            .collect();
        assert_eq!(
            names,
            [
                "Ross Geller",
                "Monica Geller",
                "Joey Tribbiani",
                "Rachel Green"
            ]
        );
        let u1 = &d.utterances[0];
        assert_eq!(u1.speaker, Speaker::Entity(EntityRef::new(0)));
        assert_eq!(u1.tokens.join(" "), "Hi @ent01 ! Where is @ent02 ?");
        assert_eq!(
            u1.mentions[1],
            Mention {
                start: 5,
                end: 6,
                entity: EntityRef::new(2)
            }
        );
        assert_eq!(d.utterances[1].speaker, Speaker::Narrator);
        assert!(d.utterances[1].mentions.is_empty());
        assert_eq!(d.utterances[2].speaker, Speaker::Entity(EntityRef::new(1)));
        assert!(d.utterances[2].mentions.is_empty());

        let p = &corpus.plots()[0];
        assert_eq!(p.plot_id, "s01_e01_c01_p01");
        assert_eq!(p.tokens.join(" "), "@ent02 is missing and @ent03 worries .");
        // Rachel never appears in the dialogue.
        assert!(!d.entities().contains(&EntityRef::new(3)));
    }

    #[test]
    fn keep_unplotted_retains_all_scenes() {
        let dir = setup(one_scene(), serde_json::json!({"scenes": []}));
        assert_eq!(
            import(&dir, &ImportOptions::default()).unwrap_err().kind(),
            "EmptyCorpus"
        );
        let options = ImportOptions {
            keep_unplotted: true,
            ..Default::default()
        };
        assert_eq!(import(&dir, &options).unwrap().dialogues().len(), 2);
    }

    #[test]
    fn seeded_shuffle_permutes_ids_deterministically() {
        let plots = serde_json::json!({"scenes": [{"scene_id": "s01_e01_c01", "sentences": [
            {"tokens": ["Ross", "hugs", "Monica"], "character_entities": [[0, 1, "Ross Geller"], [2, 3, "Monica Geller"]]}
        ]}]});
        let dir = setup(one_scene(), plots);
        let options = ImportOptions {
            shuffle_seed: Some(11),
            ..Default::default()
        };
        let a = import(&dir, &options).unwrap();
        let b = import(&dir, &options).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<u16> = a.dialogues()[0]
            .cast
            .iter()
            .map(|c| c.entity.local_id())
            .collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn reports_malformed_json_with_location() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("t")).unwrap();
        std::fs::create_dir_all(dir.path().join("p")).unwrap();
        std::fs::write(dir.path().join("t/s.json"), "{\"episodes\": [\n{oops}]}").unwrap();
        let err = import(&dir, &ImportOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "MalformedFile");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn empty_transcript_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("t")).unwrap();
        std::fs::create_dir_all(dir.path().join("p")).unwrap();
        let err = import(&dir, &ImportOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "EmptyCorpus");
    }

    #[test]
    fn plot_for_unknown_scene_dangles() {
        let plots = serde_json::json!({"scenes": [{"scene_id": "s01_e09_c01", "sentences": [
            {"tokens": ["x"]}
        ]}]});
        let dir = setup(one_scene(), plots);
        let err = import(&dir, &ImportOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "DanglingPlot");
    }

    #[test]
    fn out_of_bounds_span_is_rejected() {
        let season = serde_json::json!({"episodes": [{"scenes": [{"scene_id": "s01_e01_c01", "utterances": [
            {"speakers": ["A"], "tokens": [["hi", "B"]], "character_entities": [[[1, 3, "B"]]]}
        ]}]}]});
        let plots = serde_json::json!({"scenes": [{"scene_id": "s01_e01_c01", "sentences": [{"tokens": ["A"]}]}]});
        let dir = setup(season, plots);
        assert_eq!(
            import(&dir, &ImportOptions::default()).unwrap_err().kind(),
            "BadSpan"
        );
    }
}
