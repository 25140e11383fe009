//! Seeded synthetic releases in the raw transcript/plot format.
//!
//! Used by the test suites and the `dialcloze synth` subcommand to exercise
//! the whole pipeline without the real corpus. Character names are two
//! tokens long, so imports also exercise span collapsing.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::rng::{below, seeded};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seasons: u32,
    pub episodes_per_season: u32,
    pub scenes_per_episode: u32,
    pub utterances_per_scene: (u32, u32),
    pub cast_size: u32,
    pub plots_per_scene: (u32, u32),
    pub mentions_per_plot: (u32, u32),
    /// Per mille chance that a plot mention names someone absent from the scene.
    pub outsider_per_mille: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seasons: 2,
            episodes_per_season: 24,
            scenes_per_episode: 3,
            utterances_per_scene: (3, 8),
            cast_size: 8,
            plots_per_scene: (0, 3),
            mentions_per_plot: (0, 4),
            outsider_per_mille: 30,
        }
    }
}

const WORDS: &[&str] = &[
    "the",
    "coffee",
    "apartment",
    "date",
    "job",
    "I",
    "you",
    "know",
    "what",
    "is",
    "going",
    "on",
    "with",
    "tonight",
    "really",
    "?",
    "!",
    ".",
    ",",
    "ring",
    "party",
    "wedding",
    "museum",
    "dinosaur",
    "couch",
    "sandwich",
    "believe",
    "think",
    "wait",
];

const VERBS: &[&str] = &[
    "asks", "tells", "meets", "calls", "hugs", "helps", "visits", "argues", "with", "about",
];

fn range(rng: &mut ChaCha8Rng, (lo, hi): (u32, u32)) -> u32 {
    lo + below(rng, u64::from(hi - lo + 1)) as u32
}

fn name(i: u32) -> [String; 2] {
    [format!("Person{i:02}"), "Smith".to_owned()]
}

fn words(rng: &mut ChaCha8Rng, n: u32, pool: &[&str]) -> Vec<String> {
    (0..n)
        .map(|_| pool[below(rng, pool.len() as u64) as usize].to_owned())
        .collect()
}

/// Tokens with `names` spliced in at random positions, plus the
/// `[begin, end, name]` spans of those names.
fn with_mentions(
    rng: &mut ChaCha8Rng,
    mut filler: Vec<String>,
    names: &[u32],
) -> (Vec<String>, Vec<Value>) {
    let mut slots: Vec<usize> = names
        .iter()
        .map(|_| below(rng, filler.len() as u64 + 1) as usize)
        .collect();
    slots.sort_unstable();
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let mut next = 0;
    for (slot, &who) in slots.iter().zip(names) {
        while next < *slot {
            tokens.push(std::mem::take(&mut filler[next]));
            next += 1;
        }
        let [first, last] = name(who);
        spans.push(json!([
            tokens.len(),
            tokens.len() + 2,
            format!("{first} {last}")
        ]));
        tokens.push(first);
        tokens.push(last);
    }
    tokens.extend(filler.drain(next..));
    (tokens, spans)
}

/// A file name and its JSON contents.
pub type ReleaseFile = (String, Value);

/// Season transcript files and plot files.
pub fn release(config: &SynthConfig, seed: u64) -> (Vec<ReleaseFile>, Vec<ReleaseFile>) {
    let mut rng = seeded(seed);
    let mut transcripts = Vec::new();
    let mut plot_files = Vec::new();
    for s in 1..=config.seasons {
        let mut episodes = Vec::new();
        let mut plot_scenes = Vec::new();
        for e in 1..=config.episodes_per_season {
            let mut scenes = Vec::new();
            for c in 1..=config.scenes_per_episode {
                let scene_id = format!("s{s:02}_e{e:02}_c{c:02}");
                let present = 2 + below(&mut rng, u64::from(config.cast_size - 1)) as u32;
                let mut cast: Vec<u32> = (0..config.cast_size).collect();
                crate::rng::shuffle(&mut cast, &mut rng);
                let (here, away) = cast.split_at(present.min(config.cast_size) as usize);

                let mut utterances = Vec::new();
                for _ in 0..range(&mut rng, config.utterances_per_scene) {
                    let narrator = below(&mut rng, 10) == 0;
                    let speaker = here[below(&mut rng, here.len() as u64) as usize];
                    let n_mentions = below(&mut rng, 3) as usize;
                    let mentioned: Vec<u32> = (0..n_mentions)
                        .map(|_| here[below(&mut rng, here.len() as u64) as usize])
                        .collect();
                    let n_words = 2 + below(&mut rng, 12) as u32;
                    let filler = words(&mut rng, n_words, WORDS);
                    let (tokens, spans) = with_mentions(&mut rng, filler, &mentioned);
                    let speakers = if narrator {
                        vec![]
                    } else {
                        let [first, last] = name(speaker);
                        vec![format!("{first} {last}")]
                    };
                    utterances.push(json!({
                        "speakers": speakers,
                        "tokens": [tokens],
                        "character_entities": [spans],
                    }));
                }
                scenes.push(json!({"scene_id": scene_id, "utterances": utterances}));

                let mut sentences = Vec::new();
                for _ in 0..range(&mut rng, config.plots_per_scene) {
                    let m = range(&mut rng, config.mentions_per_plot);
                    let mentioned: Vec<u32> = (0..m)
                        .map(|_| {
                            let outsider = !away.is_empty()
                                && below(&mut rng, 1000) < u64::from(config.outsider_per_mille);
                            let pool = if outsider { away } else { here };
                            pool[below(&mut rng, pool.len() as u64) as usize]
                        })
                        .collect();
                    let n_words = 3 + below(&mut rng, 10) as u32;
                    let filler = words(&mut rng, n_words, VERBS);
                    let (tokens, spans) = with_mentions(&mut rng, filler, &mentioned);
                    sentences.push(json!({"tokens": tokens, "character_entities": spans}));
                }
                if !sentences.is_empty() {
                    plot_scenes.push(json!({"scene_id": scene_id, "sentences": sentences}));
                }
            }
            episodes.push(json!({"episode_id": format!("s{s:02}_e{e:02}"), "scenes": scenes}));
        }
        transcripts.push((
            format!("friends_season_{s:02}.json"),
            json!({"season_id": format!("s{s:02}"), "episodes": episodes}),
        ));
        plot_files.push((
            format!("plots_season_{s:02}.json"),
            json!({"scenes": plot_scenes}),
        ));
    }
    (transcripts, plot_files)
}

/// Writes a release under `root/transcripts` and `root/plots`.
pub fn write_release(root: &Path, config: &SynthConfig, seed: u64) -> Result<()> {
    let (transcripts, plots) = release(config, seed);
    for (sub, files) in [("transcripts", transcripts), ("plots", plots)] {
        let dir = root.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, value) in files {
            let path = dir.join(name);
            let mut text = serde_json::to_string_pretty(&value).expect("json values serialize");
            text.push('\n');
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}
