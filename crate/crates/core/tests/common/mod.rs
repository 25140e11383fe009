#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dialcloze::corpus::{
    Corpus, Dialogue, DialogueKey, EntityRef, Mention, PlotMention, PlotSentence, Speaker,
    Utterance,
};
use dialcloze::evalkit::PredictionRecord;
use dialcloze::rng::{below, seeded};
use dialcloze::taskgen::Query;
use rand_core::RngCore;

pub fn fixture_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn word(rng: &mut impl RngCore) -> String {
    const WORDS: [&str; 8] = ["so", "the", "ring", "asks", "about", "and", "coffee", "."];
    WORDS[below(rng, WORDS.len() as u64) as usize].to_owned()
}

/// A dialogue whose utterances mention or are spoken by entities
/// `0..n_entities`, all of them present.
pub fn dialogue(rng: &mut impl RngCore, key: DialogueKey, n_entities: u16) -> Dialogue {
    let mut utterances = Vec::new();
    for e in 0..n_entities {
        let mut tokens = vec![word(rng), EntityRef::new(e).render(), word(rng)];
        tokens.rotate_left(below(rng, 3) as usize);
        let start = tokens.iter().position(|t| t.starts_with('@')).unwrap();
        let speaker = if below(rng, 4) == 0 {
            Speaker::Narrator
        } else {
            Speaker::Entity(EntityRef::new(below(rng, u64::from(e) + 1) as u16))
        };
        utterances.push(Utterance {
            index: u32::from(e) + 1,
            speaker,
            tokens,
            mentions: vec![Mention {
                start,
                end: start + 1,
                entity: EntityRef::new(e),
            }],
        });
    }
    Dialogue {
        key,
        cast: vec![],
        utterances,
    }
}

/// A plot sentence with exactly `m` mentions drawn from `0..pool`.
pub fn plot(
    rng: &mut impl RngCore,
    plot_id: &str,
    key: DialogueKey,
    m: usize,
    pool: u16,
) -> PlotSentence {
    let mut tokens = Vec::new();
    let mut mentions = Vec::new();
    for _ in 0..m {
        for _ in 0..below(rng, 3) {
            tokens.push(word(rng));
        }
        let entity = EntityRef::new(below(rng, u64::from(pool)) as u16);
        mentions.push(PlotMention {
            position: tokens.len(),
            entity,
        });
        tokens.push(entity.render());
    }
    tokens.push(".".into());
    PlotSentence {
        plot_id: plot_id.to_owned(),
        dialogue: key,
        tokens,
        mentions,
    }
}

/// One dialogue and one plot with `m` mentions over `pool` entities, of
/// which the dialogue contains `present`.
pub fn single_plot_corpus(seed: u64, m: usize, pool: u16, present: u16) -> Corpus {
    let mut rng = seeded(seed);
    let key = DialogueKey::new(1, 1, 1);
    let d = dialogue(&mut rng, key, present);
    let p = plot(&mut rng, "s01_e01_c01_p00", key, m, pool);
    Corpus::new(vec![d], vec![p]).unwrap()
}

/// A multi-episode corpus for split and pipeline tests.
pub fn random_corpus(seed: u64, episodes: u32) -> Corpus {
    let mut rng = seeded(seed);
    let mut dialogues = Vec::new();
    let mut plots = Vec::new();
    for e in 1..=episodes {
        for c in 1..=2 {
            let key = DialogueKey::new(1, e, c);
            let n = 2 + below(&mut rng, 5) as u16;
            dialogues.push(dialogue(&mut rng, key, n));
            for p in 0..1 + below(&mut rng, 3) {
                let m = below(&mut rng, 5) as usize;
                plots.push(plot(&mut rng, &format!("{key}_p{p:02}"), key, m, n + 1));
            }
        }
    }
    Corpus::new(dialogues, plots).unwrap()
}

/// Random predictions over `queries`: some missing, some right, some wrong,
/// with TV predictions sometimes assigning only one variable.
pub fn random_predictions(rng: &mut impl RngCore, queries: &[Query]) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for q in queries {
        if below(rng, 5) == 0 {
            continue;
        }
        let mut assignments = BTreeMap::new();
        for (&v, &g) in &q.gold {
            if below(rng, 6) == 0 && q.gold.len() == 2 && assignments.is_empty() {
                continue;
            }
            let e = if below(rng, 2) == 0 {
                g
            } else {
                EntityRef::new(below(rng, 6) as u16)
            };
            assignments.insert(v, e);
        }
        if assignments.is_empty() {
            assignments.insert(*q.gold.keys().next().unwrap(), EntityRef::new(0));
        }
        out.push(PredictionRecord {
            query_id: q.query_id.clone(),
            assignments,
        });
    }
    out
}

/// Brute-force counters: (right, gold queries, predicted assignments, gold assignments).
pub fn recount(queries: &[Query], preds: &[PredictionRecord]) -> (usize, usize, usize, usize) {
    let (mut r, mut t, mut a, mut g) = (0, 0, 0, 0);
    for q in queries {
        t += 1;
        g += q.gold.len();
        let Some(p) = preds.iter().find(|p| p.query_id == q.query_id) else {
            continue;
        };
        a += p.assignments.len();
        r += q
            .gold
            .iter()
            .filter(|&(v, g)| p.assignments.get(v) == Some(g))
            .count();
    }
    (r, t, a, g)
}

pub const TIMESTAMP: &str = "2020-01-01T00:00:00Z";

pub fn dialcloze(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialcloze"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) {
    let mut full = args.to_vec();
    full.extend(["--timestamp", TIMESTAMP]);
    let out = dialcloze(dir, &full);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Runs the whole toolkit inside `dir` using relative paths only.
pub fn run_pipeline(dir: &Path) {
    ok(
        dir,
        &[
            "synth",
            "--out",
            "raw",
            "--seed",
            "7",
            "--seasons",
            "1",
            "--scenes",
            "2",
        ],
    );
    ok(
        dir,
        &[
            "ingest",
            "--transcripts",
            "raw/transcripts",
            "--plots",
            "raw/plots",
            "--out",
            "corpus",
        ],
    );
    ok(dir, &["stats", "--corpus", "corpus", "--out", "stats"]);
    ok(dir, &["generate", "--corpus", "corpus", "--out", "queries"]);
    for task in ["sv", "tv"] {
        let queries = format!("queries/queries_{task}.jsonl");
        let q = queries.as_str();
        ok(
            dir,
            &[
                "split",
                "--queries",
                q,
                "--policy",
                "chrono",
                "--out",
                &format!("{task}/chrono"),
            ],
        );
        ok(
            dir,
            &[
                "split",
                "--queries",
                q,
                "--policy",
                "random",
                "--seed",
                "3",
                "--out",
                &format!("{task}/random"),
            ],
        );
        let split = format!("{task}/chrono/split_chrono.jsonl");
        let s = split.as_str();
        ok(
            dir,
            &[
                "leakage",
                "--queries",
                q,
                "--split",
                &format!("{task}/random/split_random.jsonl"),
                "--out",
                &format!("{task}/leak"),
            ],
        );
        ok(
            dir,
            &[
                "baseline",
                "predict",
                "--kind",
                "random",
                "--task",
                task,
                "--queries",
                q,
                "--split",
                s,
                "--corpus",
                "corpus",
                "--seed",
                "5",
                "--out",
                &format!("{task}/random_pred"),
            ],
        );
        ok(
            dir,
            &[
                "baseline",
                "train",
                "--kind",
                "loglinear",
                "--task",
                task,
                "--queries",
                q,
                "--split",
                s,
                "--corpus",
                "corpus",
                "--seed",
                "5",
                "--epochs",
                "5",
                "--out",
                &format!("{task}/model"),
            ],
        );
        ok(
            dir,
            &[
                "baseline",
                "predict",
                "--kind",
                "loglinear",
                "--task",
                task,
                "--queries",
                q,
                "--split",
                s,
                "--corpus",
                "corpus",
                "--model",
                &format!("{task}/model/model.txt"),
                "--out",
                &format!("{task}/ll_pred"),
            ],
        );
        ok(
            dir,
            &[
                "evaluate",
                "--task",
                task,
                "--gold",
                q,
                "--pred",
                &format!("{task}/ll_pred/predictions.jsonl"),
                "--split",
                s,
                "--part",
                "test",
                "--out",
                &format!("{task}/eval"),
            ],
        );
        ok(
            dir,
            &[
                "worksheet",
                "--report",
                &format!("{task}/eval/report.json"),
                "--gold",
                q,
                "--pred",
                &format!("{task}/ll_pred/predictions.jsonl"),
                "--corpus",
                "corpus",
                "--n",
                "10",
                "--seed",
                "1",
                "--out",
                &format!("{task}/sheet"),
            ],
        );
    }
}

pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
            }
        }
    }
    out
}
