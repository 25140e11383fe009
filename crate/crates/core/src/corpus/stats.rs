use std::fmt;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::{Error, Result};

/// Corpus-level counts and per-dialogue / per-plot means.
///
/// Tokens are counted after mention collapsing and include narrator lines.
/// Entities of a dialogue are the distinct ids occurring as a mention or as a
/// speaker; entities of a plot are its distinct mentioned ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_dialogues: usize,
    pub n_plots: usize,
    pub avg_utterances_per_dialogue: f64,
    pub avg_tokens_per_dialogue: f64,
    pub avg_tokens_per_plot: f64,
    pub avg_mentions_per_dialogue: f64,
    pub avg_mentions_per_plot: f64,
    pub avg_entities_per_dialogue: f64,
    pub avg_entities_per_plot: f64,
    pub max_entities_per_dialogue: usize,
    pub max_entities_per_plot: usize,
}

fn mean(values: impl Iterator<Item = usize>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    values.sum::<usize>() as f64 / n as f64
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("no dialogues to summarize".to_owned()));
    }
    let dialogues = corpus.dialogues();
    let plots = corpus.plots();
    let nd = dialogues.len();
    let np = plots.len();
    Ok(CorpusStats {
        n_dialogues: nd,
        n_plots: np,
        avg_utterances_per_dialogue: mean(dialogues.iter().map(|d| d.utterances.len()), nd),
        avg_tokens_per_dialogue: mean(dialogues.iter().map(|d| d.token_count()), nd),
        avg_tokens_per_plot: mean(plots.iter().map(|p| p.tokens.len()), np),
        avg_mentions_per_dialogue: mean(dialogues.iter().map(|d| d.mention_count()), nd),
        avg_mentions_per_plot: mean(plots.iter().map(|p| p.mentions.len()), np),
        avg_entities_per_dialogue: mean(dialogues.iter().map(|d| d.entities().len()), nd),
        avg_entities_per_plot: mean(plots.iter().map(|p| p.entities().len()), np),
        max_entities_per_dialogue: dialogues
            .iter()
            .map(|d| d.entities().len())
            .max()
            .unwrap_or(0),
        max_entities_per_plot: plots.iter().map(|p| p.entities().len()).max().unwrap_or(0),
    })
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("# of dialogs", thousands(self.n_dialogues)),
            ("# of plots", thousands(self.n_plots)),
            (
                "Avg. # of utterances per dialog",
                format!("{:.1}", self.avg_utterances_per_dialogue),
            ),
            (
                "Avg. # of tokens per dialog/plot",
                format!(
                    "{:.1} / {:.1}",
                    self.avg_tokens_per_dialogue, self.avg_tokens_per_plot
                ),
            ),
            (
                "Avg. # of mentions per dialog/plot",
                format!(
                    "{:.1} / {:.1}",
                    self.avg_mentions_per_dialogue, self.avg_mentions_per_plot
                ),
            ),
            (
                "Avg. # of entities per dialog/plot",
                format!(
                    "{:.1} / {:.1}",
                    self.avg_entities_per_dialogue, self.avg_entities_per_plot
                ),
            ),
            (
                "Max # of entities per dialog/plot",
                format!(
                    "{} / {}",
                    self.max_entities_per_dialogue, self.max_entities_per_plot
                ),
            ),
        ];
        writeln!(f, "{:<36} Count", "Type")?;
        for (label, value) in rows {
            writeln!(f, "{label:<36} {value}")?;
        }
        Ok(())
    }
}
