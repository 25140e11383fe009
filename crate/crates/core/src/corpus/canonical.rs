//! Canonical interchange files: `dialogues.jsonl` and `plots.jsonl`.
//!
//! One dialogue per line with keys `key`, `cast`, `utterances`; one plot
//! sentence per line with keys `plot_id`, `dialogue`, `tokens`, `mentions`.
//! Lines are written in corpus order, so exports are byte-reproducible.

use std::path::{Path, PathBuf};

use super::{Corpus, Dialogue, PlotSentence};
use crate::{jsonl, Error, Result};

pub const DIALOGUES_FILE: &str = "dialogues.jsonl";
pub const PLOTS_FILE: &str = "plots.jsonl";

/// Writes both canonical files into `out` and returns their paths.
pub fn export_canonical(corpus: &Corpus, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let dialogues = out.join(DIALOGUES_FILE);
    let plots = out.join(PLOTS_FILE);
    jsonl::write(&dialogues, corpus.dialogues())?;
    jsonl::write(&plots, corpus.plots())?;
    Ok(vec![dialogues, plots])
}

/// A missing `plots.jsonl` is read as an empty plot set.
pub fn import_canonical(dir: &Path) -> Result<Corpus> {
    let dialogues: Vec<Dialogue> = jsonl::read(&dir.join(DIALOGUES_FILE))?;
    let plots_path = dir.join(PLOTS_FILE);
    let plots: Vec<PlotSentence> = if plots_path.exists() {
        jsonl::read(&plots_path)?
    } else {
        Vec::new()
    };
    Corpus::new(dialogues, plots)
}
