//! Cloze-style passage-completion benchmarks built from multiparty dialogue.
//!
//! The pipeline runs in stages, each depending only on the canonical
//! line-delimited files written by the previous one:
//!
//! 1. [`corpus`] imports season transcripts and plot summaries, anonymizes
//!    character mentions as `@entNN`, and reports corpus statistics.
//! 2. [`taskgen`] turns plot sentences into single-variable (SV),
//!    multiple-variables-same-entity (MVS) and two-variable (TV) queries.
//! 3. [`datasplit`] assigns queries to train/dev/test and audits leakage.
//! 4. [`baselines`] provides heuristic and log-linear reference predictors.
//! 5. [`evalkit`] scores prediction files and exports error worksheets.
//!
//! [`cli`] wires everything into the `dialcloze` binary.

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod datasplit;
pub mod error;
pub mod evalkit;
pub mod jsonl;
pub mod rng;
pub mod synth;
pub mod taskgen;

pub use error::{Error, Result};
