//! The `dialcloze` command line.
//!
//! Every subcommand that writes artifacts writes them under `--out` together
//! with a `manifest.json` recording the resolved configuration and the
//! SHA-256 of every input and output file. Exit codes: 0 on success, 1 on a
//! domain error (one `error: <Kind>: <message>` line on stderr), 2 on a usage
//! error.
//!
//! `--config FILE` reads flat `key = value` lines (`#` comments allowed).
//! Keys are flag names without the leading dashes; `true`/`false` toggle
//! switches. Flags given on the command line win over the file, and the file
//! wins over built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{
    predict_heuristic, predict_loglinear, train_loglinear, HeuristicKind, Hyperparameters,
    LogLinearModel,
};
use crate::corpus::{
    compute_stats, export_canonical, import_canonical, import_corpus, Corpus, ImportOptions,
    DIALOGUES_FILE, PLOTS_FILE,
};
use crate::datasplit::{audit_leakage, split, PolicyKind, Split, SplitAssignment, SplitPolicy};
use crate::evalkit::{export_worksheet, read_predictions, score, write_predictions, EvalReport};
use crate::synth::{write_release, SynthConfig};
use crate::taskgen::{drop_unanswerable, generate, Query, Task};
use crate::{jsonl, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Parser, Debug)]
#[command(
    name = "dialcloze",
    version,
    about = "Cloze passage-completion benchmarks from multiparty dialogue",
    args_override_self = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct GlobalArgs {
    /// Output directory; created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// The only source of randomness for the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding dialogues.jsonl and plots.jsonl.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Timestamp recorded in the manifest; defaults to the current UTC time.
    #[arg(long, global = true)]
    timestamp: Option<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Import raw transcripts and plot summaries into canonical files.
    Ingest(IngestArgs),
    /// Print corpus statistics.
    Stats,
    /// Generate cloze queries.
    Generate(GenerateArgs),
    /// Assign queries to train/dev/test.
    Split(SplitArgs),
    /// Audit a split for plot-level leakage.
    Leakage(LeakageArgs),
    /// Score a prediction file.
    Evaluate(EvaluateArgs),
    /// Sample wrong predictions for manual error analysis.
    Worksheet(WorksheetArgs),
    /// Train or run a baseline predictor.
    Baseline(BaselineArgs),
    /// Write a synthetic raw release for testing.
    Synth(SynthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Stats => "stats",
            Command::Generate(_) => "generate",
            Command::Split(_) => "split",
            Command::Leakage(_) => "leakage",
            Command::Evaluate(_) => "evaluate",
            Command::Worksheet(_) => "worksheet",
            Command::Baseline(_) => "baseline",
            Command::Synth(_) => "synth",
        }
    }
}

const SUBCOMMANDS: [&str; 9] = [
    "ingest",
    "stats",
    "generate",
    "split",
    "leakage",
    "evaluate",
    "worksheet",
    "baseline",
    "synth",
];

#[derive(Args, Debug, Serialize)]
struct IngestArgs {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    plots: PathBuf,
    /// Permute @entNN ids per dialogue (requires --seed).
    #[arg(long)]
    shuffle_ids: bool,
    /// Keep scenes without any plot sentence.
    #[arg(long)]
    keep_unplotted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TaskChoice {
    Sv,
    Mvs,
    Tv,
    All,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "all")]
    task: TaskChoice,
    /// Drop queries whose gold entity is not among the candidates.
    #[arg(long)]
    drop_unanswerable: bool,
}

#[derive(Args, Debug, Serialize)]
struct SplitArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_parser = parse_policy)]
    policy: PolicyKind,
}

fn parse_policy(s: &str) -> std::result::Result<PolicyKind, String> {
    s.parse()
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse()
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    s.parse()
}

#[derive(Args, Debug, Serialize)]
struct LeakageArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    split: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[arg(long, value_parser = parse_task)]
    task: Task,
    /// Query file holding the gold answers.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Split file restricting the gold queries to --part.
    #[arg(long, requires = "part")]
    split: Option<PathBuf>,
    #[arg(long, value_parser = parse_split, requires = "split")]
    part: Option<Split>,
}

#[derive(Args, Debug, Serialize)]
struct WorksheetArgs {
    /// Report written by `evaluate`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BaselineAction {
    Train,
    Predict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BaselineKind {
    Random,
    Freq,
    Exclusion,
    FirstSpeaker,
    Loglinear,
}

#[derive(Args, Debug, Serialize)]
struct BaselineArgs {
    #[arg(value_enum)]
    action: BaselineAction,
    #[arg(long, value_enum)]
    kind: BaselineKind,
    #[arg(long, value_parser = parse_task)]
    task: Task,
    #[arg(long)]
    queries: PathBuf,
    /// Split file; training uses train/dev, prediction uses --part.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, value_parser = parse_split, default_value = "test")]
    part: Split,
    /// Model file for `predict --kind loglinear`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = Hyperparameters::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = Hyperparameters::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = Hyperparameters::default().l2)]
    l2: f64,
    #[arg(long, default_value_t = Hyperparameters::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = Hyperparameters::default().tv_margin)]
    tv_margin: f64,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    seasons: u32,
    #[arg(long, default_value_t = 24)]
    episodes: u32,
    #[arg(long, default_value_t = 3)]
    scenes: u32,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

enum Failure {
    Usage(clap::Error),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

fn usage(kind: ErrorKind, message: impl std::fmt::Display) -> Failure {
    Failure::Usage(Cli::command().error(kind, message))
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match execute(argv) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
        Err(Failure::Domain(e)) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: {}: {message}", e.kind());
            1
        }
    }
}

/// Reads `key = value` lines into flags.
fn config_flags(path: &Path) -> std::result::Result<Vec<OsString>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::malformed(path, format!("line {}", n + 1), "expected `key = value`")
        })?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{key}").into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

fn find_config(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn execute(mut argv: Vec<OsString>) -> std::result::Result<(), Failure> {
    if let Some(config) = find_config(&argv) {
        let flags = config_flags(&config)?;
        if let Some(pos) = argv
            .iter()
            .skip(1)
            .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        {
            // Right after the subcommand, so explicit flags later in argv win.
            let at = pos + 2;
            argv.splice(at..at, flags);
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(Failure::Usage)?;
    Runner::new(cli)?.run()
}

struct Runner {
    cli: Cli,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Runner {
    fn new(cli: Cli) -> std::result::Result<Self, Failure> {
        Ok(Runner {
            cli,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    fn out_dir(&self) -> std::result::Result<PathBuf, Failure> {
        let out = self.cli.global.out.clone().ok_or_else(|| {
            usage(
                ErrorKind::MissingRequiredArgument,
                format!("`{}` requires --out DIR", self.cli.command.name()),
            )
        })?;
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(out)
    }

    fn seed(&self, why: &str) -> std::result::Result<u64, Failure> {
        self.cli.global.seed.ok_or_else(|| {
            usage(
                ErrorKind::MissingRequiredArgument,
                format!("--seed N is required {why}"),
            )
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = digest_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn corpus(&mut self) -> std::result::Result<Corpus, Failure> {
        let dir = self.cli.global.corpus.clone().ok_or_else(|| {
            usage(
                ErrorKind::MissingRequiredArgument,
                format!("`{}` requires --corpus DIR", self.cli.command.name()),
            )
        })?;
        let corpus = import_canonical(&dir)?;
        self.input(&dir.join(DIALOGUES_FILE))?;
        if dir.join(PLOTS_FILE).exists() {
            self.input(&dir.join(PLOTS_FILE))?;
        }
        Ok(corpus)
    }

    fn queries(&mut self, path: &Path) -> Result<Vec<Query>> {
        let queries = jsonl::read(path)?;
        self.input(path)?;
        Ok(queries)
    }

    fn split_file(&mut self, path: &Path) -> Result<SplitAssignment> {
        let split = SplitAssignment::read(path)?;
        self.input(path)?;
        Ok(split)
    }

    fn run(mut self) -> std::result::Result<(), Failure> {
        let out = match &self.cli.command {
            Command::Stats if self.cli.global.out.is_none() => None,
            _ => Some(self.out_dir()?),
        };
        match self.cli.command.name() {
            "ingest" => self.ingest(out.as_deref().expect("out"))?,
            "stats" => self.stats(out.as_deref())?,
            "generate" => self.generate(out.as_deref().expect("out"))?,
            "split" => self.split(out.as_deref().expect("out"))?,
            "leakage" => self.leakage(out.as_deref().expect("out"))?,
            "evaluate" => self.evaluate(out.as_deref().expect("out"))?,
            "worksheet" => self.worksheet(out.as_deref().expect("out"))?,
            "baseline" => self.baseline(out.as_deref().expect("out"))?,
            "synth" => self.synth(out.as_deref().expect("out"))?,
            other => unreachable!("unhandled subcommand {other}"),
        }
        if let Some(out) = out {
            self.write_manifest(&out)?;
        }
        Ok(())
    }

    fn write_manifest(&self, out: &Path) -> Result<()> {
        let mut outputs = BTreeMap::new();
        for path in &self.outputs {
            let name = path
                .strip_prefix(out)
                .unwrap_or(path)
                .to_string_lossy()
                .replace('\\', "/");
            outputs.insert(name, digest_file(path)?);
        }
        let mut config = serde_json::Map::new();
        config.insert(
            "global".into(),
            serde_json::to_value(&self.cli.global).expect("args serialize"),
        );
        config.insert(
            "command".into(),
            serde_json::to_value(&self.cli.command).expect("args serialize"),
        );
        let manifest = RunManifest {
            toolkit: "dialcloze".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.cli.command.name().into(),
            seed: self.cli.global.seed,
            timestamp: self.cli.global.timestamp.clone().unwrap_or_else(|| {
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            }),
            config: serde_json::Value::Object(config),
            inputs: self.inputs.clone(),
            outputs,
        };
        jsonl::write_document(&out.join(MANIFEST_FILE), &manifest)
    }

    fn ingest(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Ingest(args) = &self.cli.command else {
            unreachable!()
        };
        let shuffle_seed = if args.shuffle_ids {
            Some(self.seed("with --shuffle-ids")?)
        } else {
            None
        };
        let options = ImportOptions {
            shuffle_seed,
            keep_unplotted: args.keep_unplotted,
        };
        let (transcripts, plots) = (args.transcripts.clone(), args.plots.clone());
        let corpus = import_corpus(&transcripts, &plots, &options)?;
        for dir in [&transcripts, &plots] {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for f in files {
                self.input(&f)?;
            }
        }
        self.outputs.extend(export_canonical(&corpus, out)?);
        println!(
            "ingested {} dialogues and {} plot sentences",
            corpus.dialogues().len(),
            corpus.plots().len()
        );
        Ok(())
    }

    fn stats(&mut self, out: Option<&Path>) -> std::result::Result<(), Failure> {
        let corpus = self.corpus()?;
        let stats = compute_stats(&corpus)?;
        print!("{stats}");
        if let Some(out) = out {
            let path = out.join("stats.json");
            jsonl::write_document(&path, &stats)?;
            self.outputs.push(path);
        }
        Ok(())
    }

    fn generate(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Generate(args) = &self.cli.command else {
            unreachable!()
        };
        let tasks: Vec<Task> = match args.task {
            TaskChoice::Sv => vec![Task::Sv],
            TaskChoice::Mvs => vec![Task::Mvs],
            TaskChoice::Tv => vec![Task::Tv],
            TaskChoice::All => Task::ALL.to_vec(),
        };
        let drop = args.drop_unanswerable;
        let corpus = self.corpus()?;
        for task in tasks {
            let mut queries = generate(&corpus, task);
            let total = queries.len();
            if drop {
                queries = drop_unanswerable(queries);
            }
            let path = out.join(task.queries_file());
            jsonl::write(&path, &queries)?;
            self.outputs.push(path);
            println!(
                "{task}: {} queries ({} dropped as unanswerable)",
                queries.len(),
                total - queries.len()
            );
        }
        Ok(())
    }

    fn split(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Split(args) = &self.cli.command else {
            unreachable!()
        };
        let (queries_path, kind) = (args.queries.clone(), args.policy);
        let policy = match kind {
            PolicyKind::Chronological => SplitPolicy::chronological(),
            PolicyKind::Random => SplitPolicy::random(self.seed("for --policy random")?),
            PolicyKind::RandomByPlot => {
                SplitPolicy::random_by_plot(self.seed("for --policy random-by-plot")?)
            }
        };
        let queries = self.queries(&queries_path)?;
        let assignment = split(&queries, policy)?;
        let path = out.join(policy.file_name());
        assignment.write(&path)?;
        self.outputs.push(path);
        let counts = assignment.counts_by_task(&queries);
        let counts_path = out.join("split_counts.json");
        jsonl::write_document(&counts_path, &counts)?;
        self.outputs.push(counts_path);
        for (task, c) in counts {
            println!(
                "{task}: train {} / dev {} / test {}",
                c.train, c.dev, c.test
            );
        }
        Ok(())
    }

    fn leakage(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Leakage(args) = &self.cli.command else {
            unreachable!()
        };
        let (queries_path, split_path) = (args.queries.clone(), args.split.clone());
        let queries = self.queries(&queries_path)?;
        let assignment = self.split_file(&split_path)?;
        let report = audit_leakage(&queries, &assignment)?;
        let path = out.join("leakage_report.json");
        jsonl::write_document(&path, &report)?;
        self.outputs.push(path);
        for pair in &report.pairs {
            println!(
                "{} vs {}: {} of {} queries leaked ({:.3})",
                pair.split, pair.against, pair.n_leaked, pair.n_queries, pair.fraction
            );
        }
        Ok(())
    }

    fn evaluate(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Evaluate(args) = &self.cli.command else {
            unreachable!()
        };
        let (task, gold_path, pred_path) = (args.task, args.gold.clone(), args.pred.clone());
        let restrict = args.split.clone().zip(args.part);
        let report = self.score(task, &gold_path, &pred_path, restrict)?;
        let path = out.join("report.json");
        jsonl::write_document(&path, &report)?;
        self.outputs.push(path);
        println!("{}", summary_line(&report));
        Ok(())
    }

    fn score(
        &mut self,
        task: Task,
        gold_path: &Path,
        pred_path: &Path,
        restrict: Option<(PathBuf, Split)>,
    ) -> Result<EvalReport> {
        let all_gold = self.queries(gold_path)?;
        let mut preds = read_predictions(pred_path)?;
        self.input(pred_path)?;
        let mut gold: Vec<Query> = all_gold
            .iter()
            .filter(|q| q.task == task)
            .cloned()
            .collect();
        let mut part = None;
        if let Some((split_path, which)) = restrict {
            let assignment = self.split_file(&split_path)?;
            gold.retain(|q| assignment.get(&q.query_id) == Some(which));
            let kept: std::collections::HashSet<&str> =
                gold.iter().map(|q| q.query_id.as_str()).collect();
            let known: std::collections::HashSet<&str> =
                all_gold.iter().map(|q| q.query_id.as_str()).collect();
            // Predictions for other parts are ignored; ids unknown to the
            // gold file are still reported.
            preds.retain(|p| {
                kept.contains(p.query_id.as_str()) || !known.contains(p.query_id.as_str())
            });
            part = Some(which);
        }
        let mut report = score(task, &gold, &preds)?;
        report.split = part;
        Ok(report)
    }

    fn worksheet(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Worksheet(args) = &self.cli.command else {
            unreachable!()
        };
        let (report_path, gold_path, pred_path, n) = (
            args.report.clone(),
            args.gold.clone(),
            args.pred.clone(),
            args.n,
        );
        let seed = self.seed("for worksheet sampling")?;
        let corpus = self.corpus()?;
        let report: EvalReport = jsonl::read_document(&report_path)?;
        self.input(&report_path)?;
        let gold = self.queries(&gold_path)?;
        let preds = read_predictions(&pred_path)?;
        self.input(&pred_path)?;
        let sheet = export_worksheet(&report, &corpus, &gold, &preds, n, seed)?;
        let path = out.join("worksheet.jsonl");
        sheet.write(&path)?;
        self.outputs.push(path);
        println!("sampled {} wrong predictions", sheet.rows.len());
        Ok(())
    }

    fn baseline(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Baseline(args) = &self.cli.command else {
            unreachable!()
        };
        let action = args.action;
        let kind = args.kind;
        let task = args.task;
        let queries_path = args.queries.clone();
        let split_path = args.split.clone();
        let part = args.part;
        let model_path = args.model.clone();
        let mut hp = Hyperparameters {
            learning_rate: args.learning_rate,
            epochs: args.epochs,
            l2: args.l2,
            batch_size: args.batch_size,
            seed: 0,
            tv_margin: args.tv_margin,
        };

        let corpus = self.corpus()?;
        let queries: Vec<Query> = self
            .queries(&queries_path)?
            .into_iter()
            .filter(|q| q.task == task)
            .collect();
        let assignment = match &split_path {
            Some(p) => Some(self.split_file(p)?),
            None => None,
        };

        match action {
            BaselineAction::Train => {
                if kind != BaselineKind::Loglinear {
                    return Err(usage(
                        ErrorKind::InvalidValue,
                        "only --kind loglinear can be trained",
                    ));
                }
                hp.seed = self.seed("for training")?;
                let Some(assignment) = assignment else {
                    return Err(usage(
                        ErrorKind::MissingRequiredArgument,
                        "`baseline train` requires --split FILE",
                    ));
                };
                let train = assignment.select(&queries, Split::Train);
                let dev = assignment.select(&queries, Split::Dev);
                let (model, log) = train_loglinear(&corpus, task, &train, &dev, &hp)?;
                let model_file = out.join("model.txt");
                model.save(&model_file)?;
                let log_file = out.join("training_log.json");
                jsonl::write_document(&log_file, &log)?;
                self.outputs.extend([model_file, log_file]);
                let best = &log.epochs[log.best_epoch];
                println!(
                    "trained on {} queries ({} skipped); best dev accuracy {:.4} at epoch {}",
                    train.len() - log.skipped_train,
                    log.skipped_train,
                    best.dev_accuracy,
                    log.best_epoch
                );
            }
            BaselineAction::Predict => {
                let selected: Vec<&Query> = match &assignment {
                    Some(a) => a.select(&queries, part),
                    None => queries.iter().collect(),
                };
                let model = match kind {
                    BaselineKind::Loglinear => {
                        let path = model_path.ok_or_else(|| {
                            usage(
                                ErrorKind::MissingRequiredArgument,
                                "`baseline predict --kind loglinear` requires --model FILE",
                            )
                        })?;
                        let model = LogLinearModel::load(&path)?;
                        self.input(&path)?;
                        Some(model)
                    }
                    _ => None,
                };
                let seed = match kind {
                    BaselineKind::Random => self.seed("for --kind random")?,
                    _ => self.cli.global.seed.unwrap_or(0),
                };
                let heuristic = match kind {
                    BaselineKind::Random => Some(HeuristicKind::Random),
                    BaselineKind::Freq => Some(HeuristicKind::MostFrequentEntity),
                    BaselineKind::Exclusion => Some(HeuristicKind::QueryExclusionFrequency),
                    BaselineKind::FirstSpeaker => Some(HeuristicKind::FirstSpeaker),
                    BaselineKind::Loglinear => None,
                };
                let mut preds = Vec::with_capacity(selected.len());
                for q in selected {
                    let dialogue = corpus
                        .dialogue(q.dialogue)
                        .ok_or_else(|| Error::UnknownDialogue(q.dialogue.to_string()))?;
                    let p = match (&model, heuristic) {
                        (Some(m), _) => predict_loglinear(m, dialogue, q)?,
                        (None, Some(h)) => predict_heuristic(dialogue, q, h, seed)?,
                        (None, None) => unreachable!("loglinear always has a model"),
                    };
                    preds.push(p);
                }
                let path = out.join("predictions.jsonl");
                write_predictions(&path, &preds)?;
                self.outputs.push(path);
                println!("wrote {} predictions", preds.len());
            }
        }
        Ok(())
    }

    fn synth(&mut self, out: &Path) -> std::result::Result<(), Failure> {
        let Command::Synth(args) = &self.cli.command else {
            unreachable!()
        };
        let config = SynthConfig {
            seasons: args.seasons,
            episodes_per_season: args.episodes,
            scenes_per_episode: args.scenes,
            ..Default::default()
        };
        let seed = self.seed("for synth")?;
        write_release(out, &config, seed)?;
        for sub in ["transcripts", "plots"] {
            let mut files: Vec<PathBuf> = std::fs::read_dir(out.join(sub))
                .map_err(|e| Error::io(out.join(sub), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            files.sort();
            self.outputs.extend(files);
        }
        println!("wrote synthetic release under {}", out.display());
        Ok(())
    }
}

fn summary_line(report: &EvalReport) -> String {
    let c = report.counters;
    match report.metrics {
        crate::evalkit::Metrics::Accuracy { accuracy } => format!(
            "{} accuracy {:.4} (C_r={} C_t={})",
            report.task, accuracy, c.c_r, c.c_t
        ),
        crate::evalkit::Metrics::F1 {
            precision,
            recall,
            f1,
        } => format!(
            "{} precision {:.4} recall {:.4} f1 {:.4} (C_r={} C_a={} C_g={})",
            report.task, precision, recall, f1, c.c_r, c.c_a, c.c_g
        ),
    }
}
