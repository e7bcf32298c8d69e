mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sentrel_core::bundle::{load_bundle, save_bundle};
use sentrel_core::corpus::{corpus_stats, generate_synthetic, load_corpus};
use sentrel_core::eval::{run_experiment, EvalReport};
use sentrel_core::pipeline::{train, SentencePrediction};
use sentrel_core::textproc::FallbackTagger;
use sentrel_core::{Corpus, CoreError, ErrorKind, ModelKind, PipelineConfig, StopwordList, StopwordMode};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "sentrel", version, about = "Relevant/irrelevant sentence classification for math word problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic labeled corpus as JSONL.
    GenSynthetic {
        #[command(flatten)]
        common: Common,
    },
    /// Corpus statistics: sentence counts, lengths, group sizes, POS table.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on a labeled corpus and save a bundle.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Label every statement of a corpus with a trained bundle (JSONL).
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Score a trained bundle on a labeled corpus.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Run the configuration grid with t-tests between cells.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Corpus file (JSONL, one problem per line).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; format follows the extension (.json, .txt, .jsonl).
    /// Repeatable.
    #[arg(long)]
    emit: Vec<PathBuf>,
    /// Model bundle directory.
    #[arg(long)]
    bundle: Option<PathBuf>,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Stopword handling for term features.
    #[arg(long, value_enum)]
    stopwords: Option<ModeArg>,
    /// Stopword handling for similarity vectors.
    #[arg(long = "sim-stopwords", value_enum)]
    sim_stopwords: Option<ModeArg>,
    #[arg(long, value_enum)]
    pos: Option<OnOff>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "terms_only")]
    TermsOnly,
    #[value(name = "terms_qs_sim")]
    TermsQsSim,
    #[value(name = "joint")]
    Joint,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::TermsOnly => ModelKind::TermsOnly,
            ModelArg::TermsQsSim => ModelKind::TermsQsSim,
            ModelArg::Joint => ModelKind::Joint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Remove,
    Keep,
}

impl From<ModeArg> for StopwordMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Remove => StopwordMode::Remove,
            ModeArg::Keep => StopwordMode::Keep,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

enum Failure {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::GenSynthetic { common } => gen_synthetic(&resolve(&common)?),
        Command::Stats { common } => stats(&resolve(&common)?),
        Command::Train { common, model } => {
            let mut cfg = resolve(&common)?;
            apply_model_flags(&mut cfg, &model);
            train_cmd(&cfg)
        }
        Command::Predict { common, model } => predict(&resolve(&common)?, model.map(Into::into)),
        Command::Evaluate { common, model } => evaluate(&resolve(&common)?, model.map(Into::into)),
        Command::Experiment { common } => experiment(&resolve(&common)?),
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &common.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if !common.emit.is_empty() {
        cfg.emit = common.emit.clone();
    }
    if let Some(b) = &common.bundle {
        cfg.bundle = Some(b.clone());
    }
    Ok(cfg)
}

fn apply_model_flags(cfg: &mut RunConfig, flags: &ModelFlags) {
    if let Some(m) = flags.model {
        cfg.model = m.into();
    }
    if let Some(m) = flags.stopwords {
        cfg.features.term_stopword_mode = m.into();
    }
    if let Some(m) = flags.sim_stopwords {
        cfg.features.sim_stopword_mode = m.into();
    }
    if let Some(p) = flags.pos {
        cfg.features.pos_enabled = matches!(p, OnOff::On);
    }
}

fn require_corpus(cfg: &RunConfig) -> Result<Corpus, Failure> {
    let path = cfg.corpus.as_ref().ok_or_else(|| Failure::Usage("--corpus is required".into()))?;
    Ok(load_corpus(path)?)
}

fn require_bundle(cfg: &RunConfig) -> Result<&Path, Failure> {
    cfg.bundle
        .as_deref()
        .ok_or_else(|| Failure::Usage("--bundle is required".into()))
}

fn stopwords(cfg: &RunConfig) -> Result<StopwordList, Failure> {
    Ok(match &cfg.stopword_list {
        Some(p) => StopwordList::load(p)?,
        None => StopwordList::default(),
    })
}

fn tagger(cfg: &RunConfig) -> Option<FallbackTagger> {
    cfg.pos_fallback.then(FallbackTagger::default)
}

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

enum Format {
    Json,
    Text,
    Jsonl,
}

fn format_of(path: &Path) -> Result<Format, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("txt") => Ok(Format::Text),
        Some("jsonl") => Ok(Format::Jsonl),
        _ => Err(Failure::Usage(format!(
            "cannot infer output format of {}; use .json, .txt or .jsonl",
            path.display()
        ))),
    }
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CoreError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| {
        Failure::Core(CoreError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Writes each `--emit` target in the format its extension names, or prints
/// `default` to stdout when there is none.
fn emit(cfg: &RunConfig, render: impl Fn(&Format) -> Option<String>, default: Format) -> CmdResult {
    if cfg.emit.is_empty() {
        let text = render(&default).expect("default format is supported");
        let mut out = std::io::stdout().lock();
        return match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
            // A closed reader (`| head`) is not an error.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Core(CoreError::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })),
            _ => Ok(()),
        };
    }
    for path in &cfg.emit {
        let fmt = format_of(path)?;
        let text = render(&fmt)
            .ok_or_else(|| Failure::Usage(format!("this command cannot write {}", path.display())))?;
        write_file(path, &text)?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn gen_synthetic(cfg: &RunConfig) -> CmdResult {
    let seed = cfg.effective_seed();
    announce_seed(seed);
    let corpus = generate_synthetic(&cfg.generator, seed)?;
    emit(
        cfg,
        |f| match f {
            Format::Jsonl => Some(corpus.to_jsonl()),
            _ => None,
        },
        Format::Jsonl,
    )
}

fn stats(cfg: &RunConfig) -> CmdResult {
    let corpus = require_corpus(cfg)?;
    let pipeline = PipelineConfig::default();
    let report = corpus_stats(&corpus, &pipeline, &stopwords(cfg)?);
    emit(
        cfg,
        |f| match f {
            Format::Json => Some(to_json(&report)),
            Format::Text => Some(report.to_text()),
            Format::Jsonl => None,
        },
        Format::Text,
    )
}

fn train_cmd(cfg: &RunConfig) -> CmdResult {
    let corpus = require_corpus(cfg)?;
    let dir = require_bundle(cfg)?;
    let seed = cfg.effective_seed();
    announce_seed(seed);
    let tc = cfg.train_config();
    let out = train(&corpus, &tc, stopwords(cfg)?, tagger(cfg))?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let mut snapshot = cfg.clone();
    snapshot.seed = Some(seed);
    let snapshot = serde_json::to_value(&snapshot).expect("config serializes");
    save_bundle(dir, &out.model, &snapshot)?;
    let m = &out.model;
    eprintln!(
        "trained {} on {} problems: c = {}, threshold = {:.6}, held-out F1 = {:.4}",
        m.kind,
        corpus.len(),
        m.svm.c,
        m.svm.threshold,
        out.calibration_f1
    );
    if let Some(j) = &m.joint {
        let p = j.params;
        eprintln!(
            "joint: alpha0 = {:.4}, alpha1 = {:.4}, beta11 = {:.4}, beta00 = {:.4} ({} iterations)",
            p.alpha0, p.alpha1, p.beta11, p.beta00, j.report.iterations
        );
    }
    Ok(())
}

fn predictions(cfg: &RunConfig, model: Option<ModelKind>) -> Result<(Corpus, ModelKind, Vec<Vec<SentencePrediction>>), Failure> {
    let corpus = require_corpus(cfg)?;
    let bundle = load_bundle(require_bundle(cfg)?)?;
    let kind = model.unwrap_or(bundle.model.kind);
    let preds = corpus
        .problems
        .iter()
        .map(|p| bundle.model.predict_problem(p, kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((corpus, kind, preds))
}

fn predict(cfg: &RunConfig, model: Option<ModelKind>) -> CmdResult {
    let (_, _, preds) = predictions(cfg, model)?;
    let mut lines = String::new();
    for s in preds.iter().flatten() {
        lines.push_str(&serde_json::to_string(s).expect("prediction serializes"));
        lines.push('\n');
    }
    emit(
        cfg,
        |f| match f {
            Format::Jsonl => Some(lines.clone()),
            _ => None,
        },
        Format::Jsonl,
    )
}

fn evaluate(cfg: &RunConfig, model: Option<ModelKind>) -> CmdResult {
    let (corpus, kind, preds) = predictions(cfg, model)?;
    corpus.require_labeled()?;
    let rows: Vec<(String, Vec<bool>, Vec<bool>)> = corpus
        .problems
        .iter()
        .zip(&preds)
        .map(|(p, ps)| {
            (
                p.id.clone(),
                ps.iter().map(|s| s.relevant).collect(),
                p.gold_bits().expect("labeled"),
            )
        })
        .collect();
    let report = EvalReport::from_predictions(kind.as_str(), kind.as_str(), &rows);
    emit(
        cfg,
        |f| match f {
            Format::Json => Some(to_json(&report)),
            Format::Text => Some(format!(
                "model {}\nmicro F1 (relevant) {:.4}\nF1 irrelevant {:.4}\nclass-mean F1 {:.4}\nmean per-problem F1 {:.4}\naccuracy {:.4}\n",
                report.model,
                report.micro_f1,
                report.irrelevant.f1,
                report.class_mean_f1,
                report.mean_problem_f1,
                report.accuracy
            )),
            Format::Jsonl => None,
        },
        Format::Text,
    )
}

fn experiment(cfg: &RunConfig) -> CmdResult {
    let corpus = require_corpus(cfg)?;
    let spec = cfg.experiment_spec();
    announce_seed(cfg.effective_seed());
    let report = run_experiment(&corpus, &spec, &stopwords(cfg)?, tagger(cfg).as_ref())?;
    emit(
        cfg,
        |f| match f {
            Format::Json => Some(report.to_json()),
            Format::Text => Some(report.to_text()),
            Format::Jsonl => None,
        },
        Format::Text,
    )
}
