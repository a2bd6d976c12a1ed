//! Command implementations behind the `dgner` binary.

pub mod run_config;

pub use run_config::{parse_override, parse_pairs, RunConfig};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use dgner::data::{
    from_iobes_lenient, load_context_vectors, load_embeddings, read_corpus, serialize, subsample,
    ContextVectors, Sentence, Span, Vocabulary,
};
use dgner::model::{load_checkpoint, save_checkpoint, Model};
use dgner::nn::{grad_check, GradCheckReport};
use dgner::stats::{
    dataset_stats_with, entity_relation_matrix, grandchild_pair_matrix, repair_trees, SubtreeMode,
};
use dgner::train::{
    bootstrap_test, epoch_log_tsv, evaluate, predict_all, train, EvalReport, SignificanceResult,
};
use dgner::{Error, Result};

/// Process exit status for an error: 2 for configuration, 3 for data and
/// I/O, 4 for numeric failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Numeric(_) => 4,
        Error::InvalidInput(_)
        | Error::Data { .. }
        | Error::Alignment { .. }
        | Error::Checkpoint(_)
        | Error::Io(_) => 3,
    }
}

fn read(path: &Path) -> Result<Vec<Sentence>> {
    read_corpus(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn context_for(cfg: &RunConfig, key: &str, corpus: &[Sentence]) -> Result<Option<ContextVectors>> {
    if !cfg.model.use_context_vectors {
        return Ok(None);
    }
    Ok(Some(load_context_vectors(cfg.required(key)?, corpus)?))
}

/// Files written by [`cmd_train`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub epoch_log: PathBuf,
    pub config: PathBuf,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    /// Test-set report of the selected model when `test` is configured.
    pub test: Option<EvalReport>,
}

/// Trains with dev-set selection. Writes `config.txt`, `epochs.tsv` and the
/// checkpoint (default `model.ckpt`) under `output_dir`, plus `test.tsv`
/// when a test corpus is configured.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    let train_path = cfg.required("train")?;
    let dev_path = cfg.required("dev")?;
    let out_dir = cfg.required("output_dir")?.to_path_buf();
    if cfg.model.use_context_vectors {
        cfg.required("context_train")?;
        cfg.required("context_dev")?;
        if cfg.path("test").is_some() {
            cfg.required("context_test")?;
        }
    }
    cfg.check_inputs()?;
    fs::create_dir_all(&out_dir)?;
    let config_path = out_dir.join("config.txt");
    write(&config_path, &cfg.to_text())?;

    let train_set = read(train_path)?;
    let dev_set = read(dev_path)?;
    let test_set = cfg.path("test").map(read).transpose()?;
    let embeddings = cfg
        .path("embeddings")
        .map(|p| load_embeddings(p, cfg.model.word_dim))
        .transpose()?;
    let mut held_out = dev_set.clone();
    held_out.extend(test_set.iter().flatten().cloned());
    let vocab = Vocabulary::build(
        &train_set,
        &held_out,
        embeddings.as_ref(),
        cfg.label_closure,
    )?;
    info!(
        "{} train / {} dev sentences, {} words, {} labels",
        train_set.len(),
        dev_set.len(),
        vocab.words.len(),
        vocab.num_labels()
    );
    let model = Model::new(
        cfg.model.clone(),
        vocab,
        embeddings.as_ref(),
        cfg.train.seed,
    )?;
    let train_ex = model.examples(
        &train_set,
        context_for(cfg, "context_train", &train_set)?.as_ref(),
    )?;
    let dev_ex = model.examples(
        &dev_set,
        context_for(cfg, "context_dev", &dev_set)?.as_ref(),
    )?;

    let outcome = train(model, &cfg.train, &train_ex, &dev_ex, |_| {})?;
    let epoch_log = out_dir.join("epochs.tsv");
    write(&epoch_log, &epoch_log_tsv(&outcome.log))?;
    let checkpoint = cfg
        .path("checkpoint")
        .map_or_else(|| out_dir.join("model.ckpt"), Path::to_path_buf);
    save_checkpoint(&outcome.best, &checkpoint)?;
    let best_dev_f1 = outcome.log[outcome.best_epoch - 1].dev_f1;

    let test = match &test_set {
        Some(t) => {
            let ctx = context_for(cfg, "context_test", t)?;
            let ex = outcome.best.examples(t, ctx.as_ref())?;
            let (report, _) = evaluate(&outcome.best, &ex)?;
            write(&out_dir.join("test.tsv"), &report.to_tsv())?;
            Some(report)
        }
        None => None,
    };
    Ok(TrainArtifacts {
        checkpoint,
        epoch_log,
        config: config_path,
        best_epoch: outcome.best_epoch,
        best_dev_f1,
        test,
    })
}

fn load_for_inference(
    checkpoint: &Path,
    corpus: &Path,
    context: Option<&Path>,
) -> Result<(Model, Vec<Sentence>, Option<ContextVectors>)> {
    let model = load_checkpoint(checkpoint)?;
    let sentences = read(corpus)?;
    let ctx = match (model.config.use_context_vectors, context) {
        (true, Some(p)) => Some(load_context_vectors(p, &sentences)?),
        (true, None) => {
            return Err(Error::Config(
                "model uses context vectors but none were given".into(),
            ))
        }
        (false, _) => None,
    };
    Ok((model, sentences, ctx))
}

/// Scores a checkpoint on a corpus.
pub fn cmd_eval(checkpoint: &Path, corpus: &Path, context: Option<&Path>) -> Result<EvalReport> {
    let (model, sentences, ctx) = load_for_inference(checkpoint, corpus, context)?;
    let ex = model.examples(&sentences, ctx.as_ref())?;
    Ok(evaluate(&model, &ex)?.0)
}

/// The corpus with a sixth column holding the predicted IOBES tag.
pub fn cmd_predict(checkpoint: &Path, corpus: &Path, context: Option<&Path>) -> Result<String> {
    let (model, mut sentences, ctx) = load_for_inference(checkpoint, corpus, context)?;
    let ex = model.examples(&sentences, ctx.as_ref())?;
    for (s, tags) in sentences.iter_mut().zip(predict_all(&model, &ex)?) {
        for (t, p) in s.tokens.iter_mut().zip(tags) {
            t.predicted = Some(p);
        }
    }
    Ok(serialize(&sentences))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsKind {
    Subtree,
    Grandchild,
    RelationMatrix,
    PairMatrix,
}

impl std::str::FromStr for StatsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "st" => Ok(StatsKind::Subtree),
            "gd" => Ok(StatsKind::Grandchild),
            "relmatrix" => Ok(StatsKind::RelationMatrix),
            "pairmatrix" => Ok(StatsKind::PairMatrix),
            _ => Err(Error::Config(format!(
                "unknown statistic `{s}` (expected st, gd, relmatrix or pairmatrix)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsOptions {
    pub min_len: usize,
    pub mode: SubtreeMode,
    /// Matrix columns whose largest entry is below this are dropped.
    pub threshold: f64,
    /// Full-precision numbers instead of one decimal.
    pub raw: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            min_len: 3,
            mode: SubtreeMode::Complete,
            threshold: dgner::stats::DEFAULT_COLUMN_THRESHOLD,
            raw: false,
        }
    }
}

fn number(x: f64, raw: bool) -> String {
    if raw {
        x.to_string()
    } else {
        format!("{x:.1}")
    }
}

/// Statistics as TSV.
pub fn cmd_stats(corpus: &Path, kind: StatsKind, opts: StatsOptions) -> Result<String> {
    let sentences = read(corpus)?;
    Ok(match kind {
        StatsKind::Subtree | StatsKind::Grandchild => {
            let st = dataset_stats_with(&sentences, opts.min_len, opts.mode);
            let (name, ratio) = match kind {
                StatsKind::Subtree => ("st_ratio", st.st_ratio),
                _ => ("gd_ratio", st.gd_ratio),
            };
            let mut out = String::from("statistic\tvalue\n");
            let _ = writeln!(out, "sentences\t{}", st.sentences);
            let _ = writeln!(out, "entities\t{}", st.entities);
            let _ = writeln!(out, "considered\t{}", st.considered);
            let _ = writeln!(out, "empty\t{}", st.empty);
            let _ = writeln!(out, "{name}\t{}", number(ratio, opts.raw));
            out
        }
        StatsKind::RelationMatrix => entity_relation_matrix(&sentences)
            .filtered(opts.threshold)
            .to_tsv(opts.raw),
        StatsKind::PairMatrix => grandchild_pair_matrix(&sentences)
            .filtered(opts.threshold)
            .to_tsv(opts.raw),
    })
}

/// Rewrites heads so every entity is a connected subtree.
pub fn cmd_repair(input: &Path, output: &Path) -> Result<usize> {
    let sentences = read(input)?;
    let repaired = repair_trees(&sentences)?;
    let changed = sentences
        .iter()
        .zip(&repaired)
        .filter(|(a, b)| a.heads() != b.heads())
        .count();
    write(output, &serialize(&repaired))?;
    Ok(changed)
}

/// `n` sentences sampled without replacement, in corpus order.
pub fn cmd_subsample(corpus: &Path, n: usize, seed: u64) -> Result<String> {
    let sentences = read(corpus)?;
    Ok(serialize(&subsample(&sentences, n, seed)?))
}

/// Finite-difference check of the full model gradient on the shortest
/// training sentence, with dropout off.
///
/// Every parameter entry is perturbed, so this is meant for small
/// configurations.
pub fn cmd_gradcheck(cfg: &RunConfig, eps: f64) -> Result<GradCheckReport> {
    let train_path = cfg.required("train")?;
    cfg.check_inputs()?;
    let sentences = read(train_path)?;
    let shortest = sentences
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| s.len())
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("training corpus is empty".into()))?;
    let vocab = Vocabulary::build(&sentences, &[], None, cfg.label_closure)?;
    let model = Model::new(cfg.model.clone(), vocab, None, cfg.train.seed)?;
    let ctx = context_for(cfg, "context_train", &sentences)?;
    let s = model.prepare(
        &sentences[shortest],
        ctx.as_ref().map(|c| c[shortest].as_slice()),
    )?;
    grad_check(|g| model.loss(g, &s, None), &model.store, eps)
}

type SpanSets = Vec<Vec<Span>>;

/// Gold spans and leniently decoded predicted spans of a prediction file.
fn predicted_spans(path: &Path) -> Result<(SpanSets, SpanSets)> {
    let sentences = read(path)?;
    let mut gold = Vec::with_capacity(sentences.len());
    let mut pred = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        let tags = s
            .tokens
            .iter()
            .map(|t| t.predicted.clone())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Alignment {
                sentence: i,
                message: format!("{}: missing predicted tag column", path.display()),
            })?;
        gold.push(s.spans());
        pred.push(from_iobes_lenient(&tags));
    }
    Ok((gold, pred))
}

/// Paired bootstrap over two prediction files of the same corpus.
pub fn cmd_bootstrap(
    a: &Path,
    b: &Path,
    resamples: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    let (gold, pred_a) = predicted_spans(a)?;
    let (gold_b, pred_b) = predicted_spans(b)?;
    if let Some(i) = (0..gold.len().min(gold_b.len())).find(|&i| gold[i] != gold_b[i]) {
        return Err(Error::Alignment {
            sentence: i,
            message: "gold entities differ between the two prediction files".into(),
        });
    }
    bootstrap_test(&gold, &pred_a, &pred_b, resamples, seed)
}
