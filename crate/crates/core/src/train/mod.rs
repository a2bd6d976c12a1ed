//! Training loop with dev-set selection, evaluation and significance testing.

pub mod bootstrap;
pub mod eval;

pub use bootstrap::{bootstrap_test, SignificanceResult, DEFAULT_RESAMPLES};
pub use eval::{evaluate_spans, evaluate_tags, f1_by_length, Counts, EvalReport, LENGTH_BUCKETS};

use std::fmt::Write as _;
use std::str::FromStr;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{from_iobes_lenient, ContextVectors, Sentence, Span, Tag};
use crate::error::{Error, Result};
use crate::model::{Architecture, Model, Prepared};
use crate::nn::{sgd_step, Graph, SgdConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub l2: f64,
    pub epochs: usize,
    pub clip: Option<f64>,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            batch: 10,
            l2: 1e-8,
            epochs: 100,
            clip: None,
            seed: 42,
            shuffle: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
}

impl TrainConfig {
    pub const KEYS: [&'static str; 7] = ["lr", "batch", "l2", "epochs", "clip", "seed", "shuffle"];

    /// Defaults for an architecture: the GCN model trains for 300 epochs
    /// with gradient clipping at 3.
    pub fn for_architecture(arch: Architecture) -> Self {
        match arch {
            Architecture::BilstmGcn => TrainConfig {
                epochs: 300,
                clip: Some(3.0),
                ..TrainConfig::default()
            },
            Architecture::Bilstm | Architecture::Dglstm => TrainConfig::default(),
        }
    }

    /// `clip` accepts a positive number or `off`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lr" => self.lr = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "clip" => {
                self.clip = match value {
                    "off" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            "shuffle" => self.shuffle = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.lr.to_string(),
            self.batch.to_string(),
            self.l2.to_string(),
            self.epochs.to_string(),
            self.clip.map_or("off".to_string(), |c| c.to_string()),
            self.seed.to_string(),
            self.shuffle.to_string(),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.batch == 0 || self.epochs == 0 {
            return Err(Error::config("lr, batch and epochs must be positive"));
        }
        if self.l2 < 0.0 || self.clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::config("l2 must be non-negative and clip positive"));
        }
        Ok(())
    }
}

/// A prepared sentence with its gold spans.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub prepared: Prepared,
    pub gold: Vec<Span>,
}

impl Model {
    pub fn examples(
        &self,
        sentences: &[Sentence],
        context: Option<&ContextVectors>,
    ) -> Result<Vec<Example>> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let ctx = context.map(|c| c[i].as_slice());
                Ok(Example {
                    prepared: self.prepare(s, ctx)?,
                    gold: s.spans(),
                })
            })
            .collect()
    }
}

/// Viterbi-decoded tags for every example.
pub fn predict_all(model: &Model, data: &[Example]) -> Result<Vec<Vec<Tag>>> {
    data.iter().map(|e| model.predict(&e.prepared)).collect()
}

/// Decodes and scores `data`; predicted tags are decoded leniently.
pub fn evaluate(model: &Model, data: &[Example]) -> Result<(EvalReport, Vec<Vec<Tag>>)> {
    let tags = predict_all(model, data)?;
    let mut report = EvalReport::default();
    for (e, t) in data.iter().zip(&tags) {
        report.add_sentence(&e.gold, &from_iobes_lenient(t));
    }
    Ok((report, tags))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_precision: f64,
    pub dev_recall: f64,
    pub dev_f1: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch\ttrain_loss\tdev_p\tdev_r\tdev_f1";

impl EpochLog {
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.epoch, self.train_loss, self.dev_precision, self.dev_recall, self.dev_f1
        )
    }
}

pub fn epoch_log_tsv(log: &[EpochLog]) -> String {
    let mut out = format!("{EPOCH_LOG_HEADER}\n");
    for e in log {
        let _ = writeln!(out, "{}", e.tsv_row());
    }
    out
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev F1 (earliest on ties).
    pub best: Model,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    pub updates: usize,
}

/// Seeded mini-batch SGD. Each batch's loss is the sum of its sentences'
/// NLLs and triggers one update.
///
/// Shuffling and dropout use separate ChaCha streams derived from
/// `cfg.seed`. `on_epoch` sees every log row as it is produced.
pub fn train(
    mut model: Model,
    cfg: &TrainConfig,
    train_set: &[Example],
    dev: &[Example],
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || dev.is_empty() {
        return Err(Error::invalid("training and dev sets must be non-empty"));
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);
    let sgd = SgdConfig {
        lr: cfg.lr,
        l2: cfg.l2,
        clip: cfg.clip,
    };
    let training_dropout = model.config.dropout > 0.0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Model)> = None;
    let mut updates = 0;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            let mut batch_loss = 0.0;
            for &i in chunk {
                let grads = {
                    let mut g = Graph::new(&model.store);
                    let rng = training_dropout.then_some(&mut dropout_rng);
                    let loss = model.loss(&mut g, &train_set[i].prepared, rng)?;
                    batch_loss += g.scalar(loss);
                    g.backward(loss)?
                };
                model.store.accumulate(&grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            sgd_step(&mut model.store, sgd)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {}: {e}", b + 1)))?;
            updates += 1;
            epoch_loss += batch_loss;
        }
        let (report, _) = evaluate(&model, dev)?;
        let row = EpochLog {
            epoch,
            train_loss: epoch_loss,
            dev_precision: report.precision(),
            dev_recall: report.recall(),
            dev_f1: report.f1(),
        };
        info!(
            "epoch {epoch}: loss {:.4} dev P {:.2} R {:.2} F1 {:.2}",
            row.train_loss, row.dev_precision, row.dev_recall, row.dev_f1
        );
        on_epoch(&row);
        if best.as_ref().is_none_or(|(f1, _, _)| row.dev_f1 > *f1) {
            best = Some((row.dev_f1, epoch, model.clone()));
        }
        log.push(row);
    }
    let (_, best_epoch, best) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best,
        best_epoch,
        log,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_corpus_str, Vocabulary};
    use crate::model::ModelConfig;

    const ONE: &str = "1\tAbramov\t2\tnsubj\tS-PER\n2\thad\t0\troot\tO\n3\tan\t4\tdet\tO\n\
4\taccident\t2\tdobj\tO\n5\tin\t4\tprep\tO\n6\tMoscow\t5\tpobj\tS-GPE\n";

    fn setup(dropout: f64) -> (Model, Vec<Example>) {
        let corpus = parse_corpus_str(ONE).unwrap();
        let vocab = Vocabulary::build(&corpus, &[], None, false).unwrap();
        let cfg = ModelConfig {
            hidden: 4,
            word_dim: 5,
            char_emb_dim: 3,
            char_hidden: 2,
            rel_dim: 3,
            dropout,
            ..ModelConfig::default()
        };
        let model = Model::new(cfg, vocab, None, 1).unwrap();
        let ex = model.examples(&corpus, None).unwrap();
        (model, ex)
    }

    #[test]
    fn single_sentence_single_update() {
        let (model, ex) = setup(0.5);
        let cfg = TrainConfig {
            epochs: 1,
            batch: 1,
            ..TrainConfig::default()
        };
        let out = train(model.clone(), &cfg, &ex, &ex, |_| {}).unwrap();
        assert_eq!(out.updates, 1);
        assert_eq!(out.log.len(), 1);
        let w = model.store.id("emit.w").unwrap();
        assert_ne!(out.best.store.value(w), model.store.value(w));
    }

    #[test]
    fn same_seed_same_log() {
        let (model, ex) = setup(0.5);
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let a = train(model.clone(), &cfg, &ex, &ex, |_| {}).unwrap();
        let b = train(model, &cfg, &ex, &ex, |_| {}).unwrap();
        assert_eq!(epoch_log_tsv(&a.log), epoch_log_tsv(&b.log));
    }

    #[test]
    fn small_lr_descends_monotonically() {
        let (model, ex) = setup(0.0);
        let cfg = TrainConfig {
            lr: 0.001,
            epochs: 10,
            ..TrainConfig::default()
        };
        let out = train(model, &cfg, &ex, &ex, |_| {}).unwrap();
        for w in out.log.windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss, "{:?}", out.log);
        }
    }

    #[test]
    fn config_keys_round_trip() {
        let mut cfg = TrainConfig::for_architecture(Architecture::BilstmGcn);
        assert_eq!((cfg.epochs, cfg.clip), (300, Some(3.0)));
        cfg.set("clip", "off").unwrap();
        let mut back = TrainConfig::default();
        for (k, v) in cfg.to_pairs() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, cfg);
        assert!(back
            .set("foo", "1")
            .unwrap_err()
            .to_string()
            .contains("`foo`"));
    }
}
