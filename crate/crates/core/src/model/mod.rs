//! Input representations, the three encoders and the emission/CRF head.

pub mod checkpoint;
mod config;
mod encoder;
mod layers;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{Architecture, Interaction, ModelConfig};
pub use layers::{char_rep, gcn_edges, gcn_layer, interact, GcnEdge, GcnParams};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::crf::{iobes_mask, CrfParams};
use crate::data::{EmbeddingTable, Sentence, Tag, Vocabulary, ROOT_RELATION};
use crate::error::{Error, Result};
use crate::nn::{LstmParams, ParamId, ParamStore};

/// A sentence mapped to vocabulary ids, ready for encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub words: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
    /// 0-based parent of each token; the root points at itself.
    pub parents: Vec<usize>,
    pub relations: Vec<usize>,
    /// Gold label ids; `None` for tags the label vocabulary lacks.
    pub labels: Vec<Option<usize>>,
    pub context: Option<Vec<Vec<f64>>>,
}

impl Prepared {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn root(&self) -> usize {
        (0..self.len())
            .find(|&i| self.parents[i] == i)
            .expect("prepared sentences come from valid trees")
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    word_emb: ParamId,
    chars: Option<(ParamId, LstmParams, LstmParams)>,
    rel_emb: Option<ParamId>,
    lstm: Vec<(LstmParams, LstmParams)>,
    mlp: Vec<(ParamId, ParamId)>,
    gcn: Vec<GcnParams>,
    emit_w: ParamId,
    emit_b: ParamId,
    trans: ParamId,
    mask: Option<Vec<bool>>,
}

/// Configuration, vocabulary and every learned tensor.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    layout: Layout,
}

fn lstm_names(prefix: &str) -> (String, String) {
    (format!("{prefix}.fwd"), format!("{prefix}.bwd"))
}

/// Registers every parameter in a fixed order so initialisation only
/// depends on the seed.
fn register(store: &mut ParamStore, cfg: &ModelConfig, vocab: &Vocabulary) -> Result<()> {
    const EMB_BOUND: f64 = 0.1;
    store.add_uniform("emb.word", vec![vocab.words.len(), cfg.word_dim], EMB_BOUND)?;
    if cfg.char_hidden > 0 {
        store.add_uniform(
            "emb.char",
            vec![vocab.chars.len(), cfg.char_emb_dim],
            EMB_BOUND,
        )?;
        let (f, b) = lstm_names("char");
        LstmParams::new(store, &f, cfg.char_emb_dim, cfg.char_hidden)?;
        LstmParams::new(store, &b, cfg.char_emb_dim, cfg.char_hidden)?;
    }
    if cfg.architecture == Architecture::Dglstm {
        store.add_uniform(
            "emb.rel",
            vec![vocab.relations.len(), cfg.rel_dim],
            EMB_BOUND,
        )?;
    }
    for l in 0..cfg.layers {
        let (f, b) = lstm_names(&format!("lstm.{l}"));
        LstmParams::new(store, &f, cfg.lstm_input_dim(l), cfg.hidden)?;
        LstmParams::new(store, &b, cfg.lstm_input_dim(l), cfg.hidden)?;
    }
    if cfg.architecture == Architecture::Dglstm && cfg.interaction == Interaction::Mlp {
        for l in 0..cfg.layers.saturating_sub(1) {
            store.add_xavier(&format!("interact.{l}.w1"), cfg.hidden, 2 * cfg.hidden)?;
            store.add_xavier(&format!("interact.{l}.w2"), cfg.hidden, 2 * cfg.hidden)?;
        }
    }
    if cfg.architecture == Architecture::BilstmGcn {
        for j in 0..cfg.gcn_layers {
            let d_in = cfg.gcn_input_dim(j);
            store.add_xavier(&format!("gcn.{j}.w"), cfg.hidden, d_in)?;
            store.add_zeros(&format!("gcn.{j}.b"), vec![cfg.hidden])?;
            if cfg.gcn_relation_weights {
                store.add_xavier(&format!("gcn.{j}.w2"), cfg.hidden, d_in)?;
                // One weight per relation plus one for the self-loop.
                store.add_uniform(
                    &format!("gcn.{j}.rel"),
                    vec![vocab.relations.len() + 1],
                    EMB_BOUND,
                )?;
            }
        }
    }
    let k = vocab.num_labels();
    store.add_xavier("emit.w", k, cfg.emission_input_dim())?;
    store.add_zeros("emit.b", vec![k])?;
    store.add_xavier("crf.trans", k + 2, k + 2)?;
    Ok(())
}

fn expect(store: &ParamStore, name: &str, shape: &[usize]) -> Result<ParamId> {
    let id = store
        .id(name)
        .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))?;
    let actual = store.value(id).shape();
    if actual != shape {
        return Err(Error::config(format!(
            "parameter `{name}` has shape {actual:?}, expected {shape:?}"
        )));
    }
    Ok(id)
}

fn expect_lstm(
    store: &ParamStore,
    prefix: &str,
    input: usize,
    hidden: usize,
) -> Result<LstmParams> {
    expect(store, &format!("{prefix}.w_ih"), &[4 * hidden, input])?;
    expect(store, &format!("{prefix}.w_hh"), &[4 * hidden, hidden])?;
    expect(store, &format!("{prefix}.bias"), &[4 * hidden])?;
    LstmParams::lookup(store, prefix)
}

impl Layout {
    fn resolve(store: &ParamStore, cfg: &ModelConfig, vocab: &Vocabulary) -> Result<Self> {
        let word_emb = expect(store, "emb.word", &[vocab.words.len(), cfg.word_dim])?;
        let chars = if cfg.char_hidden > 0 {
            let emb = expect(store, "emb.char", &[vocab.chars.len(), cfg.char_emb_dim])?;
            let (f, b) = lstm_names("char");
            Some((
                emb,
                expect_lstm(store, &f, cfg.char_emb_dim, cfg.char_hidden)?,
                expect_lstm(store, &b, cfg.char_emb_dim, cfg.char_hidden)?,
            ))
        } else {
            None
        };
        let rel_emb = if cfg.architecture == Architecture::Dglstm {
            Some(expect(
                store,
                "emb.rel",
                &[vocab.relations.len(), cfg.rel_dim],
            )?)
        } else {
            None
        };
        let lstm = (0..cfg.layers)
            .map(|l| {
                let (f, b) = lstm_names(&format!("lstm.{l}"));
                let d = cfg.lstm_input_dim(l);
                Ok((
                    expect_lstm(store, &f, d, cfg.hidden)?,
                    expect_lstm(store, &b, d, cfg.hidden)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mlp = if cfg.architecture == Architecture::Dglstm && cfg.interaction == Interaction::Mlp
        {
            (0..cfg.layers.saturating_sub(1))
                .map(|l| {
                    let shape = [cfg.hidden, 2 * cfg.hidden];
                    Ok((
                        expect(store, &format!("interact.{l}.w1"), &shape)?,
                        expect(store, &format!("interact.{l}.w2"), &shape)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let gcn = if cfg.architecture == Architecture::BilstmGcn {
            (0..cfg.gcn_layers)
                .map(|j| {
                    let d_in = cfg.gcn_input_dim(j);
                    let relation = if cfg.gcn_relation_weights {
                        Some((
                            expect(store, &format!("gcn.{j}.w2"), &[cfg.hidden, d_in])?,
                            expect(store, &format!("gcn.{j}.rel"), &[vocab.relations.len() + 1])?,
                        ))
                    } else {
                        None
                    };
                    Ok(GcnParams {
                        w: expect(store, &format!("gcn.{j}.w"), &[cfg.hidden, d_in])?,
                        b: expect(store, &format!("gcn.{j}.b"), &[cfg.hidden])?,
                        relation,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let k = vocab.num_labels();
        let mask = cfg.iobes_mask.then(|| {
            let labels: Vec<Tag> = (0..k).map(|i| vocab.label(i)).collect();
            iobes_mask(&labels)
        });
        Ok(Layout {
            word_emb,
            chars,
            rel_emb,
            lstm,
            mlp,
            gcn,
            emit_w: expect(store, "emit.w", &[k, cfg.emission_input_dim()])?,
            emit_b: expect(store, "emit.b", &[k])?,
            trans: expect(store, "crf.trans", &[k + 2, k + 2])?,
            mask,
        })
    }
}

impl Model {
    /// Fresh model. Rows of words covered by `embeddings` start from the
    /// pretrained vectors (exact match, then lowercase).
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        embeddings: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(seed);
        register(&mut store, &config, &vocab)?;
        let layout = Layout::resolve(&store, &config, &vocab)?;
        if let Some(emb) = embeddings {
            if emb.dim() != config.word_dim {
                return Err(Error::config(format!(
                    "embedding dim {} does not match word_dim {}",
                    emb.dim(),
                    config.word_dim
                )));
            }
            let table = store.value_mut(layout.word_emb);
            let dim = config.word_dim;
            for (id, word) in vocab.words.items().iter().enumerate().skip(2) {
                if let Some(v) = emb.lookup(word) {
                    table.data_mut()[id * dim..(id + 1) * dim].copy_from_slice(v);
                }
            }
        }
        if config.freeze_word_embeddings {
            store.set_trainable(layout.word_emb, false);
        }
        Ok(Model {
            config,
            vocab,
            store,
            layout,
        })
    }

    /// Reassembles a model from stored parameters, checking every shape.
    pub fn from_parts(config: ModelConfig, vocab: Vocabulary, store: ParamStore) -> Result<Self> {
        config.validate()?;
        let layout = Layout::resolve(&store, &config, &vocab)?;
        Ok(Model {
            config,
            vocab,
            store,
            layout,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.vocab.num_labels()
    }

    pub fn transitions(&self) -> ParamId {
        self.layout.trans
    }

    /// Current CRF parameters, including the IOBES mask when configured.
    pub fn crf(&self) -> CrfParams {
        CrfParams::new(
            self.num_labels(),
            self.store.value(self.layout.trans).data().to_vec(),
            self.layout.mask.clone(),
        )
        .expect("transition shape checked at build time")
    }

    pub fn prepare(&self, sentence: &Sentence, context: Option<&[Vec<f64>]>) -> Result<Prepared> {
        let n = sentence.len();
        let context = match (self.config.use_context_vectors, context) {
            (false, _) => None,
            (true, None) => {
                return Err(Error::invalid(
                    "model expects context vectors but none were supplied",
                ))
            }
            (true, Some(c)) => {
                if c.len() != n || c.iter().any(|v| v.len() != self.config.context_dim) {
                    return Err(Error::invalid(format!(
                        "context vectors must be {n} x {}",
                        self.config.context_dim
                    )));
                }
                Some(c.to_vec())
            }
        };
        Ok(Prepared {
            words: sentence
                .tokens
                .iter()
                .map(|t| self.vocab.word_id(&t.form))
                .collect(),
            chars: sentence
                .tokens
                .iter()
                .map(|t| self.vocab.char_ids(&t.form))
                .collect(),
            parents: (0..n).map(|i| sentence.parent_or_self(i)).collect(),
            relations: sentence
                .tokens
                .iter()
                .map(|t| {
                    if t.head == 0 {
                        ROOT_RELATION
                    } else {
                        self.vocab.relation_id(&t.relation, false)
                    }
                })
                .collect(),
            labels: sentence
                .tokens
                .iter()
                .map(|t| self.vocab.label_id(&t.tag))
                .collect(),
            context,
        })
    }
}

/// Inverted-dropout factors: each entry is 0 with probability `p`, else
/// `1 / (1 - p)`.
pub(crate) fn dropout_mask(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect()
}
