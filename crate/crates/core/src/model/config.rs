use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    Bilstm,
    Dglstm,
    BilstmGcn,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Bilstm => "bilstm",
            Architecture::Dglstm => "dglstm",
            Architecture::BilstmGcn => "bilstm-gcn",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilstm" => Ok(Architecture::Bilstm),
            "dglstm" => Ok(Architecture::Dglstm),
            "bilstm-gcn" => Ok(Architecture::BilstmGcn),
            _ => Err(Error::config(format!(
                "unknown architecture `{s}` (expected bilstm, dglstm or bilstm-gcn)"
            ))),
        }
    }
}

/// How a token's hidden state is combined with its parent's between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interaction {
    SelfConnection,
    Concat,
    Add,
    Mlp,
}

impl Interaction {
    pub const ALL: [Interaction; 4] = [
        Interaction::SelfConnection,
        Interaction::Concat,
        Interaction::Add,
        Interaction::Mlp,
    ];

    /// Output width for inputs of width `d`.
    pub fn output_dim(self, d: usize) -> usize {
        match self {
            Interaction::SelfConnection | Interaction::Add => d,
            Interaction::Concat => 2 * d,
            Interaction::Mlp => d / 2,
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interaction::SelfConnection => "self",
            Interaction::Concat => "concat",
            Interaction::Add => "add",
            Interaction::Mlp => "mlp",
        })
    }
}

impl FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(Interaction::SelfConnection),
            "concat" => Ok(Interaction::Concat),
            "add" => Ok(Interaction::Add),
            "mlp" => Ok(Interaction::Mlp),
            _ => Err(Error::config(format!(
                "unknown interaction `{s}` (expected self, concat, add or mlp)"
            ))),
        }
    }
}

/// Encoder architecture and dimensions.
///
/// `hidden` is the per-direction LSTM size, so every BiLSTM layer emits
/// `2 * hidden` features. `char_hidden = 0` turns the character BiLSTM off.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub layers: usize,
    pub interaction: Interaction,
    pub hidden: usize,
    pub word_dim: usize,
    pub char_emb_dim: usize,
    pub char_hidden: usize,
    pub rel_dim: usize,
    pub dropout: f64,
    pub gcn_layers: usize,
    pub gcn_relation_weights: bool,
    pub freeze_word_embeddings: bool,
    pub iobes_mask: bool,
    pub use_context_vectors: bool,
    pub context_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            architecture: Architecture::Dglstm,
            layers: 2,
            interaction: Interaction::Mlp,
            hidden: 200,
            word_dim: 100,
            char_emb_dim: 25,
            char_hidden: 50,
            rel_dim: 25,
            dropout: 0.5,
            gcn_layers: 1,
            gcn_relation_weights: true,
            freeze_word_embeddings: false,
            iobes_mask: false,
            use_context_vectors: false,
            context_dim: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
}

impl ModelConfig {
    pub const KEYS: [&'static str; 15] = [
        "architecture",
        "layers",
        "interaction",
        "hidden",
        "word_dim",
        "char_emb_dim",
        "char_hidden",
        "rel_dim",
        "dropout",
        "gcn_layers",
        "gcn_relation_weights",
        "freeze_word_embeddings",
        "iobes_mask",
        "use_context_vectors",
        "context_dim",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "architecture" => self.architecture = value.parse()?,
            "layers" => self.layers = parse(key, value)?,
            "interaction" => self.interaction = value.parse()?,
            "hidden" => self.hidden = parse(key, value)?,
            "word_dim" => self.word_dim = parse(key, value)?,
            "char_emb_dim" => self.char_emb_dim = parse(key, value)?,
            "char_hidden" => self.char_hidden = parse(key, value)?,
            "rel_dim" => self.rel_dim = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "gcn_layers" => self.gcn_layers = parse(key, value)?,
            "gcn_relation_weights" => self.gcn_relation_weights = parse(key, value)?,
            "freeze_word_embeddings" => self.freeze_word_embeddings = parse(key, value)?,
            "iobes_mask" => self.iobes_mask = parse(key, value)?,
            "use_context_vectors" => self.use_context_vectors = parse(key, value)?,
            "context_dim" => self.context_dim = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in [`ModelConfig::KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.architecture.to_string(),
            self.layers.to_string(),
            self.interaction.to_string(),
            self.hidden.to_string(),
            self.word_dim.to_string(),
            self.char_emb_dim.to_string(),
            self.char_hidden.to_string(),
            self.rel_dim.to_string(),
            self.dropout.to_string(),
            self.gcn_layers.to_string(),
            self.gcn_relation_weights.to_string(),
            self.freeze_word_embeddings.to_string(),
            self.iobes_mask.to_string(),
            self.use_context_vectors.to_string(),
            self.context_dim.to_string(),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(m.to_string()));
        if self.hidden == 0 || self.word_dim == 0 {
            return fail("hidden and word_dim must be positive");
        }
        if self.char_hidden > 0 && self.char_emb_dim == 0 {
            return fail("char_emb_dim must be positive when char_hidden is");
        }
        if self.architecture == Architecture::Dglstm && self.rel_dim == 0 {
            return fail("dglstm needs a positive rel_dim");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.architecture == Architecture::BilstmGcn && self.gcn_layers == 0 {
            return fail("bilstm-gcn needs at least one GCN layer");
        }
        if self.use_context_vectors && self.context_dim == 0 {
            return fail("use_context_vectors needs a positive context_dim");
        }
        Ok(())
    }

    /// Width of `w_i`: word embedding plus both character directions.
    pub fn word_rep_dim(&self) -> usize {
        self.word_dim + 2 * self.char_hidden
    }

    fn context_width(&self) -> usize {
        if self.use_context_vectors {
            self.context_dim
        } else {
            0
        }
    }

    /// Width of the encoder input `u_i` for the configured architecture.
    pub fn input_dim(&self) -> usize {
        let w = self.word_rep_dim();
        let base = match self.architecture {
            Architecture::Dglstm => 2 * w + self.rel_dim,
            Architecture::Bilstm | Architecture::BilstmGcn => w,
        };
        base + self.context_width()
    }

    /// Input width of BiLSTM layer `l` (0-based).
    pub fn lstm_input_dim(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim()
        } else if self.architecture == Architecture::Dglstm {
            self.interaction.output_dim(2 * self.hidden)
        } else {
            2 * self.hidden
        }
    }

    fn lstm_output_dim(&self) -> usize {
        if self.layers == 0 {
            self.input_dim()
        } else {
            2 * self.hidden
        }
    }

    /// Input width of GCN layer `j` (0-based).
    pub fn gcn_input_dim(&self, j: usize) -> usize {
        if j == 0 {
            self.lstm_output_dim()
        } else {
            self.hidden
        }
    }

    /// Width of the features fed to the emission projection.
    pub fn emission_input_dim(&self) -> usize {
        match self.architecture {
            Architecture::BilstmGcn => self.hidden,
            Architecture::Bilstm | Architecture::Dglstm => self.lstm_output_dim(),
        }
    }
}
