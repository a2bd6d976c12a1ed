//! Pretrained word vectors and precomputed per-token context vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;

use super::corpus::Sentence;
use crate::error::{Error, Result};

/// Word vectors keyed by surface form, in file order.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Inserts a vector unless the token is already present. Returns whether
    /// it was inserted.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for `{word}` has length {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.vectors.push(vector);
        Ok(true)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// Exact lookup, then lowercase.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.get(word).or_else(|| {
            let lower = word.to_lowercase();
            if lower != word {
                self.get(&lower)
            } else {
                None
            }
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

fn is_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

/// Parses `TOKEN v1 ... v_dim` rows with an optional `<count> <dim>` header.
pub fn parse_embeddings<R: BufRead>(reader: R, dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if line_no == 1 && is_header(line) {
            let declared: usize = line.split_whitespace().nth(1).unwrap().parse().unwrap();
            if declared != dim {
                return Err(Error::data(
                    line_no,
                    format!("header declares dimension {declared}, expected {dim}"),
                ));
            }
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields.next().expect("non-empty line");
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::data(line_no, format!("bad float `{f}` in vector for `{word}`"))
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::data(
                line_no,
                format!(
                    "vector for `{word}` has {} values, expected {dim}",
                    values.len()
                ),
            ));
        }
        if !table.insert(word, values)? {
            warn!("duplicate embedding for `{word}` at line {line_no}; keeping the first");
        }
    }
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable> {
    parse_embeddings(BufReader::new(File::open(path)?), dim)
}

/// Per-sentence, per-token vectors aligned with a corpus.
pub type ContextVectors = Vec<Vec<Vec<f64>>>;

/// Reads blank-line separated blocks, one line of floats per token.
pub fn parse_context_vectors<R: BufRead>(reader: R, corpus: &[Sentence]) -> Result<ContextVectors> {
    let mut blocks: ContextVectors = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let sentence = blocks.len();
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Alignment {
                    sentence,
                    message: format!("bad float `{f}` at line {}", i + 1),
                })
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(Error::Alignment {
                    sentence,
                    message: format!(
                        "vector of dimension {} at line {} where {d} was expected",
                        v.len(),
                        i + 1
                    ),
                })
            }
            _ => {}
        }
        current.push(v);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if blocks.len() != corpus.len() {
        return Err(Error::Alignment {
            sentence: blocks.len().min(corpus.len()),
            message: format!(
                "{} vector blocks for {} sentences",
                blocks.len(),
                corpus.len()
            ),
        });
    }
    for (i, (b, s)) in blocks.iter().zip(corpus).enumerate() {
        if b.len() != s.len() {
            return Err(Error::Alignment {
                sentence: i,
                message: format!("{} vectors for {} tokens", b.len(), s.len()),
            });
        }
    }
    Ok(blocks)
}

pub fn load_context_vectors(path: impl AsRef<Path>, corpus: &[Sentence]) -> Result<ContextVectors> {
    parse_context_vectors(BufReader::new(File::open(path)?), corpus)
}
