use std::collections::HashMap;

use log::warn;

use super::corpus::Sentence;
use super::embeddings::EmbeddingTable;
use super::tags::Tag;
use crate::error::{Error, Result};

/// Dense string-to-id map; ids follow first insertion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interner {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    pub fn from_items(items: Vec<String>) -> Result<Self> {
        let mut out = Interner::default();
        for it in items {
            if out.index.contains_key(&it) {
                return Err(Error::invalid(format!("duplicate vocabulary entry `{it}`")));
            }
            out.insert(&it);
        }
        Ok(out)
    }

    pub fn insert(&mut self, s: &str) -> usize {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = self.items.len();
        self.items.push(s.to_string());
        self.index.insert(s.to_string(), id);
        id
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
/// Synthetic relation used for every root token.
pub const ROOT_RELATION: usize = 0;
pub const ROOT_RELATION_NAME: &str = "<root>";
/// Id of the `O` label.
pub const OUTSIDE: usize = 0;

/// Word, character, relation and label inventories.
///
/// Words and characters reserve `PAD = 0` and `UNK = 1`. Relation id 0 is the
/// synthetic root relation. Label id 0 is `O`; the label set is closed once
/// built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub words: Interner,
    pub chars: Interner,
    pub relations: Interner,
    pub labels: Interner,
}

impl Vocabulary {
    /// Builds from training sentences plus optional held-out sentences.
    ///
    /// Training words, characters, relations and labels are always added.
    /// Held-out words are added only when `embeddings` covers them, so their
    /// rows start from a pretrained vector; any other unseen word maps to
    /// the trainable `UNK` row. With `scheme_closure`, every entity type gets
    /// all four `B/I/E/S` labels.
    pub fn build(
        train: &[Sentence],
        held_out: &[Sentence],
        embeddings: Option<&EmbeddingTable>,
        scheme_closure: bool,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid(
                "cannot build a vocabulary from an empty corpus",
            ));
        }
        let mut words = Interner::default();
        let mut chars = Interner::default();
        for special in ["<pad>", "<unk>"] {
            words.insert(special);
            chars.insert(special);
        }
        let mut relations = Interner::default();
        relations.insert(ROOT_RELATION_NAME);
        let mut labels = Interner::default();
        labels.insert("O");

        for s in train {
            for t in &s.tokens {
                words.insert(&t.form);
                for c in t.form.chars() {
                    chars.insert(c.encode_utf8(&mut [0u8; 4]));
                }
                if t.head != 0 {
                    relations.insert(&t.relation);
                }
                labels.insert(&t.tag.to_string());
            }
        }
        if let Some(emb) = embeddings {
            for s in held_out {
                for t in &s.tokens {
                    if words.get(&t.form).is_none() && emb.lookup(&t.form).is_some() {
                        words.insert(&t.form);
                    }
                }
            }
        }
        if scheme_closure {
            let types: Vec<String> = labels
                .items()
                .iter()
                .filter_map(|l| l.parse::<Tag>().ok())
                .filter_map(|t| t.entity_type().map(str::to_string))
                .collect();
            for ty in types {
                for p in ["B", "I", "E", "S"] {
                    labels.insert(&format!("{p}-{ty}"));
                }
            }
        }
        Ok(Vocabulary {
            words,
            chars,
            relations,
            labels,
        })
    }

    /// Exact-match word id; unknown words map to `UNK`.
    pub fn word_id(&self, form: &str) -> usize {
        self.words.get(form).unwrap_or(UNK)
    }

    pub fn char_ids(&self, form: &str) -> Vec<usize> {
        form.chars()
            .map(|c| self.chars.get(c.encode_utf8(&mut [0u8; 4])).unwrap_or(UNK))
            .collect()
    }

    /// Relation id for a token; roots always use the synthetic root relation
    /// and unseen relations fall back to it with a warning.
    pub fn relation_id(&self, relation: &str, is_root: bool) -> usize {
        if is_root {
            return ROOT_RELATION;
        }
        match self.relations.get(relation) {
            Some(id) => id,
            None => {
                warn!("unknown dependency relation `{relation}`; using the root relation");
                ROOT_RELATION
            }
        }
    }

    pub fn label_id(&self, tag: &Tag) -> Option<usize> {
        self.labels.get(&tag.to_string())
    }

    pub fn label(&self, id: usize) -> Tag {
        self.labels
            .item(id)
            .parse()
            .expect("label vocabulary holds valid tags")
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }
}

/// [`Vocabulary::build`] with every sentence treated as training data and no
/// label closure.
pub fn build_vocab(
    sentences: &[Sentence],
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vocabulary> {
    Vocabulary::build(sentences, &[], embeddings, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_corpus_str, parse_embeddings};
    use std::collections::BTreeSet;

    fn corpus(text: &str) -> Vec<Sentence> {
        parse_corpus_str(text).unwrap()
    }

    const A: &str = "1\tJohn\t2\tnsubj\tS-PER\n2\truns\t0\troot\tO\n";
    const B: &str = "1\tMary\t2\tnsubj\tS-PER\n2\tsleeps\t0\troot\tO\n3\there\t2\tadvmod\tO\n";

    #[test]
    fn label_vocab_from_tags() {
        let v = build_vocab(&corpus(A), None).unwrap();
        assert_eq!(v.labels.items(), ["O", "S-PER"]);
        let closed = Vocabulary::build(&corpus(A), &[], None, true).unwrap();
        assert_eq!(
            closed.labels.items(),
            ["O", "S-PER", "B-PER", "I-PER", "E-PER"]
        );
    }

    #[test]
    fn unknown_words_map_to_unk() {
        let emb = parse_embeddings("john 0.5\n".as_bytes(), 1).unwrap();
        let v = Vocabulary::build(&corpus(A), &corpus(B), Some(&emb), false).unwrap();
        assert_ne!(v.word_id("John"), UNK);
        assert_eq!(v.word_id("Mary"), UNK);
        assert_eq!(v.word_id("never-seen"), UNK);
    }

    #[test]
    fn held_out_words_with_vectors_are_added() {
        let emb = parse_embeddings("mary 0.5\n".as_bytes(), 1).unwrap();
        let v = Vocabulary::build(&corpus(A), &corpus(B), Some(&emb), false).unwrap();
        assert_ne!(v.word_id("Mary"), UNK);
        assert_eq!(v.word_id("sleeps"), UNK);
    }

    #[test]
    fn root_relation_and_fallback() {
        let v = build_vocab(&corpus(A), None).unwrap();
        assert_eq!(v.relation_id("root", true), ROOT_RELATION);
        assert_ne!(v.relation_id("nsubj", false), ROOT_RELATION);
        assert_eq!(v.relation_id("advmod", false), ROOT_RELATION);
    }

    #[test]
    fn concatenation_is_union() {
        let mut both = corpus(A);
        both.extend(corpus(B));
        let joint = build_vocab(&both, None).unwrap();
        let sep_a = build_vocab(&corpus(A), None).unwrap();
        let sep_b = build_vocab(&corpus(B), None).unwrap();
        let set = |i: &Interner| i.items().iter().cloned().collect::<BTreeSet<_>>();
        for (j, a, b) in [
            (&joint.words, &sep_a.words, &sep_b.words),
            (&joint.chars, &sep_a.chars, &sep_b.chars),
            (&joint.relations, &sep_a.relations, &sep_b.relations),
            (&joint.labels, &sep_a.labels, &sep_b.labels),
        ] {
            let union: BTreeSet<_> = set(a).union(&set(b)).cloned().collect();
            assert_eq!(set(j), union);
        }
    }

    #[test]
    fn ids_are_stable() {
        let a = build_vocab(&corpus(B), None).unwrap();
        let b = build_vocab(&corpus(B), None).unwrap();
        assert_eq!(a, b);
    }
}
