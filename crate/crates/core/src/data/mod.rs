//! Corpus records, tag schemes, vocabularies and external vector files.

mod corpus;
mod embeddings;
mod sample;
mod tags;
mod vocab;

pub use corpus::{
    check_tree, parse_corpus, parse_corpus_str, read_corpus, serialize, write_corpus, Sentence,
    Token, TreeError,
};
pub use embeddings::{
    load_context_vectors, load_embeddings, parse_context_vectors, parse_embeddings, ContextVectors,
    EmbeddingTable,
};
pub use sample::{subsample, subsample_indices};
pub use tags::{from_iobes, from_iobes_lenient, iob2_to_iobes, to_iobes, Span, Tag};
pub use vocab::{
    build_vocab, Interner, Vocabulary, OUTSIDE, PAD, ROOT_RELATION, ROOT_RELATION_NAME, UNK,
};
