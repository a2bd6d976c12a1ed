//! Seeded synthetic corpora for tests, benchmarks and the bundled toy data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{to_iobes, Sentence, Span, Tag, Token};

const RELATIONS: [&str; 8] = ["nsubj", "dobj", "amod", "prep", "pobj", "det", "nn", "conj"];
const TYPES: [&str; 3] = ["PER", "LOC", "ORG"];

/// Relation carried by every entity token in [`dependency_signal_corpus`].
pub const SIGNAL_RELATION: &str = "appos";

/// Uniformly shuffled attachment tree: 1-based heads, exactly one 0.
pub fn random_heads(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        heads[order[k]] = parent + 1;
    }
    heads
}

/// Non-overlapping spans of length 1 to `max_len` covering roughly `rate`
/// of the tokens.
pub fn random_spans(n: usize, max_len: usize, rate: f64, rng: &mut impl Rng) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(rate) {
            let len = rng.gen_range(1..=max_len).min(n - i);
            spans.push(Span::new(i, i + len, *TYPES.choose(rng).unwrap()));
            i += len + 1;
        } else {
            i += 1;
        }
    }
    spans
}

fn build(
    forms: Vec<String>,
    heads: Vec<usize>,
    relations: Vec<String>,
    tags: Vec<Tag>,
) -> Sentence {
    let tokens = forms
        .into_iter()
        .zip(heads)
        .zip(relations)
        .zip(tags)
        .map(|(((f, h), r), t)| Token::new(&f, h, &r, t))
        .collect();
    Sentence::new(tokens).expect("generated sentences are valid")
}

fn random_relations(heads: &[usize], rng: &mut impl Rng) -> Vec<String> {
    heads
        .iter()
        .map(|&h| {
            if h == 0 {
                "root".to_string()
            } else {
                RELATIONS.choose(rng).unwrap().to_string()
            }
        })
        .collect()
}

/// Random trees, relations, words and entities (up to 5 tokens long), for
/// fuzzing tree statistics.
pub fn random_tree_corpus(count: usize, max_len: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_len);
            let heads = random_heads(n, &mut rng);
            let relations = random_relations(&heads, &mut rng);
            let spans = random_spans(n, 5, 0.3, &mut rng);
            let forms = (0..n)
                .map(|_| format!("w{}", rng.gen_range(0..30)))
                .collect();
            build(forms, heads, relations, to_iobes(&spans, n).unwrap())
        })
        .collect()
}

/// Sentences whose entity words come from type-specific lexicons, so a
/// model can fit them by memorising words.
pub fn memorization_corpus(count: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(5..=12);
            let heads = random_heads(n, &mut rng);
            let relations = random_relations(&heads, &mut rng);
            let spans = random_spans(n, 3, 0.25, &mut rng);
            let tags = to_iobes(&spans, n).unwrap();
            let forms = tags
                .iter()
                .map(|t| match t.entity_type() {
                    Some(ty) => format!("{}{}", ty.to_lowercase(), rng.gen_range(0..15)),
                    None => format!("w{}", rng.gen_range(0..40)),
                })
                .collect();
            build(forms, heads, relations, tags)
        })
        .collect()
}

/// A token is an `S-ENT` entity exactly when its incoming relation is
/// [`SIGNAL_RELATION`]; word forms are drawn independently of the labels.
pub fn dependency_signal_corpus(count: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(6..=12);
            let heads = random_heads(n, &mut rng);
            let relations: Vec<String> = heads
                .iter()
                .map(|&h| {
                    if h == 0 {
                        "root".to_string()
                    } else if rng.gen_bool(0.3) {
                        SIGNAL_RELATION.to_string()
                    } else {
                        RELATIONS.choose(&mut rng).unwrap().to_string()
                    }
                })
                .collect();
            let tags = relations
                .iter()
                .map(|r| {
                    if r == SIGNAL_RELATION {
                        Tag::S("ENT".into())
                    } else {
                        Tag::O
                    }
                })
                .collect();
            let forms = (0..n)
                .map(|_| format!("w{}", rng.gen_range(0..50)))
                .collect();
            build(forms, heads, relations, tags)
        })
        .collect()
}
