//! Entity/dependency corpus statistics and the subtree repair transform.
//!
//! Two subtree notions are used. An entity is a *connected* subtree when
//! exactly one of its tokens has its head outside the span (the anchor) and
//! every other token's head is inside. It is a *complete* subtree when, in
//! addition, the anchor's descendants are exactly the span.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::data::{check_tree, Sentence, Span};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubtreeMode {
    Complete,
    Connected,
}

/// Tokens of `span` whose head lies outside it (the root counts as outside).
fn exits(sentence: &Sentence, span: &Span) -> Vec<usize> {
    (span.start..span.end)
        .filter(|&i| sentence.parent(i).is_none_or(|p| !span.contains(p)))
        .collect()
}

/// `node` and everything below it, as a sorted list.
pub fn descendant_closure(sentence: &Sentence, node: usize) -> Vec<usize> {
    let kids = sentence.children();
    let mut out = vec![node];
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        for &c in &kids[n] {
            out.push(c);
            stack.push(c);
        }
    }
    out.sort_unstable();
    out
}

pub fn entity_is_connected_subtree(sentence: &Sentence, span: &Span) -> bool {
    exits(sentence, span).len() == 1
}

/// Complete-subtree test used for the ST ratio.
pub fn entity_is_subtree(sentence: &Sentence, span: &Span) -> bool {
    match exits(sentence, span).as_slice() {
        [anchor] => descendant_closure(sentence, *anchor)
            .into_iter()
            .eq(span.start..span.end),
        _ => false,
    }
}

pub fn entity_subtree(sentence: &Sentence, span: &Span, mode: SubtreeMode) -> bool {
    match mode {
        SubtreeMode::Complete => entity_is_subtree(sentence, span),
        SubtreeMode::Connected => entity_is_connected_subtree(sentence, span),
    }
}

/// In-span head chains `a -> b -> c` as `(b, c)` pairs.
fn grandchild_chains<'a>(
    sentence: &'a Sentence,
    span: &'a Span,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    (span.start..span.end).filter_map(move |c| {
        let b = sentence.parent(c).filter(|&b| span.contains(b))?;
        sentence.parent(b).filter(|&a| span.contains(a))?;
        Some((b, c))
    })
}

pub fn entity_has_grandchild_dep(sentence: &Sentence, span: &Span) -> bool {
    grandchild_chains(sentence, span).next().is_some()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub sentences: usize,
    pub entities: usize,
    /// Entities long enough to enter the ratios.
    pub considered: usize,
    pub st_ratio: f64,
    pub gd_ratio: f64,
    /// No entity reached the minimum length; both ratios are reported as 0.
    pub empty: bool,
    /// Entity count by length, over all entities.
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn dataset_stats(sentences: &[Sentence], min_entity_len: usize) -> DatasetStats {
    dataset_stats_with(sentences, min_entity_len, SubtreeMode::Complete)
}

pub fn dataset_stats_with(
    sentences: &[Sentence],
    min_entity_len: usize,
    mode: SubtreeMode,
) -> DatasetStats {
    let mut entities = 0;
    let mut considered = 0;
    let mut st = 0;
    let mut gd = 0;
    let mut length_histogram = BTreeMap::new();
    for s in sentences {
        for span in s.spans() {
            entities += 1;
            *length_histogram.entry(span.len()).or_insert(0) += 1;
            if span.len() < min_entity_len {
                continue;
            }
            considered += 1;
            st += entity_subtree(s, &span, mode) as usize;
            gd += entity_has_grandchild_dep(s, &span) as usize;
        }
    }
    let pct = |k: usize| {
        if considered == 0 {
            0.0
        } else {
            100.0 * k as f64 / considered as f64
        }
    };
    DatasetStats {
        sentences: sentences.len(),
        entities,
        considered,
        st_ratio: pct(st),
        gd_ratio: pct(gd),
        empty: considered == 0,
        length_histogram,
    }
}

/// Percentages of entity types (rows) against relation labels or relation
/// pairs (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `entries[row][col]` in percent.
    pub entries: Vec<Vec<f64>>,
    /// Count each row's percentages are taken over.
    pub denominators: Vec<usize>,
}

impl CorrelationMatrix {
    fn from_counts(
        counts: BTreeMap<String, BTreeMap<String, usize>>,
        denominators: BTreeMap<String, usize>,
    ) -> Self {
        let columns: Vec<String> = counts
            .values()
            .flat_map(|m| m.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut rows = Vec::new();
        let mut entries = Vec::new();
        let mut dens = Vec::new();
        for (row, &den) in &denominators {
            if den == 0 {
                continue;
            }
            let empty = BTreeMap::new();
            let c = counts.get(row).unwrap_or(&empty);
            entries.push(
                columns
                    .iter()
                    .map(|col| 100.0 * *c.get(col).unwrap_or(&0) as f64 / den as f64)
                    .collect(),
            );
            rows.push(row.clone());
            dens.push(den);
        }
        CorrelationMatrix {
            rows,
            columns,
            entries,
            denominators: dens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == col)?;
        Some(self.entries[r][c])
    }

    /// Drops columns whose largest entry is below `threshold` percent.
    pub fn filtered(&self, threshold: f64) -> CorrelationMatrix {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&c| self.entries.iter().any(|r| r[c] >= threshold))
            .collect();
        CorrelationMatrix {
            rows: self.rows.clone(),
            columns: keep.iter().map(|&c| self.columns[c].clone()).collect(),
            entries: self
                .entries
                .iter()
                .map(|r| keep.iter().map(|&c| r[c]).collect())
                .collect(),
            denominators: self.denominators.clone(),
        }
    }

    /// TSV with a header row; one decimal place unless `raw`.
    pub fn to_tsv(&self, raw: bool) -> String {
        let mut out = String::from("type");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.entries) {
            out.push_str(name);
            for v in row {
                if raw {
                    let _ = write!(out, "\t{v}");
                } else {
                    let _ = write!(out, "\t{v:.1}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Columns below this share in every row are hidden from rendered matrices.
pub const DEFAULT_COLUMN_THRESHOLD: f64 = 5.0;

/// Share of entity words of each type by incoming dependency relation.
pub fn entity_relation_matrix(sentences: &[Sentence]) -> CorrelationMatrix {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut dens: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for t in &s.tokens {
            if let Some(ty) = t.tag.entity_type() {
                *dens.entry(ty.to_string()).or_insert(0) += 1;
                *counts
                    .entry(ty.to_string())
                    .or_default()
                    .entry(t.relation.clone())
                    .or_insert(0) += 1;
            }
        }
    }
    CorrelationMatrix::from_counts(counts, dens)
}

/// Column label for a grandchild relation pair.
pub fn pair_label(upper: &str, lower: &str) -> String {
    format!("({upper},{lower})")
}

/// Share of entities (length at least 3) of each type containing an in-entity
/// chain whose middle and lower tokens carry the given relation pair.
pub fn grandchild_pair_matrix(sentences: &[Sentence]) -> CorrelationMatrix {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut dens: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for span in s.spans() {
            if span.len() < 3 {
                continue;
            }
            *dens.entry(span.label.clone()).or_insert(0) += 1;
            let pairs: BTreeSet<String> = grandchild_chains(s, &span)
                .map(|(b, c)| pair_label(&s.tokens[b].relation, &s.tokens[c].relation))
                .collect();
            let row = counts.entry(span.label.clone()).or_default();
            for p in pairs {
                *row.entry(p).or_insert(0) += 1;
            }
        }
    }
    CorrelationMatrix::from_counts(counts, dens)
}

/// Within-span tokens that have no ancestor inside the span.
fn top_tokens(sentence: &Sentence, span: &Span) -> Vec<usize> {
    (span.start..span.end)
        .filter(|&i| {
            let mut cur = sentence.parent(i);
            while let Some(p) = cur {
                if span.contains(p) {
                    return false;
                }
                cur = sentence.parent(p);
            }
            true
        })
        .collect()
}

/// Re-attaches heads so that every entity becomes a connected subtree.
///
/// Entities that already are connected subtrees are left alone. For each
/// other entity the anchor is the rightmost span token with no ancestor
/// inside the span (so the root, when inside, is always the anchor). Every
/// other span token is attached to the anchor, as is every outside token
/// hanging from a non-anchor span token. Relation labels are kept.
pub fn repair_trees(sentences: &[Sentence]) -> Result<Vec<Sentence>> {
    sentences.iter().map(repair_sentence).collect()
}

pub fn repair_sentence(sentence: &Sentence) -> Result<Sentence> {
    let mut out = sentence.clone();
    for span in sentence.spans() {
        if entity_is_connected_subtree(&out, &span) {
            continue;
        }
        let anchor = *top_tokens(&out, &span)
            .last()
            .expect("a non-empty span in a tree has a topmost token");
        let new_head = anchor + 1;
        for i in 0..out.len() {
            if i == anchor {
                continue;
            }
            let inside = span.contains(i);
            let hangs_from_span = out
                .parent(i)
                .is_some_and(|p| p != anchor && span.contains(p));
            if inside || hangs_from_span {
                out.tokens[i].head = new_head;
            }
        }
        if let Err(e) = check_tree(&out.heads()) {
            return Err(Error::Numeric(format!(
                "internal error: subtree repair broke the tree ({e:?})"
            )));
        }
    }
    Ok(out)
}
