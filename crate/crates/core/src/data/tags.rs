//! IOBES tags and entity spans.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    O,
    B(String),
    I(String),
    E(String),
    S(String),
}

impl Tag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) | Tag::E(t) | Tag::S(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::O)
    }

    /// Whether `next` may follow `self` in a well-formed IOBES sequence.
    /// `None` on either side stands for the sentence boundary.
    pub fn allows(prev: Option<&Tag>, next: Option<&Tag>) -> bool {
        let opens = |t: Option<&Tag>| matches!(t, None | Some(Tag::O | Tag::B(_) | Tag::S(_)));
        match prev {
            None | Some(Tag::O) | Some(Tag::E(_)) | Some(Tag::S(_)) => opens(next),
            Some(Tag::B(a)) | Some(Tag::I(a)) => {
                matches!(next, Some(Tag::I(b)) | Some(Tag::E(b)) if a == b)
            }
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
            Tag::E(t) => write!(f, "E-{t}"),
            Tag::S(t) => write!(f, "S-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let bad = || Error::invalid(format!("malformed tag `{s}`"));
        let (prefix, ty) = s.split_once('-').ok_or_else(bad)?;
        if ty.is_empty() {
            return Err(bad());
        }
        let ty = ty.to_string();
        match prefix {
            "B" => Ok(Tag::B(ty)),
            "I" => Ok(Tag::I(ty)),
            "E" => Ok(Tag::E(ty)),
            "S" => Ok(Tag::S(ty)),
            _ => Err(bad()),
        }
    }
}

/// An entity mention over token positions `start..end` (0-based, end
/// exclusive).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl Span {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Span {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

/// Encodes non-overlapping spans over a sentence of length `n`.
pub fn to_iobes(spans: &[Span], n: usize) -> Result<Vec<Tag>> {
    let mut tags = vec![Tag::O; n];
    let mut used = vec![false; n];
    for s in spans {
        if s.is_empty() || s.end > n {
            return Err(Error::invalid(format!(
                "span {}..{} out of range for length {n}",
                s.start, s.end
            )));
        }
        if used[s.start..s.end].iter().any(|&u| u) {
            return Err(Error::invalid(format!(
                "span {}..{} overlaps another span",
                s.start, s.end
            )));
        }
        used[s.start..s.end].iter_mut().for_each(|u| *u = true);
        if s.len() == 1 {
            tags[s.start] = Tag::S(s.label.clone());
        } else {
            tags[s.start] = Tag::B(s.label.clone());
            for t in &mut tags[s.start + 1..s.end - 1] {
                *t = Tag::I(s.label.clone());
            }
            tags[s.end - 1] = Tag::E(s.label.clone());
        }
    }
    Ok(tags)
}

/// First position violating IOBES well-formedness, with a description.
pub(crate) fn iobes_violation(tags: &[Tag]) -> Option<(usize, String)> {
    for (i, tag) in tags.iter().enumerate() {
        let prev = if i == 0 { None } else { Some(&tags[i - 1]) };
        if !Tag::allows(prev, Some(tag)) {
            let prev = prev.map_or("<start>".to_string(), |t| t.to_string());
            return Some((
                i,
                format!("tag `{tag}` at position {i} cannot follow `{prev}`"),
            ));
        }
    }
    let last = tags.last()?;
    if !Tag::allows(Some(last), None) {
        let i = tags.len() - 1;
        return Some((i, format!("sequence ends inside an entity at position {i}")));
    }
    None
}

/// Decodes a well-formed IOBES sequence; the error names the offending
/// position.
pub fn from_iobes(tags: &[Tag]) -> Result<Vec<Span>> {
    if let Some((_, msg)) = iobes_violation(tags) {
        return Err(Error::invalid(msg));
    }
    let mut spans = Vec::new();
    let mut open = 0;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::S(t) => spans.push(Span::new(i, i + 1, t.clone())),
            Tag::B(_) => open = i,
            Tag::E(t) => spans.push(Span::new(open, i + 1, t.clone())),
            Tag::O | Tag::I(_) => {}
        }
    }
    Ok(spans)
}

/// Decodes any tag sequence. A stray `I-x` (no open `x` entity) opens an
/// entity as if it were `B-x`; a stray `E-x` becomes `S-x`. An entity that is
/// interrupted before its `E-` is dropped.
pub fn from_iobes_lenient(tags: &[Tag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => open = None,
            Tag::S(t) => {
                open = None;
                spans.push(Span::new(i, i + 1, t.clone()));
            }
            Tag::B(t) => open = Some((i, t)),
            Tag::I(t) => match open {
                Some((_, ty)) if ty == t => {}
                _ => open = Some((i, t)),
            },
            Tag::E(t) => {
                match open {
                    Some((start, ty)) if ty == t => spans.push(Span::new(start, i + 1, t.clone())),
                    _ => spans.push(Span::new(i, i + 1, t.clone())),
                }
                open = None;
            }
        }
    }
    spans
}

/// Converts a valid IOB2 sequence (entities start with `B-`) to IOBES.
pub fn iob2_to_iobes(tags: &[Tag]) -> Result<Vec<Tag>> {
    iob2_convert(tags).map_err(|(_, msg)| Error::invalid(msg))
}

pub(crate) fn iob2_convert(tags: &[Tag]) -> std::result::Result<Vec<Tag>, (usize, String)> {
    let mut out = Vec::with_capacity(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let continues = |t: &str| matches!(tags.get(i + 1), Some(Tag::I(n)) if n == t);
        match tag {
            Tag::O => out.push(Tag::O),
            Tag::B(t) => out.push(if continues(t) {
                Tag::B(t.clone())
            } else {
                Tag::S(t.clone())
            }),
            Tag::I(t) => {
                let inside = i > 0 && matches!(&tags[i - 1], Tag::B(p) | Tag::I(p) if p == t);
                if !inside {
                    return Err((
                        i,
                        format!("IOB2 tag `{tag}` at position {i} does not continue an entity"),
                    ));
                }
                out.push(if continues(t) {
                    Tag::I(t.clone())
                } else {
                    Tag::E(t.clone())
                });
            }
            Tag::E(_) | Tag::S(_) => {
                return Err((
                    i,
                    format!("IOBES tag `{tag}` at position {i} in an IOB2 sequence"),
                ))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn running_example_label_sequence() {
        let spans = [Span::new(0, 1, "PER"), Span::new(5, 6, "GPE")];
        assert_eq!(to_iobes(&spans, 6).unwrap(), tags("S-PER O O O O S-GPE"));
    }

    #[test]
    fn multi_token_span() {
        let spans = [Span::new(0, 3, "EVENT")];
        assert_eq!(
            to_iobes(&spans, 3).unwrap(),
            tags("B-EVENT I-EVENT E-EVENT")
        );
    }

    #[test]
    fn overlapping_spans_rejected() {
        let spans = [Span::new(0, 2, "A"), Span::new(1, 3, "B")];
        assert!(matches!(to_iobes(&spans, 4), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn malformed_sequence_reports_position() {
        let err = from_iobes(&tags("O B-PER O")).unwrap_err().to_string();
        assert!(err.contains("position 2"), "{err}");
        let err = from_iobes(&tags("O O I-PER")).unwrap_err().to_string();
        assert!(err.contains("position 2"), "{err}");
        assert!(from_iobes(&tags("B-PER I-PER")).is_err());
    }

    #[test]
    fn lenient_decoding_repairs_stray_tags() {
        let spans = from_iobes_lenient(&tags("I-PER E-PER O E-LOC B-ORG O"));
        assert_eq!(spans, vec![Span::new(0, 2, "PER"), Span::new(3, 4, "LOC")]);
    }

    #[test]
    fn iob2_conversion() {
        assert_eq!(
            iob2_to_iobes(&tags("B-PER I-PER I-PER O B-LOC B-LOC I-LOC")).unwrap(),
            tags("B-PER I-PER E-PER O S-LOC B-LOC E-LOC")
        );
        assert!(iob2_to_iobes(&tags("O I-PER")).is_err());
        assert!(iob2_to_iobes(&tags("B-PER I-LOC")).is_err());
    }

    #[test]
    fn tag_parsing() {
        assert!("X-PER".parse::<Tag>().is_err());
        assert!("B-".parse::<Tag>().is_err());
        assert_eq!(
            "S-WORK_OF_ART".parse::<Tag>().unwrap(),
            Tag::S("WORK_OF_ART".into())
        );
    }

    fn span_sets() -> impl Strategy<Value = (Vec<Span>, usize)> {
        (1usize..30).prop_flat_map(|n| {
            prop::collection::vec((0usize..4, 1usize..5, 0usize..3), 0..10).prop_map(move |raw| {
                let mut spans = Vec::new();
                let mut pos = 0;
                for (gap, len, ty) in raw {
                    let start = pos + gap;
                    if start + len > n {
                        break;
                    }
                    spans.push(Span::new(start, start + len, ["PER", "LOC", "ORG"][ty]));
                    pos = start + len;
                }
                (spans, n)
            })
        })
    }

    proptest! {
        #[test]
        fn spans_round_trip((spans, n) in span_sets()) {
            let tags = to_iobes(&spans, n).unwrap();
            prop_assert_eq!(from_iobes(&tags).unwrap(), spans.clone());
            prop_assert_eq!(from_iobes_lenient(&tags), spans);
        }
    }
}
