//! The five-column dependency/NER corpus format.
//!
//! One token per line with TAB-separated `INDEX FORM HEAD DEPREL NERTAG`.
//! `HEAD` is 1-based with `0` marking the root. A blank line ends a sentence
//! and lines starting with `#` are skipped. Prediction files written by the
//! tagger carry a sixth column with the predicted tag; the parser accepts it
//! and keeps it in [`Token::predicted`].
//!
//! Tags may be IOB2 or IOBES. A file is read as IOBES if any tag has an `E-`
//! or `S-` prefix and as IOB2 otherwise; IOB2 input is converted.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::tags::{from_iobes, iob2_convert, iobes_violation, Span, Tag};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    /// 1-based index of the parent token, `0` for the root.
    pub head: usize,
    pub relation: String,
    pub tag: Tag,
    pub predicted: Option<Tag>,
}

impl Token {
    pub fn new(form: &str, head: usize, relation: &str, tag: Tag) -> Self {
        Token {
            form: form.to_string(),
            head,
            relation: relation.to_string(),
            tag,
            predicted: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

/// Ways a head vector can fail to describe a tree. Positions are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    Empty,
    HeadOutOfRange(usize),
    SelfLoop(usize),
    NoRoot,
    MultipleRoots(usize, usize),
    Cycle(usize),
}

impl TreeError {
    pub fn position(&self) -> usize {
        match *self {
            TreeError::Empty | TreeError::NoRoot => 0,
            TreeError::HeadOutOfRange(i)
            | TreeError::SelfLoop(i)
            | TreeError::MultipleRoots(_, i)
            | TreeError::Cycle(i) => i,
        }
    }

    fn describe(&self) -> String {
        match self {
            TreeError::Empty => "empty sentence".into(),
            TreeError::HeadOutOfRange(i) => format!("head of token {} out of range", i + 1),
            TreeError::SelfLoop(i) => format!("token {} is its own head", i + 1),
            TreeError::NoRoot => "no token has head 0".into(),
            TreeError::MultipleRoots(a, b) => {
                format!("tokens {} and {} both have head 0", a + 1, b + 1)
            }
            TreeError::Cycle(i) => format!("token {} lies on a head cycle", i + 1),
        }
    }
}

/// Validates 1-based heads (0 = root): one root, no cycles, all tokens
/// reachable from the root.
pub fn check_tree(heads: &[usize]) -> std::result::Result<(), TreeError> {
    let n = heads.len();
    if n == 0 {
        return Err(TreeError::Empty);
    }
    let mut root = None;
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(TreeError::HeadOutOfRange(i));
        }
        if h == i + 1 {
            return Err(TreeError::SelfLoop(i));
        }
        if h == 0 {
            if let Some(r) = root {
                return Err(TreeError::MultipleRoots(r, i));
            }
            root = Some(i);
        }
    }
    if root.is_none() {
        return Err(TreeError::NoRoot);
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => return Err(TreeError::Cycle(cur)),
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match heads[cur] {
                0 => break,
                h => cur = h - 1,
            }
        }
        for p in path {
            state[p] = 2;
        }
    }
    Ok(())
}

impl Sentence {
    /// Builds a sentence after checking the tree and tag invariants.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        let s = Sentence { tokens };
        check_tree(&s.heads()).map_err(|e| Error::invalid(e.describe()))?;
        from_iobes(&s.tags())?;
        for (i, t) in s.tokens.iter().enumerate() {
            if t.relation.is_empty() {
                return Err(Error::invalid(format!(
                    "token {} has an empty relation",
                    i + 1
                )));
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// 1-based heads as stored in the file.
    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    /// 0-based parent of token `i`, `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        self.tokens[i].head.checked_sub(1)
    }

    /// 0-based parent with the root mapped to itself.
    pub fn parent_or_self(&self, i: usize) -> usize {
        self.parent(i).unwrap_or(i)
    }

    pub fn root(&self) -> usize {
        self.tokens
            .iter()
            .position(|t| t.head == 0)
            .expect("validated sentence has a root")
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut kids = vec![Vec::new(); self.len()];
        for i in 0..self.len() {
            if let Some(p) = self.parent(i) {
                kids[p].push(i);
            }
        }
        kids
    }

    pub fn tags(&self) -> Vec<Tag> {
        self.tokens.iter().map(|t| t.tag.clone()).collect()
    }

    /// Gold entity spans.
    pub fn spans(&self) -> Vec<Span> {
        from_iobes(&self.tags()).expect("validated sentence has well-formed tags")
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

struct RawToken {
    line: usize,
    form: String,
    head: usize,
    relation: String,
    tag: Tag,
    predicted: Option<Tag>,
}

fn parse_line(line_no: usize, line: &str, expected_index: usize) -> Result<RawToken> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 && fields.len() != 6 {
        return Err(Error::data(
            line_no,
            format!("expected 5 tab-separated fields, found {}", fields.len()),
        ));
    }
    let index: usize = fields[0]
        .parse()
        .map_err(|_| Error::data(line_no, format!("bad token index `{}`", fields[0])))?;
    if index != expected_index {
        return Err(Error::data(
            line_no,
            format!("token index {index} where {expected_index} was expected"),
        ));
    }
    if fields[1].is_empty() {
        return Err(Error::data(line_no, "empty word form"));
    }
    let head: usize = fields[2]
        .parse()
        .map_err(|_| Error::data(line_no, format!("bad head `{}`", fields[2])))?;
    if fields[3].is_empty() {
        return Err(Error::data(line_no, "empty dependency relation"));
    }
    let tag: Tag = fields[4]
        .parse()
        .map_err(|e: Error| Error::data(line_no, e.to_string()))?;
    let predicted = match fields.get(5) {
        Some(p) => Some(
            p.parse()
                .map_err(|e: Error| Error::data(line_no, e.to_string()))?,
        ),
        None => None,
    };
    Ok(RawToken {
        line: line_no,
        form: fields[1].to_string(),
        head,
        relation: fields[3].to_string(),
        tag,
        predicted,
    })
}

/// Reads every sentence from `reader`.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut blocks: Vec<Vec<RawToken>> = Vec::new();
    let mut current: Vec<RawToken> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_line(line_no, line, current.len() + 1)?);
    }
    if !current.is_empty() {
        blocks.push(current);
    }

    let iobes = blocks
        .iter()
        .flatten()
        .any(|t| matches!(t.tag, Tag::E(_) | Tag::S(_)));

    let mut sentences = Vec::with_capacity(blocks.len());
    for block in blocks {
        let heads: Vec<usize> = block.iter().map(|t| t.head).collect();
        if let Err(e) = check_tree(&heads) {
            return Err(Error::data(block[e.position()].line, e.describe()));
        }
        let raw_tags: Vec<Tag> = block.iter().map(|t| t.tag.clone()).collect();
        let tags = if iobes {
            match iobes_violation(&raw_tags) {
                Some(v) => Err(v),
                None => Ok(raw_tags),
            }
        } else {
            iob2_convert(&raw_tags)
        };
        let tags = tags.map_err(|(pos, msg)| Error::data(block[pos].line, msg))?;
        let tokens = block
            .into_iter()
            .zip(tags)
            .map(|(raw, tag)| Token {
                form: raw.form,
                head: raw.head,
                relation: raw.relation,
                tag,
                predicted: raw.predicted,
            })
            .collect();
        sentences.push(Sentence { tokens });
    }
    Ok(sentences)
}

pub fn parse_corpus_str(text: &str) -> Result<Vec<Sentence>> {
    parse_corpus(text.as_bytes())
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let file = File::open(path)?;
    parse_corpus(BufReader::new(file))
}

/// Canonical serialisation: every sentence is followed by one blank line.
pub fn serialize(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for (i, t) in s.tokens.iter().enumerate() {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.form,
                t.head,
                t.relation,
                t.tag
            );
            if let Some(p) = &t.predicted {
                let _ = write!(out, "\t{p}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_corpus<W: Write>(mut w: W, sentences: &[Sentence]) -> io::Result<()> {
    w.write_all(serialize(sentences).as_bytes())
}
