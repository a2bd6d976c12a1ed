//! Exact-match span scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::data::{from_iobes_lenient, Span, Tag};
use crate::error::{Error, Result};

/// Number of length buckets: lengths 1 to 5, then one bucket for 6 and up.
pub const LENGTH_BUCKETS: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl Counts {
    pub fn predicted(&self) -> usize {
        self.tp + self.fp
    }

    pub fn gold(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn precision(&self) -> f64 {
        pct(self.tp, self.predicted())
    }

    pub fn recall(&self) -> f64 {
        pct(self.tp, self.gold())
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

pub fn length_bucket(len: usize) -> usize {
    len.clamp(1, LENGTH_BUCKETS) - 1
}

pub fn bucket_label(bucket: usize) -> String {
    if bucket + 1 == LENGTH_BUCKETS {
        format!(">={LENGTH_BUCKETS}")
    } else {
        (bucket + 1).to_string()
    }
}

/// Micro-averaged scores, by entity type and by length bucket.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub overall: Counts,
    pub by_type: BTreeMap<String, Counts>,
    pub by_length: [Counts; LENGTH_BUCKETS],
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.overall.precision()
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall()
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1()
    }

    /// Scores one sentence's span sets into the report.
    pub fn add_sentence(&mut self, gold: &[Span], pred: &[Span]) {
        let g: BTreeSet<&Span> = gold.iter().collect();
        let p: BTreeSet<&Span> = pred.iter().collect();
        let mut tally = |s: &Span, c: Counts| {
            self.overall.add(c);
            self.by_type.entry(s.label.clone()).or_default().add(c);
            self.by_length[length_bucket(s.len())].add(c);
        };
        for s in &g {
            if p.contains(s) {
                tally(
                    s,
                    Counts {
                        tp: 1,
                        fp: 0,
                        fn_: 0,
                    },
                );
            } else {
                tally(
                    s,
                    Counts {
                        tp: 0,
                        fp: 0,
                        fn_: 1,
                    },
                );
            }
        }
        for s in p.difference(&g) {
            tally(
                s,
                Counts {
                    tp: 0,
                    fp: 1,
                    fn_: 0,
                },
            );
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, name: &str, c: &Counts| {
            let _ = writeln!(
                out,
                "{name:<12} P {:6.2}  R {:6.2}  F1 {:6.2}  (tp {} fp {} fn {})",
                c.precision(),
                c.recall(),
                c.f1(),
                c.tp,
                c.fp,
                c.fn_
            );
        };
        line(&mut out, "overall", &self.overall);
        for (ty, c) in &self.by_type {
            line(&mut out, ty, c);
        }
        for (b, c) in self.by_length.iter().enumerate() {
            line(&mut out, &format!("len {}", bucket_label(b)), c);
        }
        out
    }

    /// Rows `scope  name  tp  fp  fn  precision  recall  f1`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("scope\tname\ttp\tfp\tfn\tprecision\trecall\tf1\n");
        let mut row = |scope: &str, name: &str, c: &Counts| {
            let _ = writeln!(
                out,
                "{scope}\t{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.tp,
                c.fp,
                c.fn_,
                c.precision(),
                c.recall(),
                c.f1()
            );
        };
        row("overall", "all", &self.overall);
        for (ty, c) in &self.by_type {
            row("type", ty, c);
        }
        for (b, c) in self.by_length.iter().enumerate() {
            row("length", &bucket_label(b), c);
        }
        out
    }
}

fn aligned<T>(gold: &[T], pred: &[T]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            sentence: gold.len().min(pred.len()),
            message: format!("{} gold sentences but {} predicted", gold.len(), pred.len()),
        });
    }
    Ok(())
}

pub fn evaluate_spans(gold: &[Vec<Span>], pred: &[Vec<Span>]) -> Result<EvalReport> {
    aligned(gold, pred)?;
    let mut report = EvalReport::default();
    for (g, p) in gold.iter().zip(pred) {
        report.add_sentence(g, p);
    }
    Ok(report)
}

/// Scores tag sequences; both sides are decoded leniently.
pub fn evaluate_tags(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> Result<EvalReport> {
    aligned(gold, pred)?;
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment {
                sentence: i,
                message: format!("{} gold tags but {} predicted", g.len(), p.len()),
            });
        }
    }
    let g: Vec<Vec<Span>> = gold.iter().map(|t| from_iobes_lenient(t)).collect();
    let p: Vec<Vec<Span>> = pred.iter().map(|t| from_iobes_lenient(t)).collect();
    evaluate_spans(&g, &p)
}

/// Per-bucket counts; each span falls in the bucket of its own length.
pub fn f1_by_length(gold: &[Vec<Span>], pred: &[Vec<Span>]) -> Result<[Counts; LENGTH_BUCKETS]> {
    Ok(evaluate_spans(gold, pred)?.by_length)
}
