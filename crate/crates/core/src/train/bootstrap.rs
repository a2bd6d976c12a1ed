//! Paired bootstrap significance test over sentence-level resamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{Counts, EvalReport};
use crate::data::Span;
use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceResult {
    pub p_value: f64,
    /// Observed `F1(a) - F1(b)` in F1 points.
    pub delta: f64,
    pub resamples: usize,
    pub seed: u64,
    /// Resamples whose delta exceeded twice the observed one.
    pub exceeded: usize,
}

fn sentence_counts(gold: &[Span], pred: &[Span]) -> Counts {
    let mut r = EvalReport::default();
    r.add_sentence(gold, pred);
    r.overall
}

fn total(counts: &[Counts], idx: impl Iterator<Item = usize>) -> Counts {
    let mut c = Counts::default();
    for i in idx {
        c.tp += counts[i].tp;
        c.fp += counts[i].fp;
        c.fn_ += counts[i].fn_;
    }
    c
}

/// Resamples sentences with replacement `resamples` times. With observed
/// delta `d > 0`, the p-value is the share of resamples whose delta exceeds
/// `2d`; for `d < 0` the systems swap roles. `d = 0` gives `p = 1`.
pub fn bootstrap_test(
    gold: &[Vec<Span>],
    pred_a: &[Vec<Span>],
    pred_b: &[Vec<Span>],
    resamples: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if gold.len() != pred_a.len() || gold.len() != pred_b.len() {
        return Err(Error::Alignment {
            sentence: gold.len().min(pred_a.len()).min(pred_b.len()),
            message: format!(
                "sentence counts differ: gold {}, a {}, b {}",
                gold.len(),
                pred_a.len(),
                pred_b.len()
            ),
        });
    }
    if resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let n = gold.len();
    let ca: Vec<Counts> = gold
        .iter()
        .zip(pred_a)
        .map(|(g, p)| sentence_counts(g, p))
        .collect();
    let cb: Vec<Counts> = gold
        .iter()
        .zip(pred_b)
        .map(|(g, p)| sentence_counts(g, p))
        .collect();
    let delta = total(&ca, 0..n).f1() - total(&cb, 0..n).f1();
    if delta == 0.0 || n == 0 {
        return Ok(SignificanceResult {
            p_value: 1.0,
            delta,
            resamples,
            seed,
            exceeded: resamples,
        });
    }
    let sign = delta.signum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut exceeded = 0;
    for _ in 0..resamples {
        idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
        let d = total(&ca, idx.iter().copied()).f1() - total(&cb, idx.iter().copied()).f1();
        if sign * d > 2.0 * sign * delta {
            exceeded += 1;
        }
    }
    Ok(SignificanceResult {
        p_value: exceeded as f64 / resamples as f64,
        delta,
        resamples,
        seed,
        exceeded,
    })
}
