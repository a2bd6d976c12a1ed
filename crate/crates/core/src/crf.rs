//! Linear-chain CRF over `K` labels with synthetic start (`K`) and end
//! (`K + 1`) states.
//!
//! Transitions are a row-major `(K + 2) x (K + 2)` matrix indexed
//! `[from, to]`. Only `start -> label`, `label -> label` and `label -> end`
//! entries are ever read. An optional mask marks disallowed transitions,
//! which behave as `-inf` everywhere.

use crate::data::Tag;
use crate::error::{Error, Result};
use crate::nn::{logsumexp, Graph, NodeId, ParamId};

#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    num_labels: usize,
    transitions: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl CrfParams {
    pub fn zeros(num_labels: usize) -> Self {
        let size = num_labels + 2;
        CrfParams {
            num_labels,
            transitions: vec![0.0; size * size],
            mask: None,
        }
    }

    pub fn new(num_labels: usize, transitions: Vec<f64>, mask: Option<Vec<bool>>) -> Result<Self> {
        let size = (num_labels + 2) * (num_labels + 2);
        if num_labels == 0 {
            return Err(Error::config("CRF needs at least one label"));
        }
        if transitions.len() != size || mask.as_ref().is_some_and(|m| m.len() != size) {
            return Err(Error::config(format!(
                "CRF with {num_labels} labels needs {size} transition entries"
            )));
        }
        Ok(CrfParams {
            num_labels,
            transitions,
            mask,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn start(&self) -> usize {
        self.num_labels
    }

    pub fn end(&self) -> usize {
        self.num_labels + 1
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        let size = self.num_labels + 2;
        self.transitions[from * size + to] = value;
    }

    pub fn allowed(&self, from: usize, to: usize) -> bool {
        allowed(self.mask.as_deref(), self.num_labels, from, to)
    }

    /// Transition score, `-inf` when masked.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        if self.allowed(from, to) {
            self.transitions[from * (self.num_labels + 2) + to]
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn allowed(mask: Option<&[bool]>, k: usize, from: usize, to: usize) -> bool {
    mask.is_none_or(|m| m[from * (k + 2) + to])
}

/// Per-position label scores, row-major `n x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Emissions {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl Emissions {
    pub fn new(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * k {
            return Err(Error::config(format!(
                "emission table {n}x{k} needs {} entries, got {}",
                n * k,
                data.len()
            )));
        }
        Ok(Emissions { n, k, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::config("emission rows have different lengths"));
        }
        Emissions::new(rows.len(), k, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_labels(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, label: usize) -> f64 {
        self.data[i * self.k + label]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }
}

fn check(f: &Emissions, crf: &CrfParams) -> Result<()> {
    if f.k != crf.num_labels {
        return Err(Error::config(format!(
            "emissions have {} labels, CRF has {}",
            f.k, crf.num_labels
        )));
    }
    if f.n == 0 {
        return Err(Error::invalid("CRF over an empty sequence"));
    }
    Ok(())
}

fn check_labels(y: &[usize], n: usize, k: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::invalid(format!(
            "label sequence has length {}, expected {n}",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("label id {bad} out of range")));
    }
    Ok(())
}

/// Sum of transitions and emissions along `y`; `-inf` if `y` uses a masked
/// transition.
pub fn score(f: &Emissions, crf: &CrfParams, y: &[usize]) -> Result<f64> {
    check(f, crf)?;
    check_labels(y, f.n, f.k)?;
    let mut s = crf.get(crf.start(), y[0]) + crf.get(y[f.n - 1], crf.end());
    for i in 0..f.n {
        s += f.get(i, y[i]);
        if i > 0 {
            s += crf.get(y[i - 1], y[i]);
        }
    }
    Ok(s)
}

pub fn log_partition(f: &Emissions, crf: &CrfParams) -> Result<f64> {
    check(f, crf)?;
    let k = f.k;
    let mut alpha: Vec<f64> = (0..k)
        .map(|j| crf.get(crf.start(), j) + f.get(0, j))
        .collect();
    let mut buf = vec![0.0; k];
    for t in 1..f.n {
        let next: Vec<f64> = (0..k)
            .map(|j| {
                for i in 0..k {
                    buf[i] = alpha[i] + crf.get(i, j);
                }
                logsumexp(&buf) + f.get(t, j)
            })
            .collect();
        alpha = next;
    }
    for i in 0..k {
        buf[i] = alpha[i] + crf.get(i, crf.end());
    }
    Ok(logsumexp(&buf))
}

/// `log Z - score(y)`. A gold sequence that crosses a masked transition is
/// rejected.
pub fn nll(f: &Emissions, crf: &CrfParams, y: &[usize]) -> Result<f64> {
    let s = score(f, crf, y)?;
    if s == f64::NEG_INFINITY {
        return Err(Error::invalid(
            "gold label sequence uses a masked transition",
        ));
    }
    Ok(log_partition(f, crf)? - s)
}

/// Highest-scoring sequence and its score. Ties go to the lower label id.
pub fn viterbi(f: &Emissions, crf: &CrfParams) -> Result<(Vec<usize>, f64)> {
    check(f, crf)?;
    let k = f.k;
    let mut delta: Vec<f64> = (0..k)
        .map(|j| crf.get(crf.start(), j) + f.get(0, j))
        .collect();
    let mut back = vec![vec![0usize; k]; f.n];
    for t in 1..f.n {
        let mut next = vec![f64::NEG_INFINITY; k];
        for j in 0..k {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for i in 0..k {
                let v = delta[i] + crf.get(i, j);
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            next[j] = best + f.get(t, j);
            back[t][j] = arg;
        }
        delta = next;
    }
    let (mut best, mut last) = (f64::NEG_INFINITY, 0);
    for i in 0..k {
        let v = delta[i] + crf.get(i, crf.end());
        if v > best {
            best = v;
            last = i;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::invalid("every label sequence is masked"));
    }
    let mut path = vec![last; f.n];
    for t in (1..f.n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, best))
}

/// Transition mask allowing exactly the well-formed IOBES pairs over
/// `labels` (indexed by label id).
pub fn iobes_mask(labels: &[Tag]) -> Vec<bool> {
    let k = labels.len();
    let size = k + 2;
    let mut mask = vec![false; size * size];
    for (j, to) in labels.iter().enumerate() {
        mask[k * size + j] = Tag::allows(None, Some(to));
        mask[j * size + k + 1] = Tag::allows(Some(to), None);
        for (i, from) in labels.iter().enumerate() {
            mask[i * size + j] = Tag::allows(Some(from), Some(to));
        }
    }
    mask
}

/// CRF negative log-likelihood recorded on the tape.
///
/// `emissions` holds one length-`k` node per position and `transitions` is a
/// `(k + 2) x (k + 2)` parameter. Masked transitions are left out of every
/// sum rather than entering as `-inf`.
pub fn crf_nll_graph(
    g: &mut Graph,
    emissions: &[NodeId],
    transitions: ParamId,
    mask: Option<&[bool]>,
    gold: &[usize],
) -> Result<NodeId> {
    let n = emissions.len();
    let Some(&first) = emissions.first() else {
        return Err(Error::invalid("CRF over an empty sequence"));
    };
    let k = g.dim(first);
    let size = k + 2;
    let (start, end) = (k, k + 1);
    if g.store().value(transitions).len() != size * size {
        return Err(Error::config(format!(
            "transition parameter must have {} entries for {k} labels",
            size * size
        )));
    }
    if emissions.iter().any(|&e| g.dim(e) != k) {
        return Err(Error::config("emission nodes have different widths"));
    }
    check_labels(gold, n, k)?;
    let ok = |i: usize, j: usize| allowed(mask, k, i, j);

    // Gold path score.
    let mut path = Vec::with_capacity(n + 1);
    let mut prev = start;
    for &y in gold.iter().chain(std::iter::once(&end)) {
        if !ok(prev, y) {
            return Err(Error::invalid(format!(
                "gold label sequence uses a masked transition {prev} -> {y}"
            )));
        }
        path.push(prev * size + y);
        prev = y;
    }
    let gold_trans = g.param_gather(transitions, path)?;
    let gold_trans = g.sum_all(gold_trans);
    let mut terms = vec![gold_trans];
    for (&e, &y) in emissions.iter().zip(gold) {
        terms.push(g.pick(e, y)?);
    }
    let gold_score = g.sum(&terms)?;

    // Forward recursion. `alpha[j]` is None when label j is unreachable.
    let start_labels: Vec<usize> = (0..k).filter(|&j| ok(start, j)).collect();
    let mut alpha: Vec<Option<NodeId>> = vec![None; k];
    if !start_labels.is_empty() {
        let a0 = g.param_gather(
            transitions,
            start_labels.iter().map(|&j| start * size + j).collect(),
        )?;
        let f0 = g.gather(first, start_labels.clone())?;
        let s0 = g.add(a0, f0)?;
        for (slot, &j) in start_labels.iter().enumerate() {
            alpha[j] = Some(g.pick(s0, slot)?);
        }
    }
    for &e in &emissions[1..] {
        let mut next = vec![None; k];
        for (j, out) in next.iter_mut().enumerate() {
            let preds: Vec<(usize, NodeId)> = (0..k)
                .filter_map(|i| alpha[i].filter(|_| ok(i, j)).map(|a| (i, a)))
                .collect();
            if preds.is_empty() {
                continue;
            }
            let prev = g.concat(&preds.iter().map(|&(_, a)| a).collect::<Vec<_>>());
            let trans = g.param_gather(
                transitions,
                preds.iter().map(|&(i, _)| i * size + j).collect(),
            )?;
            let s = g.add(prev, trans)?;
            let lse = g.logsumexp(s)?;
            let fj = g.pick(e, j)?;
            *out = Some(g.add(lse, fj)?);
        }
        alpha = next;
    }
    let finals: Vec<(usize, NodeId)> = (0..k)
        .filter_map(|i| alpha[i].filter(|_| ok(i, end)).map(|a| (i, a)))
        .collect();
    if finals.is_empty() {
        return Err(Error::invalid("every label sequence is masked"));
    }
    let prev = g.concat(&finals.iter().map(|&(_, a)| a).collect::<Vec<_>>());
    let trans = g.param_gather(
        transitions,
        finals.iter().map(|&(i, _)| i * size + end).collect(),
    )?;
    let s = g.add(prev, trans)?;
    let log_z = g.logsumexp(s)?;
    g.sub(log_z, gold_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, ParamStore, Tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..k).map(move |l| {
                        let mut q = p.clone();
                        q.push(l);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (Emissions, CrfParams) {
        let f =
            Emissions::new(n, k, (0..n * k).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let a = (0..(k + 2) * (k + 2))
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        (f, CrfParams::new(k, a, None).unwrap())
    }

    #[test]
    fn single_position_uniform_is_ln2() {
        let f = Emissions::new(1, 2, vec![0.0, 0.0]).unwrap();
        let z = log_partition(&f, &CrfParams::zeros(2)).unwrap();
        assert!((z - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn score_hand_sum() {
        let f = Emissions::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut crf = CrfParams::zeros(2);
        crf.set(2, 1, 0.5); // start -> 1
        crf.set(1, 0, -1.0);
        crf.set(0, 3, 0.25); // 0 -> end
        let s = score(&f, &crf, &[1, 0]).unwrap();
        assert_eq!(s, 0.5 + 2.0 - 1.0 + 3.0 + 0.25);
        let one = Emissions::new(1, 2, vec![3.0, 0.0]).unwrap();
        assert_eq!(score(&one, &CrfParams::zeros(2), &[0]).unwrap(), 3.0);
    }

    #[test]
    fn single_label_nll_is_zero() {
        let f = Emissions::new(3, 1, vec![0.3, -1.0, 2.0]).unwrap();
        let crf =
            CrfParams::new(1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], None).unwrap();
        assert!(nll(&f, &crf, &[0, 0, 0]).unwrap().abs() < 1e-12);
        assert_eq!(viterbi(&f, &crf).unwrap().0, vec![0, 0, 0]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (n, k) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
            let (f, crf) = random_instance(&mut rng, n, k);
            let scores: Vec<f64> = all_sequences(n, k)
                .iter()
                .map(|y| score(&f, &crf, y).unwrap())
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum::<f64>().ln();
            assert!((log_partition(&f, &crf).unwrap() - z).abs() < 1e-9);
            let (best, s) = viterbi(&f, &crf).unwrap();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((s - max).abs() < 1e-12);
            assert!((score(&f, &crf, &best).unwrap() - max).abs() < 1e-12);
        }
    }

    #[test]
    fn viterbi_ties_prefer_lower_ids() {
        let f = Emissions::new(3, 3, vec![0.0; 9]).unwrap();
        assert_eq!(viterbi(&f, &CrfParams::zeros(3)).unwrap().0, vec![0, 0, 0]);
    }

    #[test]
    fn masked_gold_is_error_and_masked_score_is_neg_inf() {
        let labels: Vec<Tag> = ["O", "B-PER", "E-PER"]
            .iter()
            .map(|t| t.parse().unwrap())
            .collect();
        let crf = CrfParams::new(3, vec![0.0; 25], Some(iobes_mask(&labels))).unwrap();
        let f = Emissions::new(2, 3, vec![0.0; 6]).unwrap();
        assert_eq!(score(&f, &crf, &[0, 2]).unwrap(), f64::NEG_INFINITY);
        assert!(nll(&f, &crf, &[0, 2]).is_err());
        assert!(nll(&f, &crf, &[1, 2]).is_ok());
        // Valid length-2 sequences: OO, B E.
        let z = log_partition(&f, &crf).unwrap();
        assert!((z - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fully_masked_viterbi_errors() {
        let crf = CrfParams::new(1, vec![0.0; 9], Some(vec![false; 9])).unwrap();
        let f = Emissions::new(1, 1, vec![0.0]).unwrap();
        assert!(viterbi(&f, &crf).is_err());
    }

    fn tape_nll(
        store: &ParamStore,
        mask: Option<&[bool]>,
        gold: &[usize],
    ) -> (f64, Emissions, CrfParams) {
        let trans = store.id("trans").unwrap();
        let em = store.id("em").unwrap();
        let rows = store.value(em).rows();
        let k = store.value(em).cols();
        let mut g = Graph::new(store);
        let nodes: Vec<NodeId> = (0..rows).map(|r| g.param_row(em, r).unwrap()).collect();
        let loss = crf_nll_graph(&mut g, &nodes, trans, mask, gold).unwrap();
        let f = Emissions::new(rows, k, store.value(em).data().to_vec()).unwrap();
        let crf = CrfParams::new(
            k,
            store.value(trans).data().to_vec(),
            mask.map(<[bool]>::to_vec),
        )
        .unwrap();
        (g.scalar(loss), f, crf)
    }

    fn random_store(seed: u64, n: usize, k: usize) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new(seed);
        let em = (0..n * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tr = (0..(k + 2) * (k + 2))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        store.add("em", Tensor::matrix(n, k, em).unwrap()).unwrap();
        store
            .add("trans", Tensor::matrix(k + 2, k + 2, tr).unwrap())
            .unwrap();
        store
    }

    #[test]
    fn tape_nll_matches_direct() {
        let store = random_store(3, 4, 3);
        let (v, f, crf) = tape_nll(&store, None, &[0, 2, 1, 1]);
        assert!((v - nll(&f, &crf, &[0, 2, 1, 1]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tape_nll_matches_direct_under_mask() {
        let labels: Vec<Tag> = ["O", "B-X", "I-X", "E-X", "S-X"]
            .iter()
            .map(|t| t.parse().unwrap())
            .collect();
        let mask = iobes_mask(&labels);
        let store = random_store(4, 4, 5);
        let gold = [1, 3, 0, 4];
        let (v, f, crf) = tape_nll(&store, Some(&mask), &gold);
        assert!((v - nll(&f, &crf, &gold).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nll_gradients_match_finite_differences() {
        let store = random_store(5, 4, 2);
        let trans = store.id("trans").unwrap();
        let em = store.id("em").unwrap();
        let report = grad_check(
            |g| {
                let nodes: Vec<NodeId> = (0..4).map(|r| g.param_row(em, r).unwrap()).collect();
                crf_nll_graph(g, &nodes, trans, None, &[1, 0, 0, 1])
            },
            &store,
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }
}
