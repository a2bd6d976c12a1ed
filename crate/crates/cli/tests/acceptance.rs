//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p dgner-cli --test acceptance`.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dgner::crf::{log_partition, viterbi, CrfParams, Emissions};
use dgner::data::{from_iobes, to_iobes, EmbeddingTable, Sentence, Span, Tag, Token, Vocabulary};
use dgner::model::{Architecture, Interaction, Model, ModelConfig};
use dgner::nn::grad_check;
use dgner::stats::{
    dataset_stats_with, entity_has_grandchild_dep, entity_is_subtree, entity_relation_matrix,
    grandchild_pair_matrix, pair_label, repair_trees, CorrelationMatrix, SubtreeMode,
};
use dgner::synthetic::{dependency_signal_corpus, memorization_corpus, random_tree_corpus};
use dgner::train::{bootstrap_test, evaluate, train, TrainConfig};
use dgner_cli::{cmd_train, parse_override, RunConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))?;
    Ok(t)
}

// 1. CRF against brute-force enumeration.

fn all_sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

fn brute_score(em: &[Vec<f64>], trans: &[f64], mask: Option<&[bool]>, y: &[usize]) -> f64 {
    let k = em[0].len();
    let size = k + 2;
    let t = |a: usize, b: usize| {
        if mask.is_some_and(|m| !m[a * size + b]) {
            f64::NEG_INFINITY
        } else {
            trans[a * size + b]
        }
    };
    let mut s = t(k, y[0]) + t(y[y.len() - 1], k + 1);
    for i in 0..y.len() {
        s += em[i][y[i]];
        if i > 0 {
            s += t(y[i - 1], y[i]);
        }
    }
    s
}

fn crf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut worst_logz, mut worst_mass) = (0, 0.0f64, 0.0f64);
    let mut attempts = 0;
    while checked < 1200 {
        attempts += 1;
        let n = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=4);
        let size = (k + 2) * (k + 2);
        let em: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let trans: Vec<f64> = (0..size).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mask: Option<Vec<bool>> =
            (attempts % 3 == 0).then(|| (0..size).map(|_| rng.gen_bool(0.7)).collect());

        let seqs = all_sequences(n, k);
        let scores: Vec<f64> = seqs
            .iter()
            .map(|y| brute_score(&em, &trans, mask.as_deref(), y))
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            // Every sequence is masked out; nothing to compare.
            continue;
        }
        let brute_logz = best + scores.iter().map(|s| (s - best).exp()).sum::<f64>().ln();
        let argmax = seqs[scores.iter().position(|&s| s == best).unwrap()].clone();

        let f = Emissions::from_rows(&em).map_err(|e| e.to_string())?;
        let crf = CrfParams::new(k, trans, mask).map_err(|e| e.to_string())?;
        let logz = log_partition(&f, &crf).map_err(|e| e.to_string())?;
        let (path, _) = viterbi(&f, &crf).map_err(|e| e.to_string())?;
        let mass: f64 = scores.iter().map(|s| (s - logz).exp()).sum();

        worst_logz = worst_logz.max((logz - brute_logz).abs());
        worst_mass = worst_mass.max((mass - 1.0).abs());
        ensure((logz - brute_logz).abs() <= 1e-9, || {
            format!("instance {checked}: log Z {logz} vs enumeration {brute_logz}")
        })?;
        ensure(path == argmax, || {
            format!("instance {checked}: viterbi {path:?} vs argmax {argmax:?}")
        })?;
        ensure((mass - 1.0).abs() <= 1e-9, || {
            format!("instance {checked}: probabilities sum to {mass}")
        })?;
        checked += 1;
    }
    let t = within(start, Duration::from_secs(30))?;
    Ok(format!(
        "{checked} instances, max |dlogZ| {worst_logz:.1e}, max |sum P - 1| {worst_mass:.1e}, {t:.1?}"
    ))
}

// 2. End-to-end gradient checks.

fn two_label_sentence() -> Vec<Sentence> {
    let tokens = vec![
        Token::new("Abramov", 2, "nsubj", Tag::S("PER".into())),
        Token::new("had", 0, "root", Tag::O),
        Token::new("an", 4, "det", Tag::O),
        Token::new("accident", 2, "dobj", Tag::O),
    ];
    vec![Sentence::new(tokens).unwrap()]
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let corpus = two_label_sentence();
    let vocab = Vocabulary::build(&corpus, &[], None, false).map_err(|e| e.to_string())?;
    ensure(vocab.num_labels() == 2, || {
        format!("{} labels", vocab.num_labels())
    })?;
    let mut cases = vec![
        (Architecture::Bilstm, Interaction::Mlp, true),
        (Architecture::BilstmGcn, Interaction::Mlp, true),
        (Architecture::BilstmGcn, Interaction::Mlp, false),
    ];
    cases.extend(Interaction::ALL.map(|i| (Architecture::Dglstm, i, true)));
    let mut worst = 0.0f64;
    let mut entries = 0;
    for (architecture, interaction, gcn_relation_weights) in cases {
        let cfg = ModelConfig {
            architecture,
            interaction,
            gcn_relation_weights,
            layers: 2,
            hidden: 8,
            word_dim: 4,
            char_emb_dim: 3,
            char_hidden: 3,
            rel_dim: 3,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let model = Model::new(cfg, vocab.clone(), None, 3).map_err(|e| e.to_string())?;
        let s = model.prepare(&corpus[0], None).map_err(|e| e.to_string())?;
        let r = grad_check(|g| model.loss(g, &s, None), &model.store, 1e-5)
            .map_err(|e| e.to_string())?;
        ensure(r.max_rel_error < 1e-4, || {
            format!(
                "{architecture}/{interaction}: {:.2e} at {}[{}]",
                r.max_rel_error, r.worst_param, r.worst_index
            )
        })?;
        worst = worst.max(r.max_rel_error);
        entries += r.checked;
    }
    let t = within(start, Duration::from_secs(120))?;
    Ok(format!(
        "7 models, {entries} entries, max relative error {worst:.2e}, {t:.1?}"
    ))
}

// 3. Memorisation of a small corpus.

fn memorisation() -> Outcome {
    let start = Instant::now();
    let corpus = memorization_corpus(50, 1);
    // Pretrained-scale random word vectors, as the model would normally
    // start from loaded embeddings rather than tiny random rows.
    let mut emb = EmbeddingTable::new(25);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in &corpus {
        for t in &s.tokens {
            let v: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
            emb.insert(&t.form, v).map_err(|e| e.to_string())?;
        }
    }
    let vocab = Vocabulary::build(&corpus, &[], Some(&emb), false).map_err(|e| e.to_string())?;
    let cfg = ModelConfig {
        hidden: 25,
        word_dim: 25,
        char_emb_dim: 10,
        char_hidden: 10,
        rel_dim: 10,
        dropout: 0.0,
        ..ModelConfig::default()
    };
    let model = Model::new(cfg, vocab, Some(&emb), 1).map_err(|e| e.to_string())?;
    let ex = model.examples(&corpus, None).map_err(|e| e.to_string())?;
    let tc = TrainConfig::default();
    let out = train(model, &tc, &ex, &ex, |_| {}).map_err(|e| e.to_string())?;
    let first = out.log.iter().find(|e| e.dev_f1 >= 99.0).map(|e| e.epoch);
    let best = out.log[out.best_epoch - 1].dev_f1;
    let t = within(start, Duration::from_secs(300))?;
    match first {
        Some(epoch) => Ok(format!(
            "train F1 {best:.2}, first >= 99.0 at epoch {epoch}, {t:.1?}"
        )),
        None => Err(format!("best train F1 {best:.2} in {} epochs", tc.epochs)),
    }
}

// 4. Dependency-signal separation.

fn signal_f1(architecture: Architecture) -> Result<f64, String> {
    let train_set = dependency_signal_corpus(200, 1);
    let dev = dependency_signal_corpus(50, 3);
    let test = dependency_signal_corpus(100, 2);
    let vocab = Vocabulary::build(&train_set, &[], None, false).map_err(|e| e.to_string())?;
    let cfg = ModelConfig {
        architecture,
        layers: 0,
        hidden: 25,
        word_dim: 25,
        char_hidden: 0,
        rel_dim: 10,
        ..ModelConfig::default()
    };
    let model = Model::new(cfg, vocab, None, 1).map_err(|e| e.to_string())?;
    let e = |c: &[Sentence]| model.examples(c, None).map_err(|e| e.to_string());
    let (tr, dv, te) = (e(&train_set)?, e(&dev)?, e(&test)?);
    let tc = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let out = train(model, &tc, &tr, &dv, |_| {}).map_err(|e| e.to_string())?;
    Ok(evaluate(&out.best, &te).map_err(|e| e.to_string())?.0.f1())
}

fn dependency_signal() -> Outcome {
    let dg = signal_f1(Architecture::Dglstm)?;
    let bi = signal_f1(Architecture::Bilstm)?;
    let detail = format!(
        "DGLSTM-CRF L=0 test F1 {dg:.2}, BiLSTM-CRF L=0 {bi:.2}, gap {:.2}",
        dg - bi
    );
    ensure(dg >= 95.0 && bi <= 60.0 && dg - bi >= 20.0, || {
        detail.clone()
    })?;
    Ok(detail)
}

// 5. Statistics against brute force.

fn parent(s: &Sentence, i: usize) -> Option<usize> {
    s.tokens[i].head.checked_sub(1)
}

fn is_ancestor_or_self(s: &Sentence, a: usize, mut j: usize) -> bool {
    loop {
        if j == a {
            return true;
        }
        match parent(s, j) {
            Some(p) => j = p,
            None => return false,
        }
    }
}

fn brute_complete(s: &Sentence, span: &Span) -> bool {
    let want: BTreeSet<usize> = (span.start..span.end).collect();
    (span.start..span.end).any(|a| {
        let got: BTreeSet<usize> = (0..s.len())
            .filter(|&j| is_ancestor_or_self(s, a, j))
            .collect();
        got == want
    })
}

fn brute_connected(s: &Sentence, span: &Span) -> bool {
    (span.start..span.end)
        .filter(|&i| parent(s, i).is_none_or(|p| !span.contains(p)))
        .count()
        == 1
}

fn brute_chains(s: &Sentence, span: &Span) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for a in span.start..span.end {
        for b in span.start..span.end {
            for c in span.start..span.end {
                if parent(s, b) == Some(a) && parent(s, c) == Some(b) {
                    out.insert((a, b, c));
                }
            }
        }
    }
    out
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn compare_matrix(
    name: &str,
    got: &CorrelationMatrix,
    want: &[(String, String, usize, usize)],
) -> Result<(), String> {
    let rows: BTreeSet<&str> = want.iter().map(|w| w.0.as_str()).collect();
    let cols: BTreeSet<&str> = want
        .iter()
        .filter(|w| w.2 > 0)
        .map(|w| w.1.as_str())
        .collect();
    ensure(
        got.rows.iter().map(String::as_str).collect::<BTreeSet<_>>() == rows,
        || format!("{name}: rows differ"),
    )?;
    ensure(
        got.columns
            .iter()
            .map(String::as_str)
            .collect::<BTreeSet<_>>()
            == cols,
        || format!("{name}: columns differ"),
    )?;
    for (row, col, k, n) in want {
        if k == &0 && !cols.contains(col.as_str()) {
            continue;
        }
        let v = got.get(row, col).unwrap_or(f64::NAN);
        ensure(v == pct(*k, *n), || {
            format!("{name}[{row}][{col}] = {v}, expected {}", pct(*k, *n))
        })?;
    }
    Ok(())
}

fn brute_matrices(corpus: &[Sentence]) -> Result<(), String> {
    let types: BTreeSet<String> = corpus
        .iter()
        .flat_map(|s| s.spans())
        .map(|s| s.label)
        .collect();
    let relations: BTreeSet<String> = corpus
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.relation.clone()))
        .collect();
    let mut rel_want = Vec::new();
    for ty in &types {
        let words: Vec<&Token> = corpus
            .iter()
            .flat_map(|s| s.tokens.iter())
            .filter(|t| t.tag.entity_type() == Some(ty.as_str()))
            .collect();
        for r in &relations {
            let k = words.iter().filter(|t| &t.relation == r).count();
            rel_want.push((ty.clone(), r.clone(), k, words.len()));
        }
    }
    compare_matrix("relmatrix", &entity_relation_matrix(corpus), &rel_want)?;

    let mut pair_want = Vec::new();
    let long: Vec<(&Sentence, Span)> = corpus
        .iter()
        .flat_map(|s| s.spans().into_iter().map(move |sp| (s, sp)))
        .filter(|(_, sp)| sp.len() >= 3)
        .collect();
    let long_types: BTreeSet<&str> = long.iter().map(|(_, sp)| sp.label.as_str()).collect();
    for ty in long_types {
        let of_type: Vec<&(&Sentence, Span)> =
            long.iter().filter(|(_, sp)| sp.label == ty).collect();
        for up in &relations {
            for low in &relations {
                let k = of_type
                    .iter()
                    .filter(|(s, sp)| {
                        brute_chains(s, sp).iter().any(|&(_, b, c)| {
                            &s.tokens[b].relation == up && &s.tokens[c].relation == low
                        })
                    })
                    .count();
                pair_want.push((ty.to_string(), pair_label(up, low), k, of_type.len()));
            }
        }
    }
    compare_matrix("pairmatrix", &grandchild_pair_matrix(corpus), &pair_want)
}

fn seminar_sentences() -> Result<(), String> {
    let o = || Tag::O;
    let ev = |i: usize| match i {
        0 => Tag::B("EVENT".into()),
        8 => Tag::E("EVENT".into()),
        _ => Tag::I("EVENT".into()),
    };
    let second = [
        ("The", 2, "det"),
        ("seminar", 11, "nsubjpass"),
        ("on", 2, "prep"),
        ("the", 6, "det"),
        ("actual", 6, "amod"),
        ("practice", 3, "pobj"),
        ("of", 6, "prep"),
        ("tax", 9, "nn"),
        ("reform", 7, "pobj"),
        ("was", 11, "auxpass"),
        ("held", 0, "root"),
        ("in", 11, "prep"),
        ("Hong", 14, "nn"),
        ("Kong", 12, "pobj"),
    ];
    let tokens = second
        .iter()
        .enumerate()
        .map(|(i, &(w, h, r))| {
            let tag = match i {
                0..=8 => ev(i),
                12 => Tag::B("GPE".into()),
                13 => Tag::E("GPE".into()),
                _ => o(),
            };
            Token::new(w, h, r, tag)
        })
        .collect();
    let s2 = Sentence::new(tokens).map_err(|e| e.to_string())?;
    let event = Span::new(0, 9, "EVENT");
    ensure(s2.spans().contains(&event), || {
        "Event span not decoded".into()
    })?;
    ensure(entity_is_subtree(&s2, &event), || {
        "Event entity is not a subtree".into()
    })?;
    ensure(entity_has_grandchild_dep(&s2, &event), || {
        "Event entity has no grandchild dependency".into()
    })?;
    // seminar -> on -> practice
    ensure(brute_chains(&s2, &event).contains(&(1, 2, 5)), || {
        "seminar-on-practice chain missing".into()
    })?;

    let first = [
        ("They", 2, "nsubj"),
        ("suffer", 0, "root"),
        ("from", 2, "prep"),
        ("drug", 5, "prep"),
        ("dealing", 3, "pobj"),
        ("and", 5, "cc"),
        ("loitering", 5, "conj"),
        ("near", 5, "prep"),
        ("their", 10, "poss"),
        ("premises", 8, "pobj"),
    ];
    let tokens = first
        .iter()
        .enumerate()
        .map(|(i, &(w, h, r))| Token::new(w, h, r, if i == 9 { Tag::S("LOC".into()) } else { o() }))
        .collect();
    let s1 = Sentence::new(tokens).map_err(|e| e.to_string())?;
    let m = entity_relation_matrix(&[s1]);
    ensure(m.get("LOC", "pobj") == Some(100.0), || {
        "premises is not a pobj LOC".into()
    })?;
    Ok(())
}

fn statistics_oracles() -> Outcome {
    let corpus = random_tree_corpus(200, 12, 5);
    let spans: Vec<(&Sentence, Span)> = corpus
        .iter()
        .flat_map(|s| s.spans().into_iter().map(move |sp| (s, sp)))
        .collect();
    for (s, sp) in &spans {
        ensure(entity_is_subtree(s, sp) == brute_complete(s, sp), || {
            format!("complete subtree mismatch on {sp:?}")
        })?;
        ensure(
            entity_has_grandchild_dep(s, sp) == !brute_chains(s, sp).is_empty(),
            || format!("grandchild mismatch on {sp:?}"),
        )?;
    }
    for min_len in [1, 2, 3] {
        for mode in [SubtreeMode::Complete, SubtreeMode::Connected] {
            let got = dataset_stats_with(&corpus, min_len, mode);
            let considered: Vec<&(&Sentence, Span)> =
                spans.iter().filter(|(_, sp)| sp.len() >= min_len).collect();
            let st = considered
                .iter()
                .filter(|(s, sp)| match mode {
                    SubtreeMode::Complete => brute_complete(s, sp),
                    SubtreeMode::Connected => brute_connected(s, sp),
                })
                .count();
            let gd = considered
                .iter()
                .filter(|(s, sp)| !brute_chains(s, sp).is_empty())
                .count();
            ensure(
                got.entities == spans.len()
                    && got.considered == considered.len()
                    && got.st_ratio == pct(st, considered.len())
                    && got.gd_ratio == pct(gd, considered.len()),
                || format!("dataset stats mismatch at min_len {min_len}, {mode:?}: {got:?}"),
            )?;
        }
    }
    brute_matrices(&corpus)?;
    seminar_sentences()?;
    let st3 = dataset_stats_with(&corpus, 3, SubtreeMode::Complete);
    Ok(format!(
        "200 sentences, {} entities; ST {:.1} GD {:.1} (len >= 3); seminar Event entity: subtree and grandchild",
        spans.len(),
        st3.st_ratio,
        st3.gd_ratio
    ))
}

// 6. Subtree repair.

fn repair() -> Outcome {
    let mut total = 0;
    let mut changed = 0;
    for seed in [5, 6, 7] {
        let corpus = random_tree_corpus(200, 15, seed);
        let repaired = repair_trees(&corpus).map_err(|e| e.to_string())?;
        let st = dataset_stats_with(&repaired, 1, SubtreeMode::Connected);
        ensure(st.st_ratio == 100.0, || {
            format!("seed {seed}: connected ratio {}", st.st_ratio)
        })?;
        let again = repair_trees(&repaired).map_err(|e| e.to_string())?;
        ensure(again == repaired, || {
            format!("seed {seed}: repair is not idempotent")
        })?;
        for (a, b) in corpus.iter().zip(&repaired) {
            ensure(a.tags() == b.tags() && a.forms().eq(b.forms()), || {
                "repair changed words or tags".into()
            })?;
            Sentence::new(b.tokens.clone()).map_err(|e| format!("repaired tree invalid: {e}"))?;
        }
        changed += corpus.iter().zip(&repaired).filter(|(a, b)| a != b).count();
        total += st.entities;
    }
    Ok(format!("600 sentences, {total} entities at 100.0% connected, idempotent; {changed} sentences rewired"))
}

// 7. IOBES round trip.

fn iobes_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let types = ["PER", "LOC", "ORG", "MISC"];
    for case in 0..10_000 {
        let n = rng.gen_range(0..=20);
        let mut spans = Vec::new();
        let mut i = 0;
        while i < n {
            if rng.gen_bool(0.4) {
                let len = rng.gen_range(1..=6).min(n - i);
                spans.push(Span::new(i, i + len, types[rng.gen_range(0..types.len())]));
                i += len;
            } else {
                i += 1;
            }
        }
        let tags = to_iobes(&spans, n).map_err(|e| format!("case {case}: {e}"))?;
        let back = from_iobes(&tags).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == spans, || {
            format!("case {case}: {spans:?} became {back:?}")
        })?;
    }
    Ok("10000 random span sets survive to_iobes/from_iobes".into())
}

// 8. Determinism of full training runs.

fn determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy/run.cfg");
    let mut logs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out_dir = format!("output_dir={}", dir.path().display());
        let overrides = vec![parse_override(&out_dir).map_err(|e| e.to_string())?];
        let cfg = RunConfig::load(&config, &overrides).map_err(|e| e.to_string())?;
        let out = cmd_train(&cfg).map_err(|e| e.to_string())?;
        let log = std::fs::read(&out.epoch_log).map_err(|e| e.to_string())?;
        let ck = std::fs::read(&out.checkpoint).map_err(|e| e.to_string())?;
        logs.push((log, ck));
    }
    ensure(logs[0].0 == logs[1].0, || "epoch logs differ".into())?;
    ensure(logs[0].1 == logs[1].1, || "checkpoints differ".into())?;
    Ok(format!(
        "two runs: identical epoch logs ({} bytes) and checkpoints ({} bytes)",
        logs[0].0.len(),
        logs[0].1.len()
    ))
}

// 9. Bootstrap sanity.

fn bootstrap() -> Outcome {
    let gold: Vec<Vec<Span>> = (0..50)
        .map(|i| vec![Span::new(0, 1 + i % 3, "PER"), Span::new(4, 5, "LOC")])
        .collect();
    let entities: usize = gold.iter().map(Vec::len).sum();
    let empty = vec![vec![]; gold.len()];
    let same = bootstrap_test(&gold, &gold, &gold, 1000, 42).map_err(|e| e.to_string())?;
    ensure(same.p_value == 1.0, || {
        format!("identical predictions: p = {}", same.p_value)
    })?;
    let perfect = bootstrap_test(&gold, &gold, &empty, 1000, 42).map_err(|e| e.to_string())?;
    ensure(perfect.p_value < 0.01, || {
        format!("perfect vs all-O: p = {}", perfect.p_value)
    })?;
    // Two close systems so the p-value is not degenerate.
    let mut sys_a = gold.clone();
    sys_a[0].truncate(1);
    sys_a[1].truncate(1);
    let mut sys_b = gold.clone();
    sys_b[2..5].iter_mut().for_each(|s| s.truncate(1));
    let a = bootstrap_test(&gold, &sys_a, &sys_b, 1000, 9).map_err(|e| e.to_string())?;
    let b = bootstrap_test(&gold, &sys_a, &sys_b, 1000, 9).map_err(|e| e.to_string())?;
    ensure(a == b, || "same seed gave different results".into())?;
    Ok(format!(
        "identical p = {}, perfect vs all-O on {entities} entities p = {}, reruns identical (p = {})",
        same.p_value, perfect.p_value, a.p_value
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("CRF oracle", crf_oracle),
        ("gradient checks", gradient_suite),
        ("memorisation", memorisation),
        ("dependency signal", dependency_signal),
        ("statistics oracles", statistics_oracles),
        ("subtree repair", repair),
        ("IOBES round trip", iobes_round_trip),
        ("training determinism", determinism),
        ("bootstrap sanity", bootstrap),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
