//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured values before asserting.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use coop::autoencoder::{Decoder, Encoder, ToyAutoencoder};
use coop::cli::{run_summarize, RunConfig};
use coop::coopsearch::{
    evaluate_candidate, search_beam, search_exact, select_simpleavg, Objective, SearchConfig,
    SearchDirection,
};
use coop::diagnostics::{shrinkage_curve, EntityData};
use coop::latentspace::{l2_norm, simple_average, LatentVector, SubsetSelection};
use coop::textmetrics::{
    mrr, ndcg_rank, rouge_l, rouge_n, spearman, RefMode, RougeScore, TokenSeq,
};

fn report(criterion: usize, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} ({detail})");
}

fn random_instance(seed: u64, n: usize) -> (Vec<TokenSeq>, Vec<LatentVector>, ToyAutoencoder) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..24).map(|i| format!("w{i}")).collect();
    let model = ToyAutoencoder::new(vocab.clone(), 32, 2.0, 24, seed).unwrap();
    let reviews: Vec<TokenSeq> = (0..n)
        .map(|_| {
            let len = rng.gen_range(3..8);
            TokenSeq::new(
                (0..len)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                    .collect(),
            )
        })
        .collect();
    let zs = reviews.iter().map(|r| model.encode(r)).collect();
    (reviews, zs, model)
}

/// Criterion 1: Monte Carlo random selection over the 255 non-empty subsets
/// of 8 reviews, candidate quality order a uniform random permutation, so
/// the chosen candidate's rank is uniform on 1..=255.
///
/// The MRR half matches the published 2.40. The nDCG half cannot match: the
/// published discount formula 1/log2(rank + 1) has uniform expectation
/// 16.41%, while the published 14.17 figure equals the expectation of the
/// different discount 1/log2(2 * rank). We keep the published formula and
/// let the 14.17 assertion fail rather than silently switching discounts.
#[test]
fn criterion_1_random_baseline_mrr_and_ndcg() {
    let started = Instant::now();
    let trials = 100_000;
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    // Picking uniformly among 255 candidates whose gold order is a uniform
    // random permutation gives the chosen candidate a uniform rank, so the
    // rank is sampled directly.
    let ranks: Vec<usize> = (0..trials).map(|_| rng.gen_range(1..=255)).collect();
    let mrr_pct = 100.0 * mrr(&ranks).unwrap();
    let ndcg_pct = 100.0 * ndcg_rank(&ranks).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let mrr_ok = (mrr_pct - 2.40).abs() <= 0.15;
    let ndcg_ok = (ndcg_pct - 14.17).abs() <= 0.30;
    let time_ok = elapsed < 10.0;
    report(
        1,
        mrr_ok && ndcg_ok && time_ok,
        &format!(
            "mrr {mrr_pct:.3}% vs 2.40±0.15 {}; ndcg {ndcg_pct:.3}% vs 14.17±0.30 {}; {elapsed:.1}s",
            if mrr_ok { "ok" } else { "out" },
            if ndcg_ok { "ok" } else { "out" },
        ),
    );
    assert!(mrr_ok, "MRR {mrr_pct:.3}% outside 2.40 ± 0.15");
    assert!(time_ok, "took {elapsed:.1}s, limit 10s");
    assert!(
        ndcg_ok,
        "nDCG {ndcg_pct:.3}% outside 14.17 ± 0.30: with the published discount \
         1/log2(rank + 1) the uniform-rank expectation is 16.41%; the published \
         14.17 equals the expectation of 1/log2(2 * rank) instead, so the stated \
         target is unreachable under the stated formula"
    );
}

/// Criterion 2: exact search agrees with an independent brute force that
/// re-implements the enumeration and tie order inline.
#[test]
fn criterion_2_exact_search_optimality() {
    let started = Instant::now();
    let obj = Objective::default();
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 5);
        let (reviews, zs, model) = random_instance(seed, n);
        let exact = search_exact(&reviews, &zs, &model, &obj, 16).unwrap();

        let mut best_mask = 0u64;
        let mut best_value = f64::NEG_INFINITY;
        let mut best_size = usize::MAX;
        for mask in 1..(1u64 << n) {
            let s = SubsetSelection::from_mask(mask, n).unwrap();
            let value = evaluate_candidate(&reviews, &zs, &s, &model, &obj).unwrap();
            let size = mask.count_ones() as usize;
            let better = value > best_value
                || (value == best_value && size < best_size)
                || (value == best_value && size == best_size && mask < best_mask);
            if better {
                best_mask = mask;
                best_value = value;
                best_size = size;
            }
        }
        assert_eq!(exact.selection.unwrap().mask(), best_mask, "seed {seed}");
        assert_eq!(exact.objective_value, best_value, "seed {seed}");
    }
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 30.0;
    report(2, time_ok, &format!("200/200 brute-force matches; {elapsed:.1}s"));
    assert!(time_ok, "took {elapsed:.1}s, limit 30s");
}

/// Criterion 3: forward beam with beam_size >= 2^N reproduces exact search.
#[test]
fn criterion_3_exhaustive_beam_equals_exact() {
    let obj = Objective::default();
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 5);
        let (reviews, zs, model) = random_instance(seed + 5000, n);
        let exact = search_exact(&reviews, &zs, &model, &obj, 16).unwrap();
        let cfg = SearchConfig {
            direction: SearchDirection::Forward,
            beam_size: 1 << n,
            max_exact_n: 16,
        };
        let beam = search_beam(&reviews, &zs, &model, &obj, &cfg).unwrap();
        assert_eq!(beam.selection, exact.selection, "seed {seed} n {n}");
        assert_eq!(beam.objective_value, exact.objective_value, "seed {seed}");
    }
    report(3, true, "100/100 exhaustive-beam selections equal exact");
}

/// Criterion 4: dominance invariants over 1k fuzzed instances.
#[test]
fn criterion_4_dominance_invariants() {
    let obj = Objective::default();
    let mut violations = 0usize;
    for seed in 0..1000u64 {
        let n = 2 + (seed as usize % 5);
        let (reviews, zs, model) = random_instance(seed + 9000, n);
        let exact = search_exact(&reviews, &zs, &model, &obj, 16).unwrap();
        let avg = select_simpleavg(&reviews, &zs, &model, &obj).unwrap();

        let greedy = |direction| {
            let cfg = SearchConfig {
                direction,
                beam_size: 1,
                max_exact_n: 16,
            };
            search_beam(&reviews, &zs, &model, &obj, &cfg).unwrap()
        };
        let forward = greedy(SearchDirection::Forward);
        let backward = greedy(SearchDirection::Backward);

        let best_singleton = (0..n)
            .map(|i| {
                evaluate_candidate(&reviews, &zs, &SubsetSelection::singleton(i), &model, &obj)
                    .unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);

        if exact.objective_value < avg.objective_value
            || backward.objective_value < avg.objective_value
            || forward.objective_value < best_singleton
        {
            violations += 1;
        }
    }
    report(4, violations == 0, &format!("{violations} violations over 1000 instances"));
    assert_eq!(violations, 0);
}

fn clipped_ngram_oracle(hyp: &[String], rf: &[String], n: usize) -> RougeScore {
    let grams = |toks: &[String]| -> HashMap<Vec<String>, usize> {
        let mut m = HashMap::new();
        if toks.len() >= n {
            for w in toks.windows(n) {
                *m.entry(w.to_vec()).or_insert(0) += 1;
            }
        }
        m
    };
    let h = grams(hyp);
    let r = grams(rf);
    let overlap: usize = h
        .iter()
        .map(|(g, c)| c.min(r.get(g).unwrap_or(&0)))
        .sum();
    let h_total: usize = h.values().sum();
    let r_total: usize = r.values().sum();
    prf(overlap, h_total, r_total)
}

fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            dp[i][j] = if a[i - 1] == b[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    dp[a.len()][b.len()]
}

fn prf(overlap: usize, h_total: usize, r_total: usize) -> RougeScore {
    let p = if h_total == 0 { 0.0 } else { overlap as f64 / h_total as f64 };
    let r = if r_total == 0 { 0.0 } else { overlap as f64 / r_total as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    RougeScore { precision: p, recall: r, f1 }
}

/// Criterion 5: ROUGE against independent counting/LCS oracles, plus the
/// two worked examples.
#[test]
fn criterion_5_rouge_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let vocab: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let seq = |rng: &mut ChaCha12Rng| -> Vec<String> {
        let len = rng.gen_range(0..=30);
        (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect()
    };
    let mut max_err = 0.0f64;
    for _ in 0..1000 {
        let h = seq(&mut rng);
        let r = seq(&mut rng);
        let hyp = TokenSeq::new(h.clone());
        let rf = TokenSeq::new(r.clone());
        for n in 1..=2 {
            let got = rouge_n(&hyp, std::slice::from_ref(&rf), n, RefMode::Average).unwrap();
            let want = clipped_ngram_oracle(&h, &r, n);
            max_err = max_err
                .max((got.precision - want.precision).abs())
                .max((got.recall - want.recall).abs())
                .max((got.f1 - want.f1).abs());
        }
        let got = rouge_l(&hyp, std::slice::from_ref(&rf), RefMode::Average).unwrap();
        let want = prf(lcs_oracle(&h, &r), h.len(), r.len());
        max_err = max_err
            .max((got.precision - want.precision).abs())
            .max((got.recall - want.recall).abs())
            .max((got.f1 - want.f1).abs());
    }

    let toks = |s: &str| TokenSeq::new(s.split(' ').map(str::to_string).collect());
    let uni = rouge_n(&toks("the cat sat"), &[toks("the cat ran")], 1, RefMode::Average).unwrap();
    let uni_ok = (uni.f1 - 2.0 / 3.0).abs() < 1e-12;
    let lcs = rouge_l(&toks("a b c d"), &[toks("a c b d")], RefMode::Average).unwrap();
    let lcs_ok = lcs.precision == 0.75 && lcs.recall == 0.75 && lcs.f1 == 0.75;

    let pass = max_err <= 1e-12 && uni_ok && lcs_ok;
    report(5, pass, &format!("max oracle error {max_err:.1e}; worked examples reproduce"));
    assert!(max_err <= 1e-12, "max error {max_err}");
    assert!(uni_ok && lcs_ok);
}

/// Criterion 6: norm shrinkage ratio for i.i.d. zero-mean latents.
#[test]
fn criterion_6_shrinkage_law() {
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    let entities: Vec<EntityData> = (0..1000)
        .map(|i| {
            let zs = (0..8)
                .map(|_| LatentVector::new((0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                .collect();
            EntityData {
                entity_id: format!("e{i}"),
                reviews: Vec::new(),
                gold: Vec::new(),
                zs,
            }
        })
        .collect();
    let report_rows = shrinkage_curve(&entities, 8, 33).unwrap();
    let n1 = report_rows.rows[0].mean_norm;
    let n8 = report_rows.rows[7].mean_norm;
    let ratio = n8 / n1;
    let pass = (0.25..=0.50).contains(&ratio);
    report(6, pass, &format!("norm ratio n8/n1 = {ratio:.3}, expected in [0.25, 0.50]"));
    assert!(pass, "ratio {ratio}");
}

/// Criterion 7: averaging 8 disjoint-topic reviews decodes shorter than a
/// single review, and decoded length is a monotone function of norm.
#[test]
fn criterion_7_degeneration_reproduction() {
    let topics = 8;
    let words_per_topic = 6;
    let vocab: Vec<String> = (0..topics)
        .flat_map(|t| (0..words_per_topic).map(move |w| format!("topic{t}word{w}")))
        .collect();
    let reviews: Vec<TokenSeq> = (0..topics)
        .map(|t| {
            TokenSeq::new(
                (0..words_per_topic)
                    .map(|w| format!("topic{t}word{w}"))
                    .collect(),
            )
        })
        .collect();

    let mut shorter = 0usize;
    for trial in 0..1000u64 {
        let model = ToyAutoencoder::new(vocab.clone(), 32, 2.0, 64, trial).unwrap();
        let zs: Vec<LatentVector> = reviews.iter().map(|r| model.encode(r)).collect();
        let single = model.decode(&zs[(trial % topics as u64) as usize]).unwrap();
        let avg = model.decode(&simple_average(&zs).unwrap()).unwrap();
        if avg.len() < single.len() {
            shorter += 1;
        }
    }
    let rate = shorter as f64 / 1000.0;

    let model = ToyAutoencoder::new(vocab.clone(), 32, 2.0, 64, 0).unwrap();
    let base = model.embedding("topic0word0").unwrap().to_vec();
    let scaled: Vec<LatentVector> = [0.5, 1.5, 2.5, 3.5]
        .iter()
        .map(|k| LatentVector::new(base.iter().map(|v| v * k).collect()))
        .collect();
    let norms: Vec<f64> = scaled.iter().map(l2_norm).collect();
    let lengths: Vec<f64> = scaled
        .iter()
        .map(|z| model.decode(z).unwrap().len() as f64)
        .collect();
    let rho = spearman(&norms, &lengths).unwrap();

    let pass = rate >= 0.90 && rho == 1.0;
    report(
        7,
        pass,
        &format!("avg shorter in {:.1}% of 1000 trials; norm-length spearman {rho}", 100.0 * rate),
    );
    assert!(rate >= 0.90, "rate {rate}");
    assert_eq!(rho, 1.0);
}

/// Criterion 8: identical config and seed produce byte-identical outputs at
/// worker counts 1 and 8.
#[test]
fn criterion_8_worker_count_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("entities.jsonl");
    let mut lines = String::new();
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let vocab = ["clean", "room", "staff", "friendly", "noisy", "street", "great", "location"];
    for e in 0..6 {
        let reviews: Vec<String> = (0..4)
            .map(|_| {
                (0..6)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        lines.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "entity_id": format!("hotel-{e}"),
                "reviews": reviews,
                "summary": "clean room great location",
            })
        ));
    }
    std::fs::write(&input, lines).unwrap();

    // Identical config both times, including the output path; only the
    // worker count differs between the two runs.
    let out = dir.path().join("out");
    let run = |workers: usize| {
        let cfg = RunConfig {
            method: "coop-exact".into(),
            overlap: coop::coopsearch::OverlapMetric::Rouge1,
            ref_mode: RefMode::Average,
            input: input.clone(),
            latents: None,
            toy_vocab: None,
            toy_dim: 32,
            kappa: 2.0,
            max_len: 32,
            block_pronouns: true,
            max_exact_n: 16,
            seed: 17,
            workers,
            out: out.clone(),
        };
        run_summarize(&cfg).unwrap();
        (
            std::fs::read(out.join("summaries.jsonl")).unwrap(),
            std::fs::read(out.join("metrics.json")).unwrap(),
        )
    };
    let a = run(1);
    let b = run(8);
    let pass = a == b;
    report(8, pass, "summaries.jsonl and metrics.json byte-identical at workers 1 and 8");
    assert_eq!(a.0, b.0, "summaries.jsonl differs between worker counts");
    assert_eq!(a.1, b.1, "metrics.json differs between worker counts");
}

/// Criterion 9: the README states explicitly which published numbers are out
/// of reach without the original trained models.
#[test]
fn criterion_9_non_reproducibility_statement() {
    let readme_path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md");
    let readme = std::fs::read_to_string(readme_path).unwrap();
    let required = ["Not reproduced", "trained", "invariant"];
    let missing: Vec<&str> = required
        .iter()
        .filter(|needle| !readme.contains(**needle))
        .copied()
        .collect();
    let pass = missing.is_empty();
    report(9, pass, "README carries an explicit non-reproducibility statement");
    assert!(pass, "README missing: {missing:?}");
}
