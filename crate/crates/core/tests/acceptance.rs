//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p dualguide --test acceptance -- --nocapture`
//! (add `--release` to shrink wall time; every budget also holds in debug).

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Instant;

use dualguide::bm25::{bm25_weight, Bm25Params};
use dualguide::corpus::{Corpus, CorpusDoc, CorpusEntry};
use dualguide::eval::{mrr_at_k, ndcg_at_10, recall_at_k};
use dualguide::index::{build_index, AlignmentMode, DualIndex, FillMode};
use dualguide::oracle::exhaustive_topk;
use dualguide::query::{Algorithm, Query, TraversalConfig};
use dualguide::trec::{read_qrels, read_run, write_run};
use dualguide::verify::{
    campaign_prop1, campaign_prop2, campaign_prop3, campaign_rank_safety,
    synthetic_anchor_queries, synthetic_queries, synthetic_zipf_corpus, CampaignConfig,
    PropertyReport, ZipfCorpusSpec,
};
use dualguide::{maxscore, MixCoefficients};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn assert_clean(reports: &[PropertyReport], min_trials: u64) -> (u64, u64) {
    let trials = reports.iter().map(|p| p.trials).min().unwrap_or(0);
    let violations: u64 = reports.iter().map(|p| p.violations).sum();
    assert!(
        trials >= min_trials,
        "campaign ran only {trials} trials (need {min_trials})"
    );
    (trials, violations)
}

/// Criterion 1: rank-safety of both traversals against the exhaustive
/// oracle at equal coefficients, over >= 500 seeded random corpora, with
/// x in {0, 0.3, 0.5, 1} and k in {1, 5, 10, corpus size}; exact doc order,
/// scores within 1e-9 relative; campaign under 60 s.
#[test]
fn criterion_1_rank_safety() {
    let cfg = CampaignConfig {
        trials: 500,
        seed: 42,
        max_docs: 2000,
    };
    let start = Instant::now();
    let mut reports = Vec::new();
    campaign_rank_safety(&cfg, &mut reports).unwrap();
    let elapsed = start.elapsed();
    let (trials, violations) = assert_clean(&reports, 500);
    report(
        "1-rank-safety",
        violations == 0 && elapsed.as_secs() < 60,
        &format!("{trials} corpora, {violations} violations, {elapsed:.2?}"),
    );
}

/// Criterion 2: top-k triple-intersection containment over >= 500
/// assumption-satisfying trials with alpha=1, beta in {0, 0.3, 1},
/// gamma in {0.05, 0.5}.
#[test]
fn criterion_2_intersection_containment() {
    let cfg = CampaignConfig {
        trials: 500,
        seed: 43,
        max_docs: 2000,
    };
    let mut reports = Vec::new();
    campaign_prop1(&cfg, &mut reports).unwrap();
    let (trials, violations) = assert_clean(&reports, 500);
    report(
        "2-intersection-containment",
        violations == 0,
        &format!("{trials} trials, {violations} violations"),
    );
}

/// Criterion 3: mean gamma-score of the guided top-k dominates two-stage
/// retrieval within 1e-9 over >= 500 trials restricted to alpha == beta or
/// beta == gamma.
#[test]
fn criterion_3_mean_score_dominance() {
    let cfg = CampaignConfig {
        trials: 500,
        seed: 44,
        max_docs: 2000,
    };
    let mut reports = Vec::new();
    campaign_prop2(&cfg, &mut reports).unwrap();
    let (trials, violations) = assert_clean(&reports, 500);
    report(
        "3-mean-score-dominance",
        violations == 0,
        &format!("{trials} trials, {violations} violations"),
    );
}

/// Criterion 4: relevant-count dominance over two-stage retrieval on
/// >= 200 labeled, outmatch-chain-satisfying trials.
#[test]
fn criterion_4_relevant_count_dominance() {
    let cfg = CampaignConfig {
        trials: 200,
        seed: 45,
        max_docs: 2000,
    };
    let mut reports = Vec::new();
    campaign_prop3(&cfg, &mut reports).unwrap();
    let (trials, violations) = assert_clean(&reports, 200);
    report(
        "4-relevant-count-dominance",
        violations == 0,
        &format!("{trials} trials, {violations} violations"),
    );
}

/// Shared synthetic corpus: 100k documents, Zipf-distributed postings with
/// flat learned weights, topical rare-term pairs, quality-ordered doc ids.
fn synthetic_index() -> &'static (ZipfCorpusSpec, DualIndex) {
    static INDEX: OnceLock<(ZipfCorpusSpec, DualIndex)> = OnceLock::new();
    INDEX.get_or_init(|| {
        let spec = ZipfCorpusSpec {
            anchor_topics: 10,
            anchor_docs_per_topic: 15,
            ..Default::default()
        };
        let corpus = synthetic_zipf_corpus(11, &spec);
        let index = build_index(&corpus, Bm25Params::default(), 64, AlignmentMode::default())
            .unwrap()
            .index;
        (spec, index)
    })
}

fn batch_fully_scored(
    index: &DualIndex,
    queries: &[Query],
    coeffs: MixCoefficients,
    k: usize,
    factor_f: f64,
) -> u64 {
    let config = TraversalConfig::new(coeffs, k, factor_f, Algorithm::Maxscore2gti)
        .with_counters(true);
    queries
        .iter()
        .map(|q| {
            maxscore::search(q, index, &config)
                .unwrap()
                .counters
                .docs_fully_scored
        })
        .sum()
}

/// Criterion 5: guided traversal (alpha=1, beta=0.3) fully scores fewer
/// than half the documents of the unguided configuration at k=10 on the
/// synthetic corpus, and the gap narrows as k grows to 1000.
#[test]
fn criterion_5_pruning_effectiveness_trend() {
    let (spec, index) = synthetic_index();
    let queries = synthetic_anchor_queries(12, 20, spec, 0..30, 3..=4);
    let guided = MixCoefficients::new(1.0, 0.3, 0.05).unwrap();
    let unguided = MixCoefficients::new(0.0, 0.0, 0.0).unwrap();
    let ratio = |k: usize| {
        let g = batch_fully_scored(index, &queries, guided, k, 1.0);
        let u = batch_fully_scored(index, &queries, unguided, k, 1.0);
        (g, u, g as f64 / u as f64)
    };
    let (g10, u10, r10) = ratio(10);
    let (g1000, u1000, r1000) = ratio(1000);
    report(
        "5-pruning-effectiveness-trend",
        r10 < 0.5 && r1000 > r10,
        &format!(
            "k=10 guided {g10} vs unguided {u10} (ratio {r10:.3}); \
             k=1000 guided {g1000} vs unguided {u1000} (ratio {r1000:.3})"
        ),
    );
}

/// Criterion 6: threshold over-estimation direction. F=1 stays rank-safe
/// (criterion 1 covers the campaign; re-checked here on the synthetic
/// corpus); F=1.5 at alpha=beta=gamma=0 fully scores strictly fewer
/// documents and loses some oracle recall.
#[test]
fn criterion_6_threshold_over_estimation() {
    let (_, index) = synthetic_index();
    let queries = synthetic_queries(12, 20, 5..120, 2, 6);
    let coeffs = MixCoefficients::new(0.0, 0.0, 0.0).unwrap();
    let k = 10;

    let mut exact_at_f1 = true;
    let mut recall_sum = 0.0;
    for q in &queries {
        let oracle = exhaustive_topk(q, index, 0.0, k);
        let f1 = maxscore::search(
            q,
            index,
            &TraversalConfig::new(coeffs, k, 1.0, Algorithm::Maxscore2gti),
        )
        .unwrap();
        exact_at_f1 &= dualguide::verify::ranked_lists_match(&oracle, &f1.results, 1e-9);

        let f15 = maxscore::search(
            q,
            index,
            &TraversalConfig::new(coeffs, k, 1.5, Algorithm::Maxscore2gti),
        )
        .unwrap();
        let oracle_set: BTreeSet<u32> = oracle.doc_ids().collect();
        let hit = f15.results.doc_ids().filter(|d| oracle_set.contains(d)).count();
        recall_sum += hit as f64 / oracle_set.len().max(1) as f64;
    }
    let recall_f15 = recall_sum / queries.len() as f64;

    let scored_f1 = batch_fully_scored(index, &queries, coeffs, k, 1.0);
    let scored_f15 = batch_fully_scored(index, &queries, coeffs, k, 1.5);
    report(
        "6-threshold-over-estimation",
        exact_at_f1 && scored_f15 < scored_f1 && recall_f15 <= 1.0 && recall_f15 < 1.0,
        &format!(
            "F=1 exact {exact_at_f1}; fully scored {scored_f1} -> {scored_f15}; \
             recall-vs-oracle {recall_f15:.4}"
        ),
    );
}

/// Criterion 7: alignment formulas on fixture corpora. One-filled weights
/// equal bm25(tf=1, .) and scale-filled weights equal ratio * w_L to 1e-12
/// relative; filled counts match hand counts.
#[test]
fn criterion_7_alignment_formulas() {
    // Fixture: four docs; terms 1 and 2 lexical, term 3 learned-only in
    // docs 0 and 2 (two fills), term 2 learned-only in doc 3 (one fill).
    let docs = vec![
        CorpusDoc {
            doc_id: 0,
            entries: vec![
                CorpusEntry { term_id: 1, tf: 2, w_l: 1.0 },
                CorpusEntry { term_id: 3, tf: 0, w_l: 3.0 },
            ],
        },
        CorpusDoc {
            doc_id: 1,
            entries: vec![CorpusEntry { term_id: 1, tf: 1, w_l: 0.5 }],
        },
        CorpusDoc {
            doc_id: 2,
            entries: vec![
                CorpusEntry { term_id: 2, tf: 3, w_l: 2.0 },
                CorpusEntry { term_id: 3, tf: 0, w_l: 1.5 },
            ],
        },
        CorpusDoc {
            doc_id: 3,
            entries: vec![
                CorpusEntry { term_id: 1, tf: 1, w_l: 1.0 },
                CorpusEntry { term_id: 2, tf: 0, w_l: 4.0 },
            ],
        },
    ];
    let corpus = Corpus::from_docs(docs);
    let params = Bm25Params::default();
    let hand_counted_fills = 3;

    // One-filling: every filled record carries bm25(tf=1) with the
    // post-fill document frequency of its list.
    let one = build_index(&corpus, params, 64, AlignmentMode::new(FillMode::OneFill)).unwrap();
    let mut checked_one = 0;
    let mut max_rel_one: f64 = 0.0;
    let avg = one.index.avg_doc_length;
    for (term, df) in [(2u32, 2u32), (3, 2)] {
        let list = one.index.list(term).unwrap();
        for r in &list.records {
            let original_tf: u32 = corpus.docs[r.doc_id as usize]
                .entries
                .iter()
                .find(|e| e.term_id == term)
                .unwrap()
                .tf;
            if original_tf == 0 {
                let doc_len = corpus.docs[r.doc_id as usize].token_length();
                let expect = bm25_weight(1, df, doc_len, avg, 4, params).unwrap();
                max_rel_one = max_rel_one.max((r.w_b - expect).abs() / expect.abs());
                checked_one += 1;
            }
        }
    }
    let one_ok = checked_one == hand_counted_fills
        && one.stats.filled_count == hand_counted_fills
        && max_rel_one <= 1e-12;

    // Scaled filling: filled weight is exactly ratio * w_L, with the ratio
    // recomputed here by a naive second pass over the corpus.
    let scaled =
        build_index(&corpus, params, 64, AlignmentMode::new(FillMode::ScaledFill)).unwrap();
    let (mut sum_b, mut n_b, mut sum_l, mut n_l) = (0.0, 0u32, 0.0, 0u32);
    for doc in &corpus.docs {
        for e in &doc.entries {
            if e.tf > 0 {
                let df = corpus
                    .docs
                    .iter()
                    .filter(|d| d.entries.iter().any(|x| x.term_id == e.term_id && x.tf > 0))
                    .count() as u32;
                sum_b +=
                    bm25_weight(e.tf, df, doc.token_length(), avg, 4, params).unwrap();
                n_b += 1;
            }
            if e.w_l > 0.0 {
                sum_l += e.w_l;
                n_l += 1;
            }
        }
    }
    let naive_ratio = (sum_b / f64::from(n_b)) / (sum_l / f64::from(n_l));
    let stats = scaled.scale.unwrap();
    let ratio_ok = (stats.scale_ratio - naive_ratio).abs() <= 1e-12 * naive_ratio.abs();
    let mut checked_scaled = 0;
    let mut max_rel_scaled: f64 = 0.0;
    for (term, doc, w_l) in [(3u32, 0u32, 3.0f64), (3, 2, 1.5), (2, 3, 4.0)] {
        let r = scaled
            .index
            .list(term)
            .unwrap()
            .records
            .iter()
            .find(|r| r.doc_id == doc)
            .unwrap();
        let expect = stats.scale_ratio * w_l;
        max_rel_scaled = max_rel_scaled.max((r.w_b - expect).abs() / expect.abs());
        checked_scaled += 1;
    }
    let scaled_ok = checked_scaled == hand_counted_fills
        && stats.filled_count == hand_counted_fills
        && ratio_ok
        && max_rel_scaled <= 1e-12;

    report(
        "7-alignment-formulas",
        one_ok && scaled_ok,
        &format!(
            "one-fill rel err {max_rel_one:.2e} over {checked_one} fills; \
             scaled rel err {max_rel_scaled:.2e}, ratio {:.6} vs naive {:.6}",
            stats.scale_ratio, naive_ratio
        ),
    );
}

/// Criterion 8: metric fixtures within 1e-9 of independently computed
/// values, including the worked nDCG example, plus TREC run/qrels
/// round-trip parse identity.
#[test]
fn criterion_8_metric_correctness() {
    use dualguide::query::{EffortCounters, QueryRun};
    use dualguide::score::{RankedList, ScoredDoc};

    let run_of = |ids: &[u32]| {
        RankedList::from_unsorted(
            ids.iter()
                .enumerate()
                .map(|(i, &doc_id)| ScoredDoc {
                    doc_id,
                    score: 50.0 - i as f64,
                })
                .collect(),
        )
    };
    let mut ok = true;
    let mut detail = String::new();

    // MRR fixtures
    let run = run_of(&[7, 3, 9, 2]);
    ok &= (mrr_at_k(&run, &BTreeSet::from([7]), 10) - 1.0).abs() <= 1e-9;
    ok &= mrr_at_k(&run, &BTreeSet::from([55]), 10).abs() <= 1e-9;
    ok &= (mrr_at_k(&run, &BTreeSet::from([2]), 10) - 0.25).abs() <= 1e-9;

    // recall fixtures
    ok &= (recall_at_k(&run, &BTreeSet::from([7, 3]), 10) - 1.0).abs() <= 1e-9;
    ok &= recall_at_k(&run, &BTreeSet::from([55, 56]), 10).abs() <= 1e-9;
    ok &= (recall_at_k(&run, &BTreeSet::from([2, 55, 56, 57]), 10) - 0.25).abs() <= 1e-9;

    // worked nDCG example: grades {A=3, B=1}, run [B, A]
    let graded = std::collections::BTreeMap::from([(1u32, 3u32), (2, 1)]);
    let got = ndcg_at_10(&run_of(&[2, 1]), &graded);
    let expect = (1.0 + 7.0 / 3f64.log2()) / (7.0 + 1.0 / 3f64.log2());
    ok &= (got - expect).abs() <= 1e-9;
    detail.push_str(&format!("ndcg {got:.6} vs {expect:.6}"));

    // ideal ordering is exactly 1
    ok &= (ndcg_at_10(&run_of(&[1, 2]), &graded) - 1.0).abs() <= 1e-12;

    // TREC round-trip parse identity
    let runs = vec![
        QueryRun {
            query_id: "q1".into(),
            results: run_of(&[3, 9, 4]),
            counters: EffortCounters::default(),
            final_thetas: (0.0, 0.0, 0.0),
            latency_ms: 0.0,
            trace: None,
        },
        QueryRun {
            query_id: "q2".into(),
            results: run_of(&[8]),
            counters: EffortCounters::default(),
            final_thetas: (0.0, 0.0, 0.0),
            latency_ms: 0.0,
            trace: None,
        },
    ];
    let mut buf = Vec::new();
    write_run(&mut buf, &runs, "acc").unwrap();
    let parsed = read_run(buf.as_slice()).unwrap();
    ok &= parsed.len() == 2
        && parsed["q1"] == runs[0].results
        && parsed["q2"] == runs[1].results;

    let qrels_text = "q1 0 3 2\nq1 0 9 0\nq2 0 8 1\n";
    let qrels = read_qrels(qrels_text.as_bytes()).unwrap();
    ok &= qrels.relevant_set("q1") == BTreeSet::from([3])
        && qrels.graded("q1").unwrap()[&9] == 0
        && qrels.relevant_set("q2") == BTreeSet::from([8]);

    report("8-metric-correctness", ok, &detail);
}
