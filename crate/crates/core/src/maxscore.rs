//! Two-level guided MaxScore traversal.
//!
//! Terms are partitioned into essential and non-essential lists against the
//! global threshold using alpha-combined list maxima (global pruning); each
//! pivot document is then scored incrementally, tightening a beta-combined
//! partial bound against the local threshold (local pruning). Documents that
//! survive enter all three queues; locally pruned documents keep the partial
//! rank score they accumulated and enter the final-ranking queue only.
//! Globally skipped documents never enter any queue.

use crate::error::{Error, Result};
use crate::index::DualIndex;
use crate::query::{
    build_states, candidate_count, canonical_sums, Contribution, EffortCounters, Query,
    QueryRun, QueryTermState, TraversalConfig, TraversalTrace,
};
use crate::score::{mix, Eligibility, ScoreTriple, TripleTopK};

/// Largest pivot `p` in `[1, N]` such that the sum of the first `p - 1`
/// combined maxima stays at or below the global threshold; terms at
/// positions `p..N` are essential. Falls back to 1 (every term essential)
/// while the threshold is still `-inf`.
pub fn partition_terms(sorted_combined_maxima: &[f64], theta_gl_effective: f64) -> Result<usize> {
    if sorted_combined_maxima.is_empty() {
        return Err(Error::domain("cannot partition an empty term list"));
    }
    let n = sorted_combined_maxima.len();
    let mut prefix = 0.0;
    let mut pivot = 1;
    for p in 1..=n {
        // prefix of p - 1 maxima
        if p > 1 {
            prefix += sorted_combined_maxima[p - 2];
        }
        if prefix <= theta_gl_effective {
            pivot = p;
        } else {
            break;
        }
    }
    Ok(pivot)
}

/// Minimum unvisited document across the essential cursors, or `None` when
/// they are all exhausted.
pub(crate) fn next_pivot_doc(states: &[QueryTermState<'_>], essential_start: usize) -> Option<u32> {
    states[essential_start..]
        .iter()
        .filter_map(|s| s.cursor.current_doc())
        .min()
}

/// Outcome of local pruning for one pivot document.
enum LocalOutcome {
    Pruned { rank_partial: f64 },
    Scored(ScoreTriple),
}

/// Incremental scoring of the pivot document with beta-combined bound
/// tightening. Essential lists contribute first; non-essential lists are
/// inspected from the pivot position downward, re-checking the prune
/// condition after every tightening step.
fn local_prune_and_score(
    states: &mut [QueryTermState<'_>],
    doc: u32,
    essential_start: usize,
    prefix_beta: &[f64],
    theta_lo_effective: f64,
    coeffs: crate::score::MixCoefficients,
    counters: &mut EffortCounters,
) -> LocalOutcome {
    let mut contribs: Vec<Contribution> = Vec::with_capacity(states.len());
    for state in states[essential_start..].iter_mut() {
        if state.cursor.current_doc() == Some(doc) {
            let (w_b, w_l) = state.cursor.weights(counters);
            contribs.push(Contribution {
                occurrence: state.occurrence,
                w_b,
                w_l,
            });
        }
    }
    let check = |contribs: &mut Vec<Contribution>, bound: f64| -> bool {
        let (sum_b, sum_l) = canonical_sums(contribs);
        mix(sum_b, sum_l, coeffs.beta) + bound <= theta_lo_effective
    };
    let mut pruned = check(&mut contribs, prefix_beta[essential_start]);
    if !pruned {
        for x in (0..essential_start).rev() {
            let state = &mut states[x];
            state.cursor.seek_geq(doc, counters);
            if state.cursor.current_doc() == Some(doc) {
                let (w_b, w_l) = state.cursor.weights(counters);
                contribs.push(Contribution {
                    occurrence: state.occurrence,
                    w_b,
                    w_l,
                });
            }
            if check(&mut contribs, prefix_beta[x]) {
                pruned = true;
                break;
            }
        }
    }
    let (sum_b, sum_l) = canonical_sums(&mut contribs);
    if pruned {
        LocalOutcome::Pruned {
            rank_partial: mix(sum_b, sum_l, coeffs.gamma),
        }
    } else {
        LocalOutcome::Scored(ScoreTriple::from_raw(sum_b, sum_l, coeffs))
    }
}

/// Runs the two-level guided MaxScore traversal for one query.
pub fn search(query: &Query, index: &DualIndex, config: &TraversalConfig) -> Result<QueryRun> {
    config.validate()?;
    let coeffs = config.coeffs;
    let mut counters = EffortCounters::default();
    let mut trace = config.trace_enabled.then(TraversalTrace::default);

    let mut states = build_states(query, index, coeffs);
    let mut queues = TripleTopK::new(config.k, config.factor_f)?;
    if states.is_empty() {
        return Ok(finish(query, queues, counters, trace, 0));
    }

    // Presort by alpha-combined maximum; ties fixed by term and occurrence.
    states.sort_by(|a, b| {
        a.combined_max_alpha
            .total_cmp(&b.combined_max_alpha)
            .then(a.term_id.cmp(&b.term_id))
            .then(a.occurrence.cmp(&b.occurrence))
    });
    let n = states.len();
    let maxima_alpha: Vec<f64> = states.iter().map(|s| s.combined_max_alpha).collect();
    // prefix_beta[i] = sum of beta-combined maxima of the first i terms
    let mut prefix_beta = vec![0.0; n + 1];
    for i in 0..n {
        prefix_beta[i + 1] = prefix_beta[i] + states[i].combined_max_beta;
    }
    let total_alpha: f64 = maxima_alpha.iter().sum();

    let mut essential_start = 0usize;
    let mut partition_theta = f64::NEG_INFINITY;
    counters.repartition_count += 1;

    loop {
        let theta_gl = queues.effective_theta_gl();
        if theta_gl > partition_theta {
            essential_start = partition_terms(&maxima_alpha, theta_gl)? - 1;
            partition_theta = theta_gl;
            counters.repartition_count += 1;
        }
        // Every remaining document is globally bounded below the threshold.
        if total_alpha <= theta_gl {
            break;
        }
        let Some(doc) = next_pivot_doc(&states, essential_start) else {
            break;
        };
        if let Some(t) = trace.as_mut() {
            t.visited_docs.push(doc);
        }
        match local_prune_and_score(
            &mut states,
            doc,
            essential_start,
            &prefix_beta,
            queues.effective_theta_lo(),
            coeffs,
            &mut counters,
        ) {
            LocalOutcome::Scored(triple) => {
                counters.docs_fully_scored += 1;
                queues.offer(doc, triple, Eligibility::All);
            }
            LocalOutcome::Pruned { rank_partial } => {
                counters.docs_locally_pruned += 1;
                if let Some(t) = trace.as_mut() {
                    t.pruned_partials.push((doc, rank_partial));
                }
                queues.offer_rank_only(doc, rank_partial);
            }
        }
        // Move every essential cursor sitting on the pivot past it.
        for state in states[essential_start..].iter_mut() {
            if state.cursor.current_doc() == Some(doc) {
                state.cursor.advance(&mut counters);
            }
        }
    }

    let candidates = if config.counters_enabled {
        candidate_count(index, &query.terms)
    } else {
        0
    };
    Ok(finish(query, queues, counters, trace, candidates))
}

pub(crate) fn finish(
    query: &Query,
    queues: TripleTopK,
    mut counters: EffortCounters,
    trace: Option<TraversalTrace>,
    candidates: u64,
) -> QueryRun {
    let visited = counters.docs_fully_scored + counters.docs_locally_pruned;
    counters.docs_globally_skipped = candidates.saturating_sub(visited);
    QueryRun {
        query_id: query.id.clone(),
        results: queues.final_topk(),
        counters,
        final_thetas: (queues.theta_gl(), queues.theta_lo(), queues.theta_rk()),
        latency_ms: 0.0,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bm25::Bm25Params;
    use crate::corpus::{Corpus, CorpusDoc, CorpusEntry};
    use crate::index::{build_index, AlignmentMode};
    use crate::query::ListCursor;
    use crate::score::MixCoefficients;

    #[test]
    fn partition_matches_prefix_sum_example() {
        let maxima = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(partition_terms(&maxima, 2.5).unwrap(), 2);
        assert_eq!(partition_terms(&maxima, f64::NEG_INFINITY).unwrap(), 1);
        assert_eq!(partition_terms(&maxima, 100.0).unwrap(), 4);
        assert!(partition_terms(&[], 1.0).is_err());
    }

    #[test]
    fn partition_matches_linear_scan_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.gen_range(1..9);
            let mut maxima: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
            maxima.sort_by(f64::total_cmp);
            let theta = if rng.gen_bool(0.2) {
                f64::NEG_INFINITY
            } else {
                rng.gen_range(0.0..10.0)
            };
            // oracle: test every pivot candidate directly
            let mut expect = 1;
            for p in 1..=n {
                let prefix: f64 = maxima[..p - 1].iter().sum();
                if prefix <= theta {
                    expect = expect.max(p);
                }
            }
            assert_eq!(partition_terms(&maxima, theta).unwrap(), expect);
        }
    }

    fn index_from(docs: Vec<CorpusDoc>) -> DualIndex {
        build_index(
            &Corpus::from_docs(docs),
            Bm25Params::default(),
            4,
            AlignmentMode::default(),
        )
        .unwrap()
        .index
    }

    fn doc(doc_id: u32, entries: &[(u32, u32, f64)]) -> CorpusDoc {
        CorpusDoc {
            doc_id,
            entries: entries
                .iter()
                .map(|&(term_id, tf, w_l)| CorpusEntry { term_id, tf, w_l })
                .collect(),
        }
    }

    fn states_for<'a>(
        index: &'a DualIndex,
        terms: &[u32],
        coeffs: MixCoefficients,
    ) -> Vec<QueryTermState<'a>> {
        let q = Query::new("t", terms.to_vec());
        build_states(&q, index, coeffs)
    }

    #[test]
    fn pivot_doc_is_min_over_essential_cursors() {
        let index = index_from(vec![
            doc(0, &[(1, 1, 1.0)]),
            doc(3, &[(2, 1, 1.0)]),
            doc(7, &[(1, 1, 1.0)]),
            doc(1, &[(3, 1, 1.0)]),
            doc(2, &[(3, 1, 1.0)]),
            doc(4, &[(1, 1, 1.0)]),
            doc(5, &[(1, 1, 1.0)]),
            doc(6, &[(1, 1, 1.0)]),
        ]);
        let coeffs = MixCoefficients::new(0.5, 0.5, 0.5).unwrap();
        let mut states = states_for(&index, &[1, 2], coeffs);
        let mut c = EffortCounters::default();
        states[0].cursor.seek_geq(7, &mut c);
        states[1].cursor.seek_geq(3, &mut c);
        assert_eq!(next_pivot_doc(&states, 0), Some(3));
        // exhaust both
        states[0].cursor.seek_geq(100, &mut c);
        states[1].cursor.seek_geq(100, &mut c);
        assert_eq!(next_pivot_doc(&states, 0), None);
    }

    #[test]
    fn pivot_doc_matches_merge_scan_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let num_docs = rng.gen_range(4..40u32);
            let docs: Vec<CorpusDoc> = (0..num_docs)
                .map(|d| {
                    let mut entries = Vec::new();
                    for t in 0..4u32 {
                        if rng.gen_bool(0.4) {
                            entries.push(CorpusEntry {
                                term_id: t,
                                tf: 1,
                                w_l: rng.gen_range(0.1..2.0),
                            });
                        }
                    }
                    if entries.is_empty() {
                        entries.push(CorpusEntry {
                            term_id: 5,
                            tf: 1,
                            w_l: 1.0,
                        });
                    }
                    CorpusDoc { doc_id: d, entries }
                })
                .collect();
            let index = index_from(docs);
            let coeffs = MixCoefficients::new(1.0, 1.0, 1.0).unwrap();
            let terms: Vec<u32> = (0..4).filter(|t| index.has_term(*t)).collect();
            if terms.is_empty() {
                continue;
            }
            let mut states = states_for(&index, &terms, coeffs);
            let mut c = EffortCounters::default();
            let start = rng.gen_range(0..num_docs);
            for s in states.iter_mut() {
                s.cursor.seek_geq(start, &mut c);
            }
            // oracle: merge of all remaining docs across the lists
            let oracle = states
                .iter()
                .filter_map(|s| s.cursor.current_doc())
                .min();
            assert_eq!(next_pivot_doc(&states, 0), oracle);
        }
    }

    #[test]
    fn no_pruning_when_threshold_unset() {
        let index = index_from(vec![
            doc(0, &[(1, 1, 1.0), (2, 1, 2.0)]),
            doc(1, &[(1, 2, 0.5)]),
            doc(2, &[(2, 1, 3.0)]),
        ]);
        let coeffs = MixCoefficients::new(0.5, 0.5, 0.5).unwrap();
        let mut states = states_for(&index, &[1, 2], coeffs);
        let n = states.len();
        let mut prefix_beta = vec![0.0; n + 1];
        for i in 0..n {
            prefix_beta[i + 1] = prefix_beta[i] + states[i].combined_max_beta;
        }
        let mut counters = EffortCounters::default();
        match local_prune_and_score(
            &mut states,
            0,
            0,
            &prefix_beta,
            f64::NEG_INFINITY,
            coeffs,
            &mut counters,
        ) {
            LocalOutcome::Scored(triple) => {
                assert!(triple.rank > 0.0);
                assert_eq!(triple.global, triple.local);
            }
            LocalOutcome::Pruned { .. } => panic!("must not prune at -inf"),
        }
    }

    #[test]
    fn single_term_prunes_once_threshold_clears_bound() {
        // One list whose combined maximum is ~1.0 with theta_lo = 2.0: the
        // first check after extracting the essential weight prunes.
        let index = index_from(vec![doc(0, &[(1, 1, 1.0)]), doc(1, &[(1, 1, 1.0)])]);
        let coeffs = MixCoefficients::new(0.0, 0.0, 0.0).unwrap();
        let mut states = states_for(&index, &[1], coeffs);
        let prefix_beta = vec![0.0, states[0].combined_max_beta];
        let mut counters = EffortCounters::default();
        match local_prune_and_score(&mut states, 0, 0, &prefix_beta, 2.0, coeffs, &mut counters) {
            LocalOutcome::Pruned { rank_partial } => assert_eq!(rank_partial, 1.0),
            LocalOutcome::Scored(_) => panic!("expected pruning"),
        }
    }

    #[test]
    fn degenerate_k_returns_all_docs_without_pruning() {
        let index = index_from(vec![
            doc(0, &[(1, 1, 1.0)]),
            doc(1, &[(1, 2, 2.0)]),
            doc(2, &[(2, 1, 3.0)]),
        ]);
        let coeffs = MixCoefficients::new(0.3, 0.6, 0.9).unwrap();
        let config = TraversalConfig::new(coeffs, 50, 1.0, crate::query::Algorithm::Maxscore2gti)
            .with_counters(true);
        let run = search(&Query::new("q", vec![1, 2]), &index, &config).unwrap();
        assert_eq!(run.results.len(), 3);
        assert_eq!(run.counters.docs_locally_pruned, 0);
        assert_eq!(run.counters.docs_globally_skipped, 0);
        assert_eq!(run.final_thetas.0, f64::NEG_INFINITY);
    }

    #[test]
    fn empty_query_yields_empty_run() {
        let index = index_from(vec![doc(0, &[(1, 1, 1.0)])]);
        let coeffs = MixCoefficients::new(1.0, 1.0, 1.0).unwrap();
        let config = TraversalConfig::new(coeffs, 5, 1.0, crate::query::Algorithm::Maxscore2gti);
        let run = search(&Query::new("q", vec![99]), &index, &config).unwrap();
        assert!(run.results.is_empty());
    }

    #[test]
    fn cursor_weights_count_block_opens_once_per_block() {
        let index = index_from(vec![
            doc(0, &[(1, 1, 1.0)]),
            doc(1, &[(1, 1, 1.0)]),
            doc(2, &[(1, 1, 1.0)]),
        ]);
        let mut counters = EffortCounters::default();
        let mut cur = ListCursor::new(index.list(1).unwrap());
        cur.weights(&mut counters);
        cur.advance(&mut counters);
        cur.weights(&mut counters);
        assert_eq!(counters.blocks_opened, 1);
    }
}
