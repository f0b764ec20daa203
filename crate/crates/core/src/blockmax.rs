//! Two-level guided block-max (BMW-style) traversal.
//!
//! Cursors stay sorted by their current document id. Pivot identification
//! walks that order, accumulating alpha-combined list maxima until they
//! exceed the global threshold: no document before the pivot can qualify,
//! so earlier cursors skip forward at block granularity. The local check
//! bounds the pivot document by beta-combined block maxima and tightens the
//! bound one list at a time, materializing a block's weights only when its
//! metadata alone cannot prune.

use crate::error::Result;
use crate::index::DualIndex;
use crate::query::{
    build_states, candidate_count, canonical_sums, Contribution, EffortCounters, Query,
    QueryRun, QueryTermState, TraversalConfig, TraversalTrace,
};
use crate::score::{mix, Eligibility, ScoreTriple, TripleTopK};

/// Smallest 1-based position `p` in cursor order whose prefix of combined
/// maxima exceeds the global threshold; `None` when even the full sum stays
/// at or below it (every remaining document is globally bounded out).
pub fn bmw_find_pivot(combined_maxima_in_cursor_order: &[f64], theta_gl_effective: f64) -> Option<usize> {
    let mut prefix = 0.0;
    for (i, m) in combined_maxima_in_cursor_order.iter().enumerate() {
        prefix += m;
        if prefix > theta_gl_effective {
            return Some(i + 1);
        }
    }
    None
}

enum LocalOutcome {
    Pruned { rank_partial: f64 },
    Scored(ScoreTriple),
}

/// Block-max local check for the pivot document.
///
/// The initial bound sums beta-combined block maxima of the blocks that may
/// contain the document (zero when none does). If that already clears the
/// threshold the document is pruned without opening any block; otherwise
/// lists are materialized in ascending block-max order, each replacement of
/// a block maximum by the actual weight re-checked against the threshold.
fn bmw_local_check(
    states: &mut [QueryTermState<'_>],
    live: &[usize],
    doc: u32,
    theta_lo_effective: f64,
    coeffs: crate::score::MixCoefficients,
    counters: &mut EffortCounters,
) -> LocalOutcome {
    // (state index, beta-combined block max)
    let mut deltas: Vec<(usize, f64)> = live
        .iter()
        .map(|&i| {
            let d = states[i]
                .cursor
                .block_for(doc)
                .map_or(0.0, |b| mix(b.delta_b, b.delta_l, coeffs.beta));
            (i, d)
        })
        .collect();
    let mut remaining: f64 = deltas.iter().map(|&(_, d)| d).sum();
    let mut contribs: Vec<Contribution> = Vec::with_capacity(live.len());
    let check = |contribs: &mut Vec<Contribution>, remaining: f64| -> bool {
        let (sum_b, sum_l) = canonical_sums(contribs);
        mix(sum_b, sum_l, coeffs.beta) + remaining <= theta_lo_effective
    };
    let mut pruned = check(&mut contribs, remaining);
    if !pruned {
        // Fixed inspection order: ascending combined block max, ties by
        // term and occurrence.
        deltas.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(states[a.0].term_id.cmp(&states[b.0].term_id))
                .then(states[a.0].occurrence.cmp(&states[b.0].occurrence))
        });
        for (i, delta) in deltas {
            let state = &mut states[i];
            state.cursor.seek_geq(doc, counters);
            if state.cursor.current_doc() == Some(doc) {
                let (w_b, w_l) = state.cursor.weights(counters);
                contribs.push(Contribution {
                    occurrence: state.occurrence,
                    w_b,
                    w_l,
                });
            }
            remaining -= delta;
            if check(&mut contribs, remaining) {
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

/// Runs the two-level guided block-max traversal for one query.
pub fn search(query: &Query, index: &DualIndex, config: &TraversalConfig) -> Result<QueryRun> {
    config.validate()?;
    let coeffs = config.coeffs;
    let mut counters = EffortCounters::default();
    let mut trace = config.trace_enabled.then(TraversalTrace::default);

    let mut states = build_states(query, index, coeffs);
    let mut queues = TripleTopK::new(config.k, config.factor_f)?;
    if states.is_empty() {
        return Ok(crate::maxscore::finish(query, queues, counters, trace, 0));
    }

    loop {
        // Cursor order: ascending current doc id, ties fixed for determinism.
        let mut live: Vec<usize> = (0..states.len())
            .filter(|&i| !states[i].cursor.is_exhausted())
            .collect();
        if live.is_empty() {
            break;
        }
        live.sort_by(|&a, &b| {
            let da = states[a].cursor.current_doc().unwrap();
            let db = states[b].cursor.current_doc().unwrap();
            da.cmp(&db)
                .then(states[a].term_id.cmp(&states[b].term_id))
                .then(states[a].occurrence.cmp(&states[b].occurrence))
        });
        debug_assert!(live.windows(2).all(|w| {
            states[w[0]].cursor.current_doc() <= states[w[1]].cursor.current_doc()
        }));

        let maxima: Vec<f64> = live
            .iter()
            .map(|&i| states[i].combined_max_alpha)
            .collect();
        counters.repartition_count += 1;
        let Some(pivot_pos) = bmw_find_pivot(&maxima, queues.effective_theta_gl()) else {
            break;
        };
        let doc = states[live[pivot_pos - 1]].cursor.current_doc().unwrap();
        if let Some(t) = trace.as_mut() {
            t.visited_docs.push(doc);
        }

        match bmw_local_check(
            &mut states,
            &live,
            doc,
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

        // The pivot is processed and everything before it is globally
        // bounded out; move every trailing cursor past the pivot document.
        for &i in &live {
            let cur = states[i].cursor.current_doc();
            if cur.is_some_and(|c| c <= doc) {
                states[i].cursor.seek_geq(doc + 1, &mut counters);
            }
        }
    }

    let candidates = if config.counters_enabled {
        candidate_count(index, &query.terms)
    } else {
        0
    };
    Ok(crate::maxscore::finish(query, queues, counters, trace, candidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bm25::Bm25Params;
    use crate::corpus::{Corpus, CorpusDoc, CorpusEntry};
    use crate::index::{build_index, AlignmentMode};
    use crate::query::Algorithm;
    use crate::score::MixCoefficients;

    #[test]
    fn pivot_position_from_prefix_sums() {
        assert_eq!(bmw_find_pivot(&[3.0, 1.0], 2.5), Some(1));
        assert_eq!(bmw_find_pivot(&[1.0, 1.0, 3.0], 2.5), Some(3));
        assert_eq!(bmw_find_pivot(&[1.0, 1.0], 2.5), None);
        assert_eq!(bmw_find_pivot(&[0.5], f64::NEG_INFINITY), Some(1));
    }

    #[test]
    fn pivot_matches_exhaustive_prefix_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let n = rng.gen_range(1..9);
            let maxima: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let theta = if rng.gen_bool(0.2) {
                f64::NEG_INFINITY
            } else {
                rng.gen_range(0.0..8.0)
            };
            let mut expect = None;
            for p in 1..=n {
                let prefix: f64 = maxima[..p].iter().sum();
                if prefix > theta {
                    expect = Some(p);
                    break;
                }
            }
            assert_eq!(bmw_find_pivot(&maxima, theta), expect);
        }
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

    #[test]
    fn single_term_query_returns_largest_weights() {
        let docs: Vec<CorpusDoc> = (0..12u32)
            .map(|d| doc(d, &[(1, 1, f64::from((d * 7) % 12))]))
            .collect();
        // w_l == 0 postings would be dropped; shift them up by one.
        let docs: Vec<CorpusDoc> = docs
            .into_iter()
            .map(|mut d| {
                d.entries[0].w_l += 1.0;
                d
            })
            .collect();
        let index = index_from(docs);
        let coeffs = MixCoefficients::new(0.0, 0.0, 0.0).unwrap();
        let config = TraversalConfig::new(coeffs, 3, 1.0, Algorithm::Bmw2gti);
        let run = search(&Query::new("q", vec![1]), &index, &config).unwrap();
        let expect = crate::oracle::exhaustive_topk(&Query::new("q", vec![1]), &index, 0.0, 3);
        assert_eq!(run.results, expect);
    }

    #[test]
    fn empty_and_unknown_queries() {
        let index = index_from(vec![doc(0, &[(1, 1, 1.0)])]);
        let coeffs = MixCoefficients::new(0.5, 0.5, 0.5).unwrap();
        let config = TraversalConfig::new(coeffs, 5, 1.0, Algorithm::Bmw2gti);
        let run = search(&Query::new("q", vec![42]), &index, &config).unwrap();
        assert!(run.results.is_empty());
    }

    #[test]
    fn block_metadata_alone_can_prune() {
        // Blocks of size 1 make block maxima exact, so a full queue prunes
        // later documents from metadata without opening their blocks.
        let mut docs: Vec<CorpusDoc> = (0..6u32).map(|d| doc(d, &[(1, 1, 10.0)])).collect();
        docs.extend((6..30u32).map(|d| doc(d, &[(2, 1, 0.5)])));
        let corpus = Corpus::from_docs(docs);
        let index = build_index(&corpus, Bm25Params::default(), 1, AlignmentMode::default())
            .unwrap()
            .index;
        let coeffs = MixCoefficients::new(0.0, 0.0, 0.0).unwrap();
        let config = TraversalConfig::new(coeffs, 3, 1.0, Algorithm::Bmw2gti).with_counters(true);
        let run = search(&Query::new("q", vec![1, 2]), &index, &config).unwrap();
        let expect = crate::oracle::exhaustive_topk(&Query::new("q", vec![1, 2]), &index, 0.0, 3);
        assert_eq!(run.results, expect);
        assert!(run.counters.docs_locally_pruned > 0);
        // The 0.5-weight blocks never need their weights materialized once
        // the queue holds three 10.0-weight documents.
        assert!(run.counters.blocks_opened < 30);
    }
}
