//! Brute-force references and executable relevance-property checks.
//!
//! `exhaustive_topk` is the ground truth every traversal is compared
//! against: it scores each document containing at least one query term by
//! the x-combination of its BM25 and learned sums, accumulated in the same
//! canonical order the traversals use, so agreement can be asserted exactly.
//! The property checks falsification-test the guided traversal's relevance
//! guarantees: top-k intersection containment, mean-score dominance over
//! two-stage retrieval, and relevant-count dominance under the outmatch
//! chain.

use std::collections::{BTreeSet, HashMap};

use crate::error::Result;
use crate::index::DualIndex;
use crate::maxscore;
use crate::query::{Algorithm, Query, TraversalConfig};
use crate::score::{mix, MixCoefficients, RankedList, ScoredDoc};

/// Binary relevance labels for one query.
pub type RelevanceLabels = BTreeSet<u32>;

/// Raw BM25/learned sums for every document matching the query, accumulated
/// in query-occurrence order.
fn matching_sums(query: &Query, index: &DualIndex) -> HashMap<u32, (f64, f64)> {
    let mut sums: HashMap<u32, (f64, f64)> = HashMap::new();
    for &term in &query.terms {
        if let Some(list) = index.list(term) {
            for r in &list.records {
                let e = sums.entry(r.doc_id).or_insert((0.0, 0.0));
                e.0 += r.w_b;
                e.1 += r.w_l;
            }
        }
    }
    sums
}

/// Full ranking of every matching document under the x-combination.
pub fn exhaustive_ranking(query: &Query, index: &DualIndex, x: f64) -> RankedList {
    let docs = matching_sums(query, index)
        .into_iter()
        .map(|(doc_id, (sum_b, sum_l))| ScoredDoc {
            doc_id,
            score: mix(sum_b, sum_l, x),
        })
        .collect();
    RankedList::from_unsorted(docs)
}

/// Top-k of the exhaustive ranking.
pub fn exhaustive_topk(query: &Query, index: &DualIndex, x: f64, k: usize) -> RankedList {
    exhaustive_ranking(query, index, x).truncated(k)
}

/// Two-stage retrieval: fetch top k by the alpha-combination, then re-score
/// those documents with the gamma-combination and re-sort.
pub fn two_stage(
    query: &Query,
    index: &DualIndex,
    alpha: f64,
    gamma: f64,
    k: usize,
) -> RankedList {
    let first = exhaustive_topk(query, index, alpha, k);
    let sums = matching_sums(query, index);
    let rescored = first
        .iter()
        .map(|d| {
            let (sum_b, sum_l) = sums[&d.doc_id];
            ScoredDoc {
                doc_id: d.doc_id,
                score: mix(sum_b, sum_l, gamma),
            }
        })
        .collect();
    RankedList::from_unsorted(rescored)
}

/// Whether the ranking's top-k set is unique: no (near-)tie across the
/// k-th/(k+1)-th boundary. Near-ties within 1e-12 relative are flagged as
/// non-unique to stay conservative under floating point.
fn topk_is_unique(ranking: &RankedList, k: usize) -> bool {
    if ranking.len() <= k || k == 0 {
        return true;
    }
    let s_k = ranking.as_slice()[k - 1].score;
    let s_next = ranking.as_slice()[k].score;
    let tol = 1e-12 * s_k.abs().max(s_next.abs()).max(1.0);
    (s_k - s_next).abs() > tol
}

fn guided_run(
    query: &Query,
    index: &DualIndex,
    coeffs: MixCoefficients,
    k: usize,
) -> Result<RankedList> {
    let config = TraversalConfig::new(coeffs, k, 1.0, Algorithm::Maxscore2gti);
    Ok(maxscore::search(query, index, &config)?.results)
}

/// Outcome of the top-k intersection containment check.
#[derive(Debug, Clone, PartialEq)]
pub enum Prop1Outcome {
    Holds,
    Violated { witness: u32 },
    AssumptionUnmet,
}

/// Any document in the top-k of all three exhaustive rankings (by alpha,
/// beta, and gamma) must appear in the guided traversal's top-k.
pub fn check_prop1(
    query: &Query,
    index: &DualIndex,
    coeffs: MixCoefficients,
    k: usize,
) -> Result<Prop1Outcome> {
    let rankings = [
        exhaustive_ranking(query, index, coeffs.alpha),
        exhaustive_ranking(query, index, coeffs.beta),
        exhaustive_ranking(query, index, coeffs.gamma),
    ];
    if rankings.iter().any(|r| !topk_is_unique(r, k)) {
        return Ok(Prop1Outcome::AssumptionUnmet);
    }
    let sets: Vec<BTreeSet<u32>> = rankings
        .iter()
        .map(|r| r.truncated(k).doc_ids().collect())
        .collect();
    let output: BTreeSet<u32> = guided_run(query, index, coeffs, k)?.doc_ids().collect();
    for &doc in &sets[0] {
        if sets[1].contains(&doc) && sets[2].contains(&doc) && !output.contains(&doc) {
            return Ok(Prop1Outcome::Violated { witness: doc });
        }
    }
    Ok(Prop1Outcome::Holds)
}

/// Outcome of the mean-score comparison against two-stage retrieval.
#[derive(Debug, Clone, PartialEq)]
pub enum Prop2Outcome {
    Holds,
    Violated { gap: f64 },
    NotApplicable,
}

/// With `alpha == beta` or `beta == gamma`, the mean gamma-combined score of
/// the guided top-k must be at least that of two-stage retrieval.
pub fn check_prop2(
    query: &Query,
    index: &DualIndex,
    coeffs: MixCoefficients,
    k: usize,
) -> Result<Prop2Outcome> {
    if coeffs.alpha != coeffs.beta && coeffs.beta != coeffs.gamma {
        return Ok(Prop2Outcome::NotApplicable);
    }
    let rankings = [
        exhaustive_ranking(query, index, coeffs.alpha),
        exhaustive_ranking(query, index, coeffs.beta),
        exhaustive_ranking(query, index, coeffs.gamma),
    ];
    if rankings.iter().any(|r| !topk_is_unique(r, k)) {
        return Ok(Prop2Outcome::NotApplicable);
    }
    let sums = matching_sums(query, index);
    let gamma_score = |doc: u32| {
        let (sum_b, sum_l) = sums[&doc];
        mix(sum_b, sum_l, coeffs.gamma)
    };
    let mean = |list: &RankedList| {
        if list.is_empty() {
            0.0
        } else {
            list.doc_ids().map(gamma_score).sum::<f64>() / list.len() as f64
        }
    };
    let mean_guided = mean(&guided_run(query, index, coeffs, k)?);
    let mean_two_stage = mean(&two_stage(query, index, coeffs.alpha, coeffs.gamma, k));
    if mean_guided >= mean_two_stage - 1e-9 {
        Ok(Prop2Outcome::Holds)
    } else {
        Ok(Prop2Outcome::Violated {
            gap: mean_two_stage - mean_guided,
        })
    }
}

/// Outcome of the relevant-count comparison under the outmatch chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Prop3Outcome {
    Holds,
    Violated,
    PreconditionUnmet,
}

/// `better` outmatches `worse` when every (relevant, irrelevant) pair that
/// `worse` orders correctly is also ordered correctly by `better`.
fn outmatches(better: &RankedList, worse: &RankedList, relevant: &RelevanceLabels) -> bool {
    let pos = |list: &RankedList| -> HashMap<u32, usize> {
        list.doc_ids().enumerate().map(|(i, d)| (d, i)).collect()
    };
    let better_pos = pos(better);
    let worse_pos = pos(worse);
    let (rel, irrel): (Vec<u32>, Vec<u32>) = {
        let mut rel = Vec::new();
        let mut irrel = Vec::new();
        for d in worse.doc_ids() {
            if relevant.contains(&d) {
                rel.push(d);
            } else {
                irrel.push(d);
            }
        }
        (rel, irrel)
    };
    for &r in &rel {
        for &i in &irrel {
            let worse_correct = worse_pos[&r] < worse_pos[&i];
            if worse_correct {
                let better_correct = match (better_pos.get(&r), better_pos.get(&i)) {
                    (Some(pr), Some(pi)) => pr < pi,
                    _ => false,
                };
                if !better_correct {
                    return false;
                }
            }
        }
    }
    true
}

/// When the gamma ranking outmatches the beta ranking, which outmatches the
/// alpha ranking, guided retrieval must place at least as many relevant
/// documents in the top k as two-stage retrieval.
pub fn check_prop3(
    query: &Query,
    index: &DualIndex,
    coeffs: MixCoefficients,
    k: usize,
    labels: &RelevanceLabels,
) -> Result<Prop3Outcome> {
    let r_alpha = exhaustive_ranking(query, index, coeffs.alpha);
    let r_beta = exhaustive_ranking(query, index, coeffs.beta);
    let r_gamma = exhaustive_ranking(query, index, coeffs.gamma);
    if !outmatches(&r_gamma, &r_beta, labels) || !outmatches(&r_beta, &r_alpha, labels) {
        return Ok(Prop3Outcome::PreconditionUnmet);
    }
    let count = |list: &RankedList| {
        list.truncated(k)
            .doc_ids()
            .filter(|d| labels.contains(d))
            .count()
    };
    let guided = count(&guided_run(query, index, coeffs, k)?);
    let staged = count(&two_stage(query, index, coeffs.alpha, coeffs.gamma, k));
    if guided >= staged {
        Ok(Prop3Outcome::Holds)
    } else {
        Ok(Prop3Outcome::Violated)
    }
}
