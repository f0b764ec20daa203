//! Hybrid score combinations and the three bounded top-k queues.
//!
//! A document accumulates two raw sums — a BM25 rank score and a learned
//! rank score — and every decision point mixes them linearly with its own
//! coefficient: `alpha` for the global queue, `beta` for the local queue,
//! `gamma` for the final ranking queue. The queues evolve independently;
//! each exposes a dynamic top-k threshold that only ever rises.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Mixing coefficients for global pruning, local pruning, and final ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MixCoefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must be in [0,1], got {v}")));
            }
        }
        Ok(MixCoefficients { alpha, beta, gamma })
    }
}

/// `coeff * score_b + (1 - coeff) * score_l`, checked.
pub fn combine(score_b: f64, score_l: f64, coeff: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&coeff) {
        return Err(Error::domain(format!(
            "mix coefficient must be in [0,1], got {coeff}"
        )));
    }
    Ok(mix(score_b, score_l, coeff))
}

/// Unchecked linear mix for hot paths; callers validate coefficients once.
#[inline]
pub fn mix(score_b: f64, score_l: f64, coeff: f64) -> f64 {
    coeff * score_b + (1.0 - coeff) * score_l
}

/// The three accumulated combinations for one document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    pub global: f64,
    pub local: f64,
    pub rank: f64,
}

impl ScoreTriple {
    pub fn from_raw(score_b: f64, score_l: f64, coeffs: MixCoefficients) -> Self {
        ScoreTriple {
            global: mix(score_b, score_l, coeffs.alpha),
            local: mix(score_b, score_l, coeffs.beta),
            rank: mix(score_b, score_l, coeffs.gamma),
        }
    }
}

/// One retrieved document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: u32,
    pub score: f64,
}

/// Composite ranking order: higher score first, ascending doc_id on ties.
#[inline]
pub fn rank_cmp(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Ranked results, strictly sorted under the composite order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList(Vec<ScoredDoc>);

impl RankedList {
    /// Sorts `docs` under the composite order.
    pub fn from_unsorted(mut docs: Vec<ScoredDoc>) -> Self {
        docs.sort_by(rank_cmp);
        RankedList(docs)
    }

    pub fn as_slice(&self) -> &[ScoredDoc] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScoredDoc> {
        self.0.iter()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|d| d.doc_id)
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList(self.0.iter().take(k).copied().collect())
    }
}

/// Heap entry ordered so that `Ord::max` is the composite-best document.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry(ScoredDoc);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // rank_cmp yields Less for the better document; flip it so the
        // BinaryHeap max is the best and Reverse(peek) is the worst.
        rank_cmp(&self.0, &other.0).reverse()
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded top-k queue with a dynamically rising score threshold.
#[derive(Debug, Clone)]
pub struct BoundedTopK {
    heap: BinaryHeap<std::cmp::Reverse<Entry>>,
    k: usize,
}

impl BoundedTopK {
    pub fn new(k: usize) -> Self {
        BoundedTopK {
            heap: BinaryHeap::with_capacity(k + 1),
            k,
        }
    }

    /// k-th best score once the queue is full, `-inf` before.
    pub fn threshold(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::NEG_INFINITY
        } else {
            self.heap.peek().map_or(f64::NEG_INFINITY, |e| e.0 .0.score)
        }
    }

    /// Offers a document; keeps the k composite-largest entries.
    pub fn offer(&mut self, doc_id: u32, score: f64) {
        let cand = ScoredDoc { doc_id, score };
        if self.heap.len() < self.k {
            self.heap.push(std::cmp::Reverse(Entry(cand)));
            return;
        }
        if let Some(worst) = self.heap.peek() {
            if rank_cmp(&cand, &worst.0 .0) == Ordering::Less {
                self.heap.pop();
                self.heap.push(std::cmp::Reverse(Entry(cand)));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Contents in composite rank order.
    pub fn to_ranked(&self) -> RankedList {
        RankedList::from_unsorted(self.heap.iter().map(|e| e.0 .0).collect())
    }
}

/// Which queues a document may enter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    /// Fully scored document: all three queues.
    All,
    /// Locally pruned document carrying a partial rank score: final queue only.
    RankOnly,
}

/// The global, local, and final-ranking queues with their thresholds.
///
/// The skip thresholds reported to traversal callers are scaled by the
/// factor `F`; the final-ranking threshold is never scaled.
#[derive(Debug, Clone)]
pub struct TripleTopK {
    q_gl: BoundedTopK,
    q_lo: BoundedTopK,
    q_rk: BoundedTopK,
    factor_f: f64,
}

impl TripleTopK {
    pub fn new(k: usize, factor_f: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("queue capacity k must be >= 1"));
        }
        if !(factor_f > 0.0) {
            return Err(Error::domain(format!(
                "threshold factor F must be > 0, got {factor_f}"
            )));
        }
        Ok(TripleTopK {
            q_gl: BoundedTopK::new(k),
            q_lo: BoundedTopK::new(k),
            q_rk: BoundedTopK::new(k),
            factor_f,
        })
    }

    pub fn offer(&mut self, doc_id: u32, triple: ScoreTriple, eligibility: Eligibility) {
        if eligibility == Eligibility::All {
            self.q_gl.offer(doc_id, triple.global);
            self.q_lo.offer(doc_id, triple.local);
        }
        self.q_rk.offer(doc_id, triple.rank);
    }

    /// Offers a locally pruned document's partial rank score to the
    /// final-ranking queue only.
    pub fn offer_rank_only(&mut self, doc_id: u32, rank_score: f64) {
        self.q_rk.offer(doc_id, rank_score);
    }

    pub fn theta_gl(&self) -> f64 {
        self.q_gl.threshold()
    }

    pub fn theta_lo(&self) -> f64 {
        self.q_lo.threshold()
    }

    pub fn theta_rk(&self) -> f64 {
        self.q_rk.threshold()
    }

    /// Global skip threshold after applying the factor `F`.
    pub fn effective_theta_gl(&self) -> f64 {
        self.factor_f * self.q_gl.threshold()
    }

    /// Local skip threshold after applying the factor `F`.
    pub fn effective_theta_lo(&self) -> f64 {
        self.factor_f * self.q_lo.threshold()
    }

    pub fn queue_gl(&self) -> &BoundedTopK {
        &self.q_gl
    }

    pub fn queue_lo(&self) -> &BoundedTopK {
        &self.q_lo
    }

    pub fn queue_rk(&self) -> &BoundedTopK {
        &self.q_rk
    }

    /// Final top-k results from the ranking queue.
    pub fn final_topk(&self) -> RankedList {
        self.q_rk.to_ranked()
    }
}
