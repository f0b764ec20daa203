//! Relevance metrics and latency aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::score::RankedList;

/// Graded judgments: query id -> (doc id -> grade). Grades above zero are
/// treated as relevant for the binary metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    map: BTreeMap<String, BTreeMap<u32, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: u32, grade: u32) {
        self.map.entry(query_id.into()).or_default().insert(doc_id, grade);
    }

    pub fn graded(&self, query_id: &str) -> Option<&BTreeMap<u32, u32>> {
        self.map.get(query_id)
    }

    pub fn relevant_set(&self, query_id: &str) -> BTreeSet<u32> {
        self.map
            .get(query_id)
            .map(|g| {
                g.iter()
                    .filter(|&(_, &grade)| grade > 0)
                    .map(|(&d, _)| d)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Reciprocal rank of the first relevant document within the top k, or 0.
pub fn mrr_at_k(run: &RankedList, relevant: &BTreeSet<u32>, k: usize) -> f64 {
    for (i, doc) in run.doc_ids().take(k).enumerate() {
        if relevant.contains(&doc) {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// Fraction of the relevant set retrieved within the top k.
pub fn recall_at_k(run: &RankedList, relevant: &BTreeSet<u32>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hit = run.doc_ids().take(k).filter(|d| relevant.contains(d)).count();
    hit as f64 / relevant.len() as f64
}

/// nDCG@10 with exponential gains: gain `(2^grade - 1)`, discount
/// `log2(rank + 1)`, normalized by the ideal ordering over all judged docs.
pub fn ndcg_at_10(run: &RankedList, graded: &BTreeMap<u32, u32>) -> f64 {
    const DEPTH: usize = 10;
    let gain = |grade: u32| (2f64.powi(grade as i32)) - 1.0;
    let dcg: f64 = run
        .doc_ids()
        .take(DEPTH)
        .enumerate()
        .map(|(i, doc)| {
            let g = graded.get(&doc).copied().unwrap_or(0);
            gain(g) / ((i + 2) as f64).log2()
        })
        .sum();
    let mut ideal: Vec<u32> = graded.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(DEPTH)
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Arithmetic mean and nearest-rank 99th percentile
/// (the `ceil(0.99 * n)`-th order statistic, 1-indexed).
pub fn latency_stats(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::domain("latency_stats needs at least one sample"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (0.99 * samples.len() as f64).ceil() as usize;
    let p99 = sorted[rank.max(1) - 1];
    Ok((mean, p99))
}

/// Metric selector, parsed from forms like `mrr@10`, `recall@100`, `ndcg@10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MrrAtK(usize),
    RecallAtK(usize),
    NdcgAt10,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::MrrAtK(k) => write!(f, "mrr@{k}"),
            Metric::RecallAtK(k) => write!(f, "recall@{k}"),
            Metric::NdcgAt10 => write!(f, "ndcg@10"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "ndcg@10" {
            return Ok(Metric::NdcgAt10);
        }
        let parse_k = |rest: &str| -> Result<usize> {
            let k: usize = rest
                .parse()
                .map_err(|_| Error::domain(format!("invalid metric depth in `{s}`")))?;
            if k == 0 {
                return Err(Error::domain("metric depth must be >= 1"));
            }
            Ok(k)
        };
        if let Some(rest) = lower.strip_prefix("mrr@") {
            return Ok(Metric::MrrAtK(parse_k(rest)?));
        }
        if let Some(rest) = lower.strip_prefix("recall@") {
            return Ok(Metric::RecallAtK(parse_k(rest)?));
        }
        Err(Error::domain(format!("unknown metric `{s}`")))
    }
}

/// Per-query metric values plus their mean.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metric: Metric,
    /// (query id, value), sorted by query id.
    pub per_query: Vec<(String, f64)>,
    pub aggregate: f64,
}

/// Evaluates a run against qrels. Queries without a judgment that the
/// metric can use (no relevant doc for MRR/recall, no positive grade for
/// nDCG) are excluded from the aggregate; an empty intersection is an error.
pub fn evaluate_run(
    run_by_query: &BTreeMap<String, RankedList>,
    qrels: &Qrels,
    metric: Metric,
) -> Result<EvalReport> {
    let mut per_query = Vec::new();
    for (qid, ranked) in run_by_query {
        let value = match metric {
            Metric::MrrAtK(k) => {
                let relevant = qrels.relevant_set(qid);
                if relevant.is_empty() {
                    continue;
                }
                mrr_at_k(ranked, &relevant, k)
            }
            Metric::RecallAtK(k) => {
                let relevant = qrels.relevant_set(qid);
                if relevant.is_empty() {
                    continue;
                }
                recall_at_k(ranked, &relevant, k)
            }
            Metric::NdcgAt10 => {
                let Some(graded) = qrels.graded(qid) else {
                    continue;
                };
                if graded.values().all(|&g| g == 0) {
                    continue;
                }
                ndcg_at_10(ranked, graded)
            }
        };
        per_query.push((qid.clone(), value));
    }
    if per_query.is_empty() {
        return Err(Error::NoEvaluableQueries);
    }
    let aggregate = per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64;
    Ok(EvalReport {
        metric,
        per_query,
        aggregate,
    })
}
