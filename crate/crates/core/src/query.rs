//! Queries, traversal configuration, effort counters, and posting cursors.

use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::index::{DualIndex, PostingList};
use crate::score::{MixCoefficients, RankedList};

/// A query: a multiset of term ids. Repeating a term weights it by its
/// repetition count, the pseudo-document convention for learned query
/// weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub terms: Vec<u32>,
}

impl Query {
    pub fn new(id: impl Into<String>, terms: Vec<u32>) -> Self {
        Query {
            id: id.into(),
            terms,
        }
    }
}

/// Reads a query file: `qid<TAB>term_id term_id ...` per line.
pub fn read_queries(reader: impl BufRead) -> Result<Vec<Query>> {
    let mut queries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = match line.split_once('\t') {
            Some((id, rest)) => (id, rest),
            None => (line.trim_end(), ""),
        };
        if id.is_empty() {
            return Err(Error::QueryParse {
                line: lineno,
                msg: "empty query id".into(),
            });
        }
        let terms = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|_| Error::QueryParse {
                    line: lineno,
                    msg: format!("invalid term id `{t}`"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        queries.push(Query::new(id, terms));
    }
    Ok(queries)
}

pub fn read_queries_path(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let file = std::fs::File::open(path)?;
    read_queries(std::io::BufReader::new(file))
}

/// Traversal algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Two-level guided MaxScore.
    Maxscore2gti,
    /// Two-level guided block-max traversal.
    Bmw2gti,
    /// Exhaustive scoring by the gamma combination (the oracle path).
    Exhaustive,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Maxscore2gti => "maxscore-2gti",
            Algorithm::Bmw2gti => "bmw-2gti",
            Algorithm::Exhaustive => "exhaustive",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxscore-2gti" => Ok(Algorithm::Maxscore2gti),
            "bmw-2gti" => Ok(Algorithm::Bmw2gti),
            "exhaustive" => Ok(Algorithm::Exhaustive),
            other => Err(Error::domain(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Per-query traversal configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraversalConfig {
    pub coeffs: MixCoefficients,
    pub k: usize,
    /// Skip-threshold factor F; > 1 over-estimates (rank-unsafe, faster),
    /// < 1 under-estimates (conservative, slower). Applied to the global and
    /// local thresholds only.
    pub factor_f: f64,
    pub algorithm: Algorithm,
    pub counters_enabled: bool,
    /// Record per-document traversal events; test instrumentation.
    pub trace_enabled: bool,
}

impl TraversalConfig {
    pub fn new(coeffs: MixCoefficients, k: usize, factor_f: f64, algorithm: Algorithm) -> Self {
        TraversalConfig {
            coeffs,
            k,
            factor_f,
            algorithm,
            counters_enabled: false,
            trace_enabled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::domain("k must be >= 1"));
        }
        if !(self.factor_f > 0.0) {
            return Err(Error::domain(format!(
                "threshold factor F must be > 0, got {}",
                self.factor_f
            )));
        }
        MixCoefficients::new(self.coeffs.alpha, self.coeffs.beta, self.coeffs.gamma)?;
        Ok(())
    }

    pub fn with_counters(mut self, enabled: bool) -> Self {
        self.counters_enabled = enabled;
        self
    }

    pub fn with_trace(mut self, enabled: bool) -> Self {
        self.trace_enabled = enabled;
        self
    }
}

/// Deterministic scoring-effort counters; the latency proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EffortCounters {
    /// Pivot documents whose full score triple was computed.
    pub docs_fully_scored: u64,
    /// Pivot documents stopped by local pruning.
    pub docs_locally_pruned: u64,
    /// Candidate documents never examined as a pivot (derived: candidate
    /// span minus visited; only filled when counters are enabled).
    pub docs_globally_skipped: u64,
    /// Posting records whose doc id or weights were read.
    pub postings_touched: u64,
    /// Term-partition (MaxScore) or pivot-identification (block-max)
    /// recomputations.
    pub repartition_count: u64,
    /// Block weight materializations; block-max traversal only.
    pub blocks_opened: u64,
}

/// Per-document traversal events, recorded when tracing is on.
#[derive(Debug, Clone, Default)]
pub struct TraversalTrace {
    /// Pivot documents examined, in visit order.
    pub visited_docs: Vec<u32>,
    /// Locally pruned documents with the partial rank score they carried
    /// into the final-ranking queue.
    pub pruned_partials: Vec<(u32, f64)>,
}

/// The outcome of one query traversal.
#[derive(Debug, Clone)]
pub struct QueryRun {
    pub query_id: String,
    pub results: RankedList,
    pub counters: EffortCounters,
    /// End-of-query thresholds (global, local, rank).
    pub final_thetas: (f64, f64, f64),
    /// Wall-clock latency around the traversal call; filled by the caller.
    pub latency_ms: f64,
    pub trace: Option<TraversalTrace>,
}

/// Runs one query with the configured algorithm. The exhaustive path scores
/// every matching document by the gamma combination and serves as the
/// unguided baseline.
pub fn execute(query: &Query, index: &DualIndex, config: &TraversalConfig) -> Result<QueryRun> {
    match config.algorithm {
        Algorithm::Maxscore2gti => crate::maxscore::search(query, index, config),
        Algorithm::Bmw2gti => crate::blockmax::search(query, index, config),
        Algorithm::Exhaustive => {
            config.validate()?;
            let full = crate::oracle::exhaustive_ranking(query, index, config.coeffs.gamma);
            let mut counters = EffortCounters::default();
            if config.counters_enabled {
                counters.docs_fully_scored = full.len() as u64;
                counters.postings_touched = query
                    .terms
                    .iter()
                    .filter_map(|&t| index.list(t))
                    .map(|l| l.len() as u64)
                    .sum();
            }
            let results = full.truncated(config.k);
            let kth = results
                .as_slice()
                .get(config.k.saturating_sub(1))
                .map_or(f64::NEG_INFINITY, |d| d.score);
            Ok(QueryRun {
                query_id: query.id.clone(),
                results,
                counters,
                final_thetas: (kth, kth, kth),
                latency_ms: 0.0,
                trace: None,
            })
        }
    }
}

/// Number of distinct documents containing at least one query term.
pub fn candidate_count(index: &DualIndex, terms: &[u32]) -> u64 {
    let mut docs: Vec<u32> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &t in terms {
        if seen.insert(t) {
            if let Some(list) = index.list(t) {
                docs.extend(list.records.iter().map(|r| r.doc_id));
            }
        }
    }
    docs.sort_unstable();
    docs.dedup();
    docs.len() as u64
}

/// A forward-only cursor over one posting list, with block-skip seeks.
#[derive(Debug, Clone)]
pub(crate) struct ListCursor<'a> {
    list: &'a PostingList,
    pos: usize,
    block_idx: usize,
    /// Last block whose weights were materialized, for the opened counter.
    opened_block: Option<usize>,
}

impl<'a> ListCursor<'a> {
    pub fn new(list: &'a PostingList) -> Self {
        ListCursor {
            list,
            pos: 0,
            block_idx: 0,
            opened_block: None,
        }
    }

    pub fn current_doc(&self) -> Option<u32> {
        self.list.records.get(self.pos).map(|r| r.doc_id)
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos >= self.list.records.len()
    }

    /// Weights at the current position; counts the posting touch and the
    /// block materialization.
    pub fn weights(&mut self, counters: &mut EffortCounters) -> (f64, f64) {
        let r = &self.list.records[self.pos];
        counters.postings_touched += 1;
        self.sync_block();
        if self.opened_block != Some(self.block_idx) {
            self.opened_block = Some(self.block_idx);
            counters.blocks_opened += 1;
        }
        (r.w_b, r.w_l)
    }

    /// Advances to the first record with `doc_id >= target`, skipping whole
    /// blocks via their metadata.
    pub fn seek_geq(&mut self, target: u32, counters: &mut EffortCounters) {
        let blocks = &self.list.blocks;
        self.sync_block();
        while self.block_idx < blocks.len() && blocks[self.block_idx].max_doc_id < target {
            self.pos = blocks[self.block_idx].last_index as usize + 1;
            self.block_idx += 1;
        }
        let records = &self.list.records;
        while self.pos < records.len() && records[self.pos].doc_id < target {
            self.pos += 1;
            counters.postings_touched += 1;
        }
        self.sync_block();
    }

    /// Advances past the current record.
    pub fn advance(&mut self, counters: &mut EffortCounters) {
        if self.pos < self.list.records.len() {
            self.pos += 1;
            counters.postings_touched += 1;
            self.sync_block();
        }
    }

    /// Block-level metadata lookup: the first not-yet-passed block that may
    /// hold `doc`. Returns `None` when every remaining block ends before
    /// `doc`; does not materialize anything.
    pub fn block_for(&self, doc: u32) -> Option<&'a crate::index::BlockMeta> {
        let blocks = &self.list.blocks;
        let mut idx = self.block_idx;
        while idx < blocks.len() && blocks[idx].max_doc_id < doc {
            idx += 1;
        }
        let b = blocks.get(idx)?;
        // If the block starts past `doc`, no block contains it.
        if self.list.records[b.first_index as usize].doc_id > doc {
            return None;
        }
        Some(b)
    }

    fn sync_block(&mut self) {
        let blocks = &self.list.blocks;
        while self.block_idx < blocks.len()
            && self.pos > blocks[self.block_idx].last_index as usize
        {
            self.block_idx += 1;
        }
    }
}

/// One query-term occurrence bound to its posting list.
#[derive(Debug, Clone)]
pub(crate) struct QueryTermState<'a> {
    pub cursor: ListCursor<'a>,
    pub term_id: u32,
    /// Position of this occurrence in the original query, the canonical
    /// accumulation order for scores.
    pub occurrence: usize,
    pub combined_max_alpha: f64,
    pub combined_max_beta: f64,
}

/// Builds one state per query-term occurrence, dropping terms absent from
/// the index dictionary. Duplicate occurrences get independent cursors over
/// the same list.
pub(crate) fn build_states<'a>(
    query: &Query,
    index: &'a DualIndex,
    coeffs: MixCoefficients,
) -> Vec<QueryTermState<'a>> {
    let mut states = Vec::new();
    for (occurrence, &term_id) in query.terms.iter().enumerate() {
        if let Some(list) = index.list(term_id) {
            states.push(QueryTermState {
                cursor: ListCursor::new(list),
                term_id,
                occurrence,
                combined_max_alpha: crate::score::mix(list.sigma_b, list.sigma_l, coeffs.alpha),
                combined_max_beta: crate::score::mix(list.sigma_b, list.sigma_l, coeffs.beta),
            });
        }
    }
    states
}

/// Contribution of one list to the pivot document, keyed by query
/// occurrence so sums are reproducible in canonical order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution {
    pub occurrence: usize,
    pub w_b: f64,
    pub w_l: f64,
}

/// Sums contributions in ascending occurrence order: raw BM25 and learned
/// sums, mixed once per coefficient. Both traversals and the exhaustive
/// oracle share this order, so equal true scores stay bit-equal.
pub(crate) fn canonical_sums(contribs: &mut Vec<Contribution>) -> (f64, f64) {
    contribs.sort_by_key(|c| c.occurrence);
    let mut sum_b = 0.0;
    let mut sum_l = 0.0;
    for c in contribs.iter() {
        sum_b += c.w_b;
        sum_l += c.w_l;
    }
    (sum_b, sum_l)
}
