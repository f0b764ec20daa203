//! Randomized verification campaigns for the traversal's guarantees.
//!
//! Each campaign draws seeded random corpora and queries, runs the guided
//! traversals, and falsification-tests a property against the exhaustive
//! oracle: rank-safety at equal coefficients, cross-algorithm agreement,
//! top-k intersection containment, mean-score dominance over two-stage
//! retrieval, and relevant-count dominance under the outmatch chain. Any
//! violation reports the trial seed that reproduces it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bm25::Bm25Params;
use crate::corpus::{Corpus, CorpusDoc, CorpusEntry};
use crate::error::{Error, Result};
use crate::index::{build_index, AlignmentMode, DualIndex, FillMode};
use crate::oracle::{
    check_prop1, check_prop2, check_prop3, exhaustive_ranking, Prop1Outcome, Prop2Outcome,
    Prop3Outcome, RelevanceLabels,
};
use crate::query::{Algorithm, Query, TraversalConfig};
use crate::score::{MixCoefficients, RankedList};
use crate::{blockmax, maxscore};

/// Campaign sizing.
#[derive(Debug, Clone, Copy)]
pub struct CampaignConfig {
    pub trials: u64,
    pub seed: u64,
    pub max_docs: u32,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            trials: 500,
            seed: 42,
            max_docs: 2000,
        }
    }
}

/// One property's tally.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub name: &'static str,
    pub trials: u64,
    pub violations: u64,
    pub first_violation_seed: Option<u64>,
}

impl PropertyReport {
    fn new(name: &'static str) -> Self {
        PropertyReport {
            name,
            trials: 0,
            violations: 0,
            first_violation_seed: None,
        }
    }

    fn record(&mut self, seed: u64, ok: bool) {
        self.trials += 1;
        if !ok {
            self.violations += 1;
            self.first_violation_seed.get_or_insert(seed);
        }
    }
}

/// All campaign tallies.
#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub properties: Vec<PropertyReport>,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.violations == 0)
    }
}

fn trial_seed(base: u64, stream: u64, trial: u64) -> u64 {
    // splitmix64 over a stream/trial tag
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(trial.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A random corpus, its index, and a random query over its vocabulary.
pub struct RandomInstance {
    pub corpus: Corpus,
    pub index: DualIndex,
    pub query: Query,
}

/// Draws a corpus (log-uniform size up to `max_docs`, small vocabulary,
/// occasional learned-only postings), builds it under a random alignment
/// mode and block size, and draws a query of up to 8 term occurrences.
pub fn random_instance(seed: u64, max_docs: u32) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_docs = if max_docs <= 1 {
        1
    } else {
        let ln_max = f64::from(max_docs).ln();
        (rng.gen_range(0.0..1.0) * ln_max).exp().round() as u32
    }
    .clamp(1, max_docs);
    let vocab = rng.gen_range(1..=50u32);

    let docs: Vec<CorpusDoc> = (0..num_docs)
        .map(|doc_id| {
            let n_terms = rng.gen_range(1..=8usize);
            let mut entries = std::collections::BTreeMap::new();
            for i in 0..n_terms {
                let term_id = rng.gen_range(0..vocab);
                // the first entry keeps the document lexically non-empty
                let tf = if i > 0 && rng.gen_bool(0.15) {
                    0
                } else {
                    rng.gen_range(1..=4u32)
                };
                let w_l = rng.gen_range(0.05..4.0f64);
                entries.entry(term_id).or_insert((tf, w_l));
            }
            if entries.values().all(|&(tf, _)| tf == 0) {
                let first = *entries.keys().next().unwrap();
                entries.get_mut(&first).unwrap().0 = 1;
            }
            CorpusDoc {
                doc_id,
                entries: entries
                    .into_iter()
                    .map(|(term_id, (tf, w_l))| CorpusEntry { term_id, tf, w_l })
                    .collect(),
            }
        })
        .collect();
    let corpus = Corpus::from_docs(docs);

    let fill = match rng.gen_range(0..100u32) {
        0..=59 => FillMode::ZeroFill,
        60..=84 => FillMode::ScaledFill,
        _ => FillMode::OneFill,
    };
    let block_size = *[1u32, 2, 3, 4, 8, 64]
        .get(rng.gen_range(0..6usize))
        .unwrap();
    let index = build_index(
        &corpus,
        Bm25Params::default(),
        block_size,
        AlignmentMode::new(fill),
    )?
    .index;

    let q_len = rng.gen_range(1..=8usize);
    let terms: Vec<u32> = (0..q_len)
        .map(|_| rng.gen_range(0..vocab + 2)) // a little headroom: unknown terms
        .collect();
    Ok(RandomInstance {
        corpus,
        index,
        query: Query::new("q", terms),
    })
}

/// Exact doc/order agreement with scores within `tol` relative.
pub fn ranked_lists_match(expect: &RankedList, got: &RankedList, tol: f64) -> bool {
    expect.len() == got.len()
        && expect.iter().zip(got.iter()).all(|(e, g)| {
            e.doc_id == g.doc_id && (e.score - g.score).abs() <= tol * e.score.abs().max(1.0)
        })
}

pub const RANK_SAFETY_XS: [f64; 4] = [0.0, 0.3, 0.5, 1.0];
pub const RANK_SAFETY_SCORE_TOL: f64 = 1e-9;

/// Rank-safety and cross-algorithm agreement at equal coefficients.
pub fn campaign_rank_safety(cfg: &CampaignConfig, out: &mut Vec<PropertyReport>) -> Result<()> {
    let mut ms = PropertyReport::new("rank-safety-maxscore");
    let mut bm = PropertyReport::new("rank-safety-blockmax");
    let mut agree = PropertyReport::new("maxscore-blockmax-agreement");
    for trial in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, 1, trial);
        let inst = random_instance(seed, cfg.max_docs)?;
        let ks = [1usize, 5, 10, inst.index.num_docs as usize];
        let mut ms_ok = true;
        let mut bm_ok = true;
        let mut agree_ok = true;
        for x in RANK_SAFETY_XS {
            let coeffs = MixCoefficients::new(x, x, x)?;
            let full = exhaustive_ranking(&inst.query, &inst.index, x);
            for k in ks {
                let expect = full.truncated(k);
                let config = TraversalConfig::new(coeffs, k, 1.0, Algorithm::Maxscore2gti);
                let got_ms = maxscore::search(&inst.query, &inst.index, &config)?.results;
                let got_bm = blockmax::search(&inst.query, &inst.index, &config)?.results;
                ms_ok &= ranked_lists_match(&expect, &got_ms, RANK_SAFETY_SCORE_TOL);
                bm_ok &= ranked_lists_match(&expect, &got_bm, RANK_SAFETY_SCORE_TOL);
                agree_ok &= ranked_lists_match(&got_ms, &got_bm, RANK_SAFETY_SCORE_TOL);
            }
        }
        ms.record(seed, ms_ok);
        bm.record(seed, bm_ok);
        agree.record(seed, agree_ok);
    }
    out.push(ms);
    out.push(bm);
    out.push(agree);
    Ok(())
}

/// Top-k intersection containment over assumption-satisfying trials.
pub fn campaign_prop1(cfg: &CampaignConfig, out: &mut Vec<PropertyReport>) -> Result<()> {
    let mut report = PropertyReport::new("prop1-containment");
    let betas = [0.0, 0.3, 1.0];
    let gammas = [0.05, 0.5];
    let ks = [1usize, 5, 10];
    let mut attempts = 0u64;
    let max_attempts = cfg.trials.saturating_mul(50).max(1000);
    while report.trials < cfg.trials && attempts < max_attempts {
        let seed = trial_seed(cfg.seed, 2, attempts);
        attempts += 1;
        let inst = random_instance(seed, cfg.max_docs)?;
        let beta = betas[(attempts % 3) as usize];
        let gamma = gammas[(attempts % 2) as usize];
        let k = ks[(attempts % 3) as usize];
        let coeffs = MixCoefficients::new(1.0, beta, gamma)?;
        match check_prop1(&inst.query, &inst.index, coeffs, k)? {
            Prop1Outcome::AssumptionUnmet => continue,
            Prop1Outcome::Holds => report.record(seed, true),
            Prop1Outcome::Violated { .. } => report.record(seed, false),
        }
    }
    out.push(report);
    Ok(())
}

const COEFF_GRID: [f64; 6] = [0.0, 0.05, 0.3, 0.5, 0.7, 1.0];

/// Mean gamma-score dominance over two-stage retrieval, restricted to
/// alpha == beta or beta == gamma configurations.
pub fn campaign_prop2(cfg: &CampaignConfig, out: &mut Vec<PropertyReport>) -> Result<()> {
    let mut report = PropertyReport::new("prop2-mean-score");
    let ks = [1usize, 5, 10];
    let mut attempts = 0u64;
    let max_attempts = cfg.trials.saturating_mul(50).max(1000);
    while report.trials < cfg.trials && attempts < max_attempts {
        let seed = trial_seed(cfg.seed, 3, attempts);
        attempts += 1;
        let inst = random_instance(seed, cfg.max_docs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
        let c = COEFF_GRID[rng.gen_range(0..COEFF_GRID.len())];
        let other = COEFF_GRID[rng.gen_range(0..COEFF_GRID.len())];
        let coeffs = if attempts % 2 == 0 {
            MixCoefficients::new(c, c, other)? // alpha == beta
        } else {
            MixCoefficients::new(other, c, c)? // beta == gamma
        };
        let k = ks[(attempts % 3) as usize];
        match check_prop2(&inst.query, &inst.index, coeffs, k)? {
            Prop2Outcome::NotApplicable => continue,
            Prop2Outcome::Holds => report.record(seed, true),
            Prop2Outcome::Violated { .. } => report.record(seed, false),
        }
    }
    out.push(report);
    Ok(())
}

/// Relevant-count dominance over two-stage retrieval on labeled corpora,
/// filtered to outmatch-chain-satisfying instances.
pub fn campaign_prop3(cfg: &CampaignConfig, out: &mut Vec<PropertyReport>) -> Result<()> {
    let mut report = PropertyReport::new("prop3-relevant-count");
    let ks = [1usize, 5, 10];
    let mut attempts = 0u64;
    let max_attempts = cfg.trials.saturating_mul(80).max(1000);
    while report.trials < cfg.trials && attempts < max_attempts {
        let seed = trial_seed(cfg.seed, 4, attempts);
        attempts += 1;
        let inst = random_instance(seed, cfg.max_docs.min(200))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBEEF);
        let coeffs = if attempts % 2 == 0 {
            let c = COEFF_GRID[rng.gen_range(0..COEFF_GRID.len())];
            MixCoefficients::new(c, c, c)?
        } else {
            // near-equal coefficients keep the chain attainable
            let c: f64 = rng.gen_range(0.1..0.9);
            let d1: f64 = rng.gen_range(0.0..0.1);
            let d2: f64 = rng.gen_range(0.0..0.1);
            MixCoefficients::new((c + d1).min(1.0), c, (c - d2).max(0.0))?
        };
        // Labels biased toward the gamma ranking's top keep chain-satisfying
        // instances frequent; the filter below stays authoritative.
        let ranking = exhaustive_ranking(&inst.query, &inst.index, coeffs.gamma);
        let mut labels = RelevanceLabels::new();
        for (rank, d) in ranking.doc_ids().enumerate() {
            let p = 0.7f64.powi(rank as i32 + 1);
            if rng.gen_bool(p.clamp(0.02, 0.95)) {
                labels.insert(d);
            }
            if labels.len() >= 5 {
                break;
            }
        }
        let k = ks[(attempts % 3) as usize];
        match check_prop3(&inst.query, &inst.index, coeffs, k, &labels)? {
            Prop3Outcome::PreconditionUnmet => continue,
            Prop3Outcome::Holds => report.record(seed, true),
            Prop3Outcome::Violated => report.record(seed, false),
        }
    }
    out.push(report);
    Ok(())
}

/// Runs every campaign and tallies the results.
pub fn run_campaigns(cfg: &CampaignConfig) -> Result<CampaignReport> {
    if cfg.trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    if cfg.max_docs == 0 {
        return Err(Error::domain("max-docs must be >= 1"));
    }
    let mut properties = Vec::new();
    campaign_rank_safety(cfg, &mut properties)?;
    campaign_prop1(cfg, &mut properties)?;
    campaign_prop2(cfg, &mut properties)?;
    campaign_prop3(cfg, &mut properties)?;
    Ok(CampaignReport { properties })
}

/// Parameters of the synthetic corpus used for effort-trend checks.
#[derive(Debug, Clone, Copy)]
pub struct ZipfCorpusSpec {
    pub num_docs: u32,
    pub vocab: u32,
    /// Zipf exponent for term popularity.
    pub exponent: f64,
    pub min_doc_len: u32,
    pub max_doc_len: u32,
    /// Topical anchor-term pairs appended after the Zipf vocabulary. The
    /// first `anchor_topics * anchor_docs_per_topic` documents each carry
    /// their topic's pair, giving the corpus rare terms that genuinely
    /// co-occur and doc ids ordered by quality, as production indexes
    /// arrange them.
    pub anchor_topics: u32,
    pub anchor_docs_per_topic: u32,
}

impl Default for ZipfCorpusSpec {
    fn default() -> Self {
        ZipfCorpusSpec {
            num_docs: 100_000,
            vocab: 2000,
            exponent: 1.1,
            min_doc_len: 6,
            max_doc_len: 14,
            anchor_topics: 0,
            anchor_docs_per_topic: 0,
        }
    }
}

fn zipf_cumulative(spec: &ZipfCorpusSpec) -> Vec<f64> {
    let mut cum = Vec::with_capacity(spec.vocab as usize);
    let mut total = 0.0;
    for r in 0..spec.vocab {
        total += 1.0 / f64::from(r + 1).powf(spec.exponent);
        cum.push(total);
    }
    cum
}

fn sample_zipf(rng: &mut ChaCha8Rng, cum: &[f64]) -> u32 {
    let target = rng.gen_range(0.0..*cum.last().unwrap());
    cum.partition_point(|&c| c < target) as u32
}

/// Zipf-distributed synthetic corpus: skewed lexical term frequencies with
/// a deliberately flat learned-weight distribution, the regime where cheap
/// lexical guidance prunes far more than learned maxima can.
pub fn synthetic_zipf_corpus(seed: u64, spec: &ZipfCorpusSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cum = zipf_cumulative(spec);
    let docs = (0..spec.num_docs)
        .map(|doc_id| {
            let len = rng.gen_range(spec.min_doc_len..=spec.max_doc_len);
            let mut counts = std::collections::BTreeMap::new();
            for _ in 0..len {
                *counts.entry(sample_zipf(&mut rng, &cum)).or_insert(0u32) += 1;
            }
            if spec.anchor_topics > 0 && doc_id < spec.anchor_topics * spec.anchor_docs_per_topic {
                let topic = doc_id % spec.anchor_topics;
                for offset in 0..2 {
                    let term = spec.vocab + 2 * topic + offset;
                    *counts.entry(term).or_insert(0) += rng.gen_range(1..=2);
                }
            }
            let entries = counts
                .into_iter()
                .map(|(term_id, tf)| CorpusEntry {
                    term_id,
                    tf,
                    w_l: 1.0 + rng.gen_range(0.0..0.5),
                })
                .collect();
            CorpusDoc { doc_id, entries }
        })
        .collect();
    Corpus::from_docs(docs)
}

/// Queries pairing one topic's two anchor terms with a few common terms.
pub fn synthetic_anchor_queries(
    seed: u64,
    count: usize,
    spec: &ZipfCorpusSpec,
    common_ranks: std::ops::Range<u32>,
    common_terms: std::ops::RangeInclusive<usize>,
) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let topic = rng.gen_range(0..spec.anchor_topics.max(1));
            let mut terms = vec![spec.vocab + 2 * topic, spec.vocab + 2 * topic + 1];
            let n_common = rng.gen_range(common_terms.clone());
            terms.extend((0..n_common).map(|_| rng.gen_range(common_ranks.clone())));
            Query::new(format!("anchor{i}"), terms)
        })
        .collect()
}

/// Queries over mid-frequency terms of the synthetic corpus.
pub fn synthetic_queries(
    seed: u64,
    count: usize,
    term_rank_range: std::ops::Range<u32>,
    min_terms: usize,
    max_terms: usize,
) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(min_terms..=max_terms);
            let terms = (0..n)
                .map(|_| rng.gen_range(term_rank_range.clone()))
                .collect();
            Query::new(format!("syn{i}"), terms)
        })
        .collect()
}

/// Realistic mixed queries: a few common terms plus one or two rare,
/// discriminative terms. On the Zipf corpus the rare terms carry most of
/// the lexical score mass while the flat learned maxima treat every list
/// alike, the spread that separates guided from unguided traversal effort.
pub fn synthetic_mixed_queries(
    seed: u64,
    count: usize,
    common_ranks: std::ops::Range<u32>,
    common_terms: std::ops::RangeInclusive<usize>,
    rare_ranks: std::ops::Range<u32>,
    rare_terms: usize,
) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n_common = rng.gen_range(common_terms.clone());
            let mut terms: Vec<u32> = (0..n_common)
                .map(|_| rng.gen_range(common_ranks.clone()))
                .collect();
            terms.extend((0..rare_terms).map(|_| rng.gen_range(rare_ranks.clone())));
            Query::new(format!("mix{i}"), terms)
        })
        .collect()
}
