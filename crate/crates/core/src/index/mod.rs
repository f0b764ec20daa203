//! The dual-weight inverted index.
//!
//! Every posting stores both a BM25 weight and a learned impact weight, so
//! one traversal can consult either (or any mix) without a second index.
//! Construction computes BM25 weights from raw term frequencies, aligns the
//! two weight models where one side is missing, and attaches per-list and
//! per-block maxima for dynamic pruning. The built index is immutable and
//! safe to share across concurrent query workers.

mod io;

pub use io::{load_index, serialize_index, FORMAT_VERSION, MAGIC};

use std::collections::BTreeMap;

use crate::bm25::{bm25_weight, Bm25Params};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// How missing BM25 weights are filled when merging the two weight models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMode {
    /// Missing BM25 weight stays zero.
    ZeroFill,
    /// Missing BM25 weight is computed as if the term occurred once.
    OneFill,
    /// Missing BM25 weight is the learned weight scaled by the corpus-wide
    /// ratio of mean nonzero BM25 weight to mean nonzero learned weight.
    ScaledFill,
}

/// Weight alignment policy applied at build time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentMode {
    pub fill: FillMode,
    /// Keep postings whose learned weight is zero but BM25 weight is not.
    /// Dropped by default: they cannot move a learned-leaning rank score yet
    /// still cost traversal work.
    pub include_learned_zero: bool,
}

impl Default for AlignmentMode {
    fn default() -> Self {
        AlignmentMode {
            fill: FillMode::ZeroFill,
            include_learned_zero: false,
        }
    }
}

impl AlignmentMode {
    pub fn new(fill: FillMode) -> Self {
        AlignmentMode {
            fill,
            include_learned_zero: false,
        }
    }
}

/// Corpus-wide statistics backing scaled alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentStats {
    /// Mean of nonzero BM25 weights.
    pub mean_b: f64,
    /// Mean of nonzero learned weights.
    pub mean_l: f64,
    /// `mean_b / mean_l`.
    pub scale_ratio: f64,
    /// Number of postings whose BM25 weight was filled; populated by the
    /// build, zero straight out of `compute_alignment_stats`.
    pub filled_count: u64,
}

/// One posting: a document and its two weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostingRecord {
    pub doc_id: u32,
    pub tf: u32,
    pub w_b: f64,
    pub w_l: f64,
}

/// Metadata of one logical block of a posting list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMeta {
    /// Index of the first record in the block.
    pub first_index: u32,
    /// Index of the last record in the block (inclusive).
    pub last_index: u32,
    pub max_doc_id: u32,
    /// Block maximum BM25 weight.
    pub delta_b: f64,
    /// Block maximum learned weight.
    pub delta_l: f64,
}

/// A term's postings with list/block maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct PostingList {
    pub term_id: u32,
    pub records: Vec<PostingRecord>,
    /// List maximum BM25 weight.
    pub sigma_b: f64,
    /// List maximum learned weight.
    pub sigma_l: f64,
    pub blocks: Vec<BlockMeta>,
}

impl PostingList {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The dual-weight inverted index.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIndex {
    pub num_docs: u32,
    pub doc_lengths: Vec<u32>,
    pub avg_doc_length: f64,
    pub block_size: u32,
    pub alignment: AlignmentMode,
    lists: BTreeMap<u32, PostingList>,
}

impl DualIndex {
    pub fn list(&self, term_id: u32) -> Option<&PostingList> {
        self.lists.get(&term_id)
    }

    pub fn has_term(&self, term_id: u32) -> bool {
        self.lists.contains_key(&term_id)
    }

    pub fn num_terms(&self) -> usize {
        self.lists.len()
    }

    pub fn lists(&self) -> impl Iterator<Item = &PostingList> {
        self.lists.values()
    }

    pub fn postings_count(&self) -> u64 {
        self.lists.values().map(|l| l.records.len() as u64).sum()
    }

    pub(crate) fn from_parts(
        num_docs: u32,
        doc_lengths: Vec<u32>,
        avg_doc_length: f64,
        block_size: u32,
        alignment: AlignmentMode,
        lists: BTreeMap<u32, PostingList>,
    ) -> Self {
        DualIndex {
            num_docs,
            doc_lengths,
            avg_doc_length,
            block_size,
            alignment,
            lists,
        }
    }
}

/// Build-time bookkeeping surfaced by `build_index`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuildStats {
    /// Postings kept in the index.
    pub num_postings: u64,
    /// Postings whose BM25 weight was filled by the alignment pass.
    pub filled_count: u64,
    /// Postings dropped because the learned weight was zero.
    pub dropped_learned_zero: u64,
}

/// A built index together with its build statistics.
#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub index: DualIndex,
    pub stats: BuildStats,
    /// Present when scaled alignment was used.
    pub scale: Option<AlignmentStats>,
}

/// Mean nonzero weights on both sides and their ratio.
///
/// BM25 weights are evaluated for every posting with `tf > 0` using the
/// corpus document statistics; learned weights are taken as given.
pub fn compute_alignment_stats(corpus: &Corpus, params: Bm25Params) -> Result<AlignmentStats> {
    let layout = CorpusLayout::analyze(corpus)?;
    let mut sum_b = 0.0;
    let mut count_b = 0u64;
    let mut sum_l = 0.0;
    let mut count_l = 0u64;
    for doc in &corpus.docs {
        for e in &doc.entries {
            if e.tf > 0 {
                let df = layout.lexical_df[&e.term_id];
                sum_b += bm25_weight(
                    e.tf,
                    df,
                    layout.doc_lengths[doc.doc_id as usize],
                    layout.avg_doc_length,
                    layout.num_docs,
                    params,
                )?;
                count_b += 1;
            }
            if e.w_l > 0.0 {
                sum_l += e.w_l;
                count_l += 1;
            }
        }
    }
    if count_b == 0 {
        return Err(Error::Alignment(
            "no nonzero BM25 weights in corpus; scaled alignment unusable".into(),
        ));
    }
    if count_l == 0 {
        return Err(Error::Alignment(
            "no nonzero learned weights in corpus; scaled alignment unusable".into(),
        ));
    }
    let mean_b = sum_b / count_b as f64;
    let mean_l = sum_l / count_l as f64;
    Ok(AlignmentStats {
        mean_b,
        mean_l,
        scale_ratio: mean_b / mean_l,
        filled_count: 0,
    })
}

/// Per-corpus layout shared by stats computation and the build.
struct CorpusLayout {
    num_docs: u32,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    /// Documents with `tf > 0` per term: the lexical document frequency.
    lexical_df: BTreeMap<u32, u32>,
    /// All postings per term, any tf.
    full_df: BTreeMap<u32, u32>,
}

impl CorpusLayout {
    fn analyze(corpus: &Corpus) -> Result<Self> {
        let num_docs = corpus.docs.len();
        let mut doc_lengths = vec![None::<u32>; num_docs];
        for doc in &corpus.docs {
            let id = doc.doc_id as usize;
            if id >= num_docs {
                return Err(Error::NonDenseDocIds {
                    num_docs,
                    detail: format!("doc id {} out of range", doc.doc_id),
                });
            }
            if doc_lengths[id].is_some() {
                return Err(Error::NonDenseDocIds {
                    num_docs,
                    detail: format!("doc id {} appears twice", doc.doc_id),
                });
            }
            doc_lengths[id] = Some(doc.token_length());
        }
        let doc_lengths: Vec<u32> = doc_lengths
            .into_iter()
            .enumerate()
            .map(|(id, len)| {
                len.ok_or_else(|| Error::NonDenseDocIds {
                    num_docs,
                    detail: format!("doc id {id} missing"),
                })
            })
            .collect::<Result<_>>()?;
        let avg_doc_length = if num_docs == 0 {
            0.0
        } else {
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / num_docs as f64
        };
        let mut lexical_df = BTreeMap::new();
        let mut full_df = BTreeMap::new();
        for doc in &corpus.docs {
            for e in &doc.entries {
                *full_df.entry(e.term_id).or_insert(0) += 1;
                if e.tf > 0 {
                    *lexical_df.entry(e.term_id).or_insert(0) += 1;
                }
            }
        }
        Ok(CorpusLayout {
            num_docs: num_docs as u32,
            doc_lengths,
            avg_doc_length,
            lexical_df,
            full_df,
        })
    }
}

/// Builds the dual-weight index from a tokenized corpus.
///
/// BM25 weights are computed for every posting with `tf > 0`; postings with
/// `tf == 0` (learned-only) get their BM25 weight from the alignment mode.
/// One-filling treats the missing term as occurring once, which also makes
/// it count toward the document frequency used on that list.
pub fn build_index(
    corpus: &Corpus,
    params: Bm25Params,
    block_size: u32,
    alignment: AlignmentMode,
) -> Result<BuildOutput> {
    if block_size == 0 {
        return Err(Error::domain("block_size must be >= 1"));
    }
    let layout = CorpusLayout::analyze(corpus)?;
    let scale = match alignment.fill {
        FillMode::ScaledFill => Some(compute_alignment_stats(corpus, params)?),
        _ => None,
    };

    // Group postings per term, catching duplicates and bad weights.
    let mut grouped: BTreeMap<u32, Vec<(u32, u32, f64)>> = BTreeMap::new();
    for doc in &corpus.docs {
        for e in &doc.entries {
            if e.w_l < 0.0 {
                return Err(Error::NegativeWeight {
                    doc_id: doc.doc_id,
                    term_id: e.term_id,
                    value: e.w_l,
                });
            }
            if e.tf == 0 && e.w_l == 0.0 {
                return Err(Error::domain(format!(
                    "posting (doc {}, term {}) has zero tf and zero learned weight",
                    doc.doc_id, e.term_id
                )));
            }
            grouped
                .entry(e.term_id)
                .or_default()
                .push((doc.doc_id, e.tf, e.w_l));
        }
    }

    let mut stats = BuildStats::default();
    let mut lists = BTreeMap::new();
    for (term_id, mut postings) in grouped {
        postings.sort_by_key(|&(doc, _, _)| doc);
        for pair in postings.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicatePosting {
                    doc_id: pair[0].0,
                    term_id,
                });
            }
        }
        // One-filling raises missing tf to 1, so the document frequency on
        // this list covers every posting; other modes keep the lexical df.
        let df = match alignment.fill {
            FillMode::OneFill => layout.full_df[&term_id],
            _ => layout.lexical_df.get(&term_id).copied().unwrap_or(0),
        };

        let mut records = Vec::with_capacity(postings.len());
        for (doc_id, tf, w_l) in postings {
            if w_l == 0.0 && !alignment.include_learned_zero {
                stats.dropped_learned_zero += 1;
                continue;
            }
            let doc_len = layout.doc_lengths[doc_id as usize];
            let (tf, w_b) = if tf > 0 {
                (
                    tf,
                    bm25_weight(tf, df, doc_len, layout.avg_doc_length, layout.num_docs, params)?,
                )
            } else {
                stats.filled_count += 1;
                match alignment.fill {
                    FillMode::ZeroFill => (0, 0.0),
                    FillMode::OneFill => (
                        1,
                        bm25_weight(1, df, doc_len, layout.avg_doc_length, layout.num_docs, params)?,
                    ),
                    FillMode::ScaledFill => (0, scale.as_ref().unwrap().scale_ratio * w_l),
                }
            };
            records.push(PostingRecord { doc_id, tf, w_b, w_l });
        }
        if records.is_empty() {
            continue;
        }
        stats.num_postings += records.len() as u64;
        lists.insert(term_id, finish_list(term_id, records, block_size));
    }

    let index = DualIndex::from_parts(
        layout.num_docs,
        layout.doc_lengths,
        layout.avg_doc_length,
        block_size,
        alignment,
        lists,
    );
    let scale = scale.map(|mut s| {
        s.filled_count = stats.filled_count;
        s
    });
    Ok(BuildOutput { index, stats, scale })
}

/// Computes list/block maxima over sorted records.
pub(crate) fn finish_list(term_id: u32, records: Vec<PostingRecord>, block_size: u32) -> PostingList {
    let mut sigma_b = 0.0f64;
    let mut sigma_l = 0.0f64;
    for r in &records {
        sigma_b = sigma_b.max(r.w_b);
        sigma_l = sigma_l.max(r.w_l);
    }
    let mut blocks = Vec::new();
    let size = block_size as usize;
    let mut start = 0;
    while start < records.len() {
        let end = (start + size).min(records.len());
        let chunk = &records[start..end];
        let mut delta_b = 0.0f64;
        let mut delta_l = 0.0f64;
        for r in chunk {
            delta_b = delta_b.max(r.w_b);
            delta_l = delta_l.max(r.w_l);
        }
        blocks.push(BlockMeta {
            first_index: start as u32,
            last_index: (end - 1) as u32,
            max_doc_id: chunk.last().unwrap().doc_id,
            delta_b,
            delta_l,
        });
        start = end;
    }
    PostingList {
        term_id,
        records,
        sigma_b,
        sigma_l,
        blocks,
    }
}
