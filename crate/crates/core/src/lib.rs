//! Learned-sparse retrieval over a dual-weight inverted index.
//!
//! Each posting carries two weights: a lexical BM25 weight and a learned
//! impact weight. Retrieval mixes the two with three independent
//! coefficients — `alpha` steers global (inter-document) pruning, `beta`
//! steers local (intra-document) pruning, and `gamma` forms the final rank
//! score — so cheap BM25 signals can guide skipping while the learned model
//! still decides the ranking. This two-level guided traversal (2GTI) is
//! available for both MaxScore and block-max (BMW-style) drivers, together
//! with an exhaustive scorer that serves as the rank-safety oracle.
//!
//! The crate also ships the surrounding plumbing: index construction with
//! BM25/learned weight alignment, a binary index format, TREC-style run and
//! qrels handling, relevance metrics, and randomized verification campaigns
//! for the traversal's relevance guarantees.

pub mod bm25;
pub mod blockmax;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod maxscore;
pub mod oracle;
pub mod query;
pub mod score;
pub mod trec;
pub mod verify;

pub use bm25::Bm25Params;
pub use error::{Error, Result};
pub use index::{AlignmentMode, AlignmentStats, DualIndex, FillMode, PostingList, PostingRecord};
pub use query::{Algorithm, EffortCounters, Query, QueryRun, TraversalConfig};
pub use score::{MixCoefficients, RankedList, ScoreTriple, ScoredDoc, TripleTopK};
