//! Okapi BM25 term weighting for the lexical side of the index.

use crate::error::{Error, Result};

/// BM25 parameters. Defaults (`k1 = 0.9`, `b = 0.4`) suit short-passage
/// corpora; both are exposed as CLI flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 > 0.0) {
            return Err(Error::domain(format!("bm25 k1 must be > 0, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::domain(format!("bm25 b must be in [0,1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; strictly positive for df <= N.
pub fn idf(df: u32, num_docs: u32) -> f64 {
    let df = f64::from(df);
    let n = f64::from(num_docs);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// BM25 weight of a single (term, document) pair.
///
/// `idf(df, N) * tf*(k1+1) / (tf + k1*(1 - b + b*doc_len/avg_doc_len))`.
pub fn bm25_weight(
    tf: u32,
    df: u32,
    doc_len: u32,
    avg_doc_len: f64,
    num_docs: u32,
    params: Bm25Params,
) -> Result<f64> {
    if tf == 0 {
        return Err(Error::domain("bm25 tf must be >= 1"));
    }
    if df == 0 {
        return Err(Error::domain("bm25 df must be >= 1"));
    }
    if df > num_docs {
        return Err(Error::domain(format!(
            "bm25 df {df} exceeds num_docs {num_docs}"
        )));
    }
    if doc_len == 0 {
        return Err(Error::domain("bm25 doc_len must be >= 1"));
    }
    if !(avg_doc_len > 0.0) {
        return Err(Error::domain("bm25 avg_doc_len must be > 0"));
    }
    let tf = f64::from(tf);
    let norm = 1.0 - params.b + params.b * f64::from(doc_len) / avg_doc_len;
    Ok(idf(df, num_docs) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm))
}
