//! Okapi BM25 over the in-memory inverted index.
//!
//! ```text
//! score(d, q) = Σ_{t ∈ q} idf(t) · tf(t,d)·(k1+1) / (tf(t,d) + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5))
//! ```
//!
//! Query terms are summed per occurrence, so repeating a term in a query
//! weights it proportionally.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use crate::error::{Error, Result};
use crate::trajectory::{DocId, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

pub fn idf(n_docs: usize, df: usize) -> f64 {
    let n = n_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// BM25 score of every document that matches at least one query term.
pub fn score_matching(query: &[TokenId], corpus: &Corpus, params: Bm25Params) -> BTreeMap<DocId, f64> {
    let n = corpus.len();
    let avg = corpus.avg_len();
    let mut scores: BTreeMap<DocId, f64> = BTreeMap::new();
    for &term in query {
        let postings = corpus.postings(term);
        if postings.is_empty() {
            continue;
        }
        let w = idf(n, postings.len());
        for &(doc, tf) in postings {
            let tf = tf as f64;
            let norm = 1.0 - params.b + params.b * corpus.doc_len(doc) as f64 / avg;
            *scores.entry(doc).or_insert(0.0) += w * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
        }
    }
    scores
}

/// All documents with their scores, best first, ties by ascending doc id.
pub fn bm25_scores(query: &[TokenId], corpus: &Corpus, params: Bm25Params) -> Vec<(DocId, f64)> {
    let matched = score_matching(query, corpus, params);
    let mut all: Vec<(DocId, f64)> =
        corpus.ids().map(|d| (d, matched.get(&d).copied().unwrap_or(0.0))).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all
}

/// Top-`k` documents for `query`. An empty query yields the doc-id order.
pub fn bm25_rank(query: &[TokenId], corpus: &Corpus, k: usize, params: Bm25Params) -> Result<Vec<DocId>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("retrieval cutoff must be at least 1".into()));
    }
    Ok(bm25_scores(query, corpus, params).into_iter().take(k).map(|(d, _)| d).collect())
}
