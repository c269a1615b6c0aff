use std::collections::BTreeMap;

use crate::trajectory::{DocId, QueryId};

pub const NDCG_CUTOFF: usize = 10;

/// Graded relevance judgments, keyed by query then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<QueryId, BTreeMap<DocId, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: QueryId, doc: DocId, rel: u32) {
        self.judgments.entry(query).or_default().insert(doc, rel);
    }

    /// Judgments for `query`; empty when the query is unjudged.
    pub fn for_query(&self, query: QueryId) -> &BTreeMap<DocId, u32> {
        static EMPTY: BTreeMap<DocId, u32> = BTreeMap::new();
        self.judgments.get(&query).unwrap_or(&EMPTY)
    }

    pub fn queries(&self) -> impl Iterator<Item = QueryId> + '_ {
        self.judgments.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (QueryId, DocId, u32)> + '_ {
        self.judgments
            .iter()
            .flat_map(|(&q, m)| m.iter().map(move |(&d, &r)| (q, d, r)))
    }

    pub fn has_positive(&self, query: QueryId) -> bool {
        self.for_query(query).values().any(|&r| r > 0)
    }
}

/// Linear-gain DCG over the first `k` ranks: `Σ rel_i / log2(i + 1)`.
pub fn dcg_at_k(ranked: &[DocId], rels: &BTreeMap<DocId, u32>, k: usize) -> f64 {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| rels.get(d).copied().unwrap_or(0) as f64 / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@k, or 0 when the query has no relevant document.
pub fn ndcg_at_k(ranked: &[DocId], rels: &BTreeMap<DocId, u32>, k: usize) -> f64 {
    let mut ideal: Vec<u32> = rels.values().copied().filter(|&r| r > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &r)| r as f64 / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        return 0.0;
    }
    dcg_at_k(ranked, rels, k) / idcg
}
