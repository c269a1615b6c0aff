use std::collections::{BTreeMap, HashMap};

use crate::trajectory::{DocId, TokenId};

/// Document collection with the statistics BM25 needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: BTreeMap<DocId, Vec<TokenId>>,
    postings: HashMap<TokenId, Vec<(DocId, u32)>>,
    lengths: BTreeMap<DocId, usize>,
    avg_len: f64,
}

impl Corpus {
    pub fn new(docs: BTreeMap<DocId, Vec<TokenId>>) -> Self {
        let mut postings: HashMap<TokenId, Vec<(DocId, u32)>> = HashMap::new();
        let mut lengths = BTreeMap::new();
        for (&id, toks) in &docs {
            let mut tf: BTreeMap<TokenId, u32> = BTreeMap::new();
            for &t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((id, c));
            }
            lengths.insert(id, toks.len());
        }
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            lengths.values().sum::<usize>() as f64 / docs.len() as f64
        };
        Corpus { docs, postings, lengths, avg_len }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: DocId) -> Option<&[TokenId]> {
        self.docs.get(&id).map(Vec::as_slice)
    }

    pub fn docs(&self) -> &BTreeMap<DocId, Vec<TokenId>> {
        &self.docs
    }

    /// Doc ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.docs.keys().copied()
    }

    pub fn doc_freq(&self, term: TokenId) -> usize {
        self.postings.get(&term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: TokenId) -> &[(DocId, u32)] {
        self.postings.get(&term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_len(&self, id: DocId) -> usize {
        self.lengths.get(&id).copied().unwrap_or(0)
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    /// One past the largest doc id (0 for an empty corpus).
    pub fn id_bound(&self) -> u32 {
        self.docs.keys().next_back().map_or(0, |&d| d + 1)
    }

    pub fn max_term(&self) -> Option<TokenId> {
        self.postings.keys().copied().max()
    }
}
