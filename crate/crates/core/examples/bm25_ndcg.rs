//! Rank a toy corpus with BM25 and score the ranking with NDCG.
//!
//! ```bash
//! cargo run --example bm25_ndcg
//! ```

use std::collections::BTreeMap;

use ricepo::retrieval::{bm25_rank, bm25_scores, ndcg_at_k, Bm25Params, Corpus};

fn main() -> ricepo::Result<()> {
    let docs: BTreeMap<u32, Vec<u32>> = [
        (0, vec![0, 1, 2]),
        (1, vec![1, 1, 3]),
        (2, vec![4, 5]),
        (3, vec![0, 0, 0, 3, 6]),
    ]
    .into_iter()
    .collect();
    let corpus = Corpus::new(docs);
    let query = [1, 0];

    for (doc, score) in bm25_scores(&query, &corpus, Bm25Params::default()) {
        println!("doc {doc}: {score:.4}");
    }
    let ranked = bm25_rank(&query, &corpus, 3, Bm25Params::default())?;
    let rels: BTreeMap<u32, u32> = [(1, 2), (2, 1)].into_iter().collect();
    println!("top 3: {ranked:?}");
    println!("NDCG@10 = {:.4}", ndcg_at_k(&ranked, &rels, 10));
    Ok(())
}
