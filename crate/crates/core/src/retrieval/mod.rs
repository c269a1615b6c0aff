//! Fixed retriever, reward and episode environment.

pub mod bm25;
pub mod corpus;
pub mod env;
pub mod io;
pub mod ndcg;
pub mod synthetic;

pub use bm25::{bm25_rank, bm25_scores, Bm25Params};
pub use corpus::Corpus;
pub use env::{EnvConfig, EpisodeState, QueryFusion, RetrievalEnv, Task};
pub use ndcg::{ndcg_at_k, Qrels, NDCG_CUTOFF};
pub use synthetic::{generate_synthetic_task, Manifest, QueryCheck, TaskConfig};
