//! Critic-free credit assignment for multi-turn retrieval agents.
//!
//! A toy agent issues queries against a BM25 index over several rounds.
//! Each round it writes a short reasoning span (never executed) and a
//! summary (sent to the retriever and scored with NDCG@10). Training uses
//! group-relative advantages, and selectively sharpens them: high-entropy
//! summaries are resampled a few times from the same history, and when the
//! local reward clearly depends on that step while later rounds stay stable,
//! the step-level advantage is copied onto the paired reasoning span too.
//!
//! Module map:
//!
//! - [`trajectory`]: episodes, spans, per-token log-probs and entropies
//! - [`retrieval`]: corpus, BM25, NDCG, the environment and a synthetic task generator
//! - [`policy`]: feature-linear softmax policy with analytic gradients
//! - [`credit`]: anchors, branching, gate, token-level advantage assembly
//! - [`optimizer`]: group baseline, clipped update, training loop
//! - [`harness`]: the commands behind the `ricepo` binary
//!
//! See `examples/` for one runnable program per capability.

pub mod config;
pub mod credit;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod policy;
pub mod retrieval;
pub mod rng;
pub mod rollout;
pub mod significance;
pub mod trajectory;
pub mod vocab;

pub use config::RunConfig;
pub use credit::Strategy;
pub use error::{Error, Result};
pub use policy::PolicyParams;
pub use retrieval::RetrievalEnv;
pub use trajectory::{Trajectory, TrajectoryGroup};
pub use vocab::Vocab;
