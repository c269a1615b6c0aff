//! Group baseline, clipped policy update and the training loop.

pub mod advantage;
pub mod metrics;
pub mod ppo;
pub mod train;

pub use advantage::group_normalized_advantage;
pub use metrics::{read_metrics, write_metrics, Evaluation, IterationMetrics};
pub use ppo::{clipped_objective, importance_ratio, objective_and_gradient, ClippedObjective, ObjectiveEval, PpoBatch, PpoConfig};
pub use train::{evaluate, rollout_batch, train_loop, train_run, train_step, write_run, RunArtifacts, StepOutput};
