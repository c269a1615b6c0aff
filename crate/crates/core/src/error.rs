use std::path::PathBuf;

/// Errors raised by the credit-assignment pipeline and its environment.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no such step: {0}")]
    NoSuchStep(usize),
    #[error("no such trajectory: {0}")]
    NoSuchTrajectory(usize),
    #[error("empty segment at step {0}")]
    EmptySegment(usize),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("episode over")]
    EpisodeOver,
    #[error("unknown query id {0}")]
    UnknownQuery(u32),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("infeasible task config: {0}")]
    InfeasibleTask(String),
    #[error("task self-check failed: {0}")]
    SelfCheck(String),
    #[error("grammar violation at token {index}: {reason}")]
    GrammarViolation { index: usize, reason: String },
    #[error("token {0} is not policy-generated")]
    NotPolicyToken(usize),
    #[error("need at least 2 branches, got {0}")]
    TooFewBranches(usize),
    #[error("anchor collision at trajectory {traj}, step {step}")]
    AnchorCollision { traj: usize, step: usize },
    #[error("empty group")]
    EmptyGroup,
    #[error("group of size {0} is too small for normalization")]
    GroupTooSmall(usize),
    #[error("group members do not share the same input")]
    MixedGroup,
    #[error("unknown strategy `{0}` (valid: {valid})", valid = crate::credit::Strategy::NAMES.join(", "))]
    UnknownStrategy(String),
    #[error("length mismatch: {what} ({left} vs {right})")]
    Misaligned { what: &'static str, left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("checkpoint config hash mismatch: expected {expected}, found {found}")]
    ConfigMismatch { expected: String, found: String },
    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("anchor {0} not found in audit log")]
    AnchorNotFound(u64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleTask(_)
                | Error::UnknownStrategy(_)
                | Error::InvalidConfig(_)
                | Error::AnchorNotFound(_)
                | Error::ConfigMismatch { .. }
                | Error::Parse { .. }
                | Error::UnknownQuery(_)
                | Error::SelfCheck(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
