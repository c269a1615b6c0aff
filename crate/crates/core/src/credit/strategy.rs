use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{gate, CreditStats, GateDecision, GateReason, GateThresholds};
use crate::error::Error;

/// Credit-assignment strategy: the full method, the group-relative
/// baseline, and the ablation variants built on the same branch machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// Entropy anchors, influence and residual gate.
    RicePo,
    /// Trajectory-level advantages only.
    Grpo,
    /// Always copy the summary advantage to the paired reasoning span.
    Case1,
    /// Reasoning span takes the branch-centered final-reward advantage.
    Case2,
    /// Per-anchor coin flip between `Case1` and `Case2`.
    Random,
    /// Gate on `σ̂² ≥ τ_var` alone.
    InfluenceOnly,
    /// Gate on `ResVar ≤ τ_res` alone.
    EffectOnly,
    /// Anchors drawn uniformly instead of by entropy; full gate.
    RandomTrigger,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::RicePo,
        Strategy::Grpo,
        Strategy::Case1,
        Strategy::Case2,
        Strategy::Random,
        Strategy::InfluenceOnly,
        Strategy::EffectOnly,
        Strategy::RandomTrigger,
    ];

    pub const NAMES: [&'static str; 8] = [
        "rice-po",
        "grpo",
        "case1",
        "case2",
        "random",
        "influence-only",
        "effect-only",
        "random-trigger",
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES[Self::ALL.iter().position(|&s| s == self).expect("listed")]
    }

    pub fn uses_anchors(self) -> bool {
        self != Strategy::Grpo
    }

    pub fn random_trigger(self) -> bool {
        self == Strategy::RandomTrigger
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name().to_string()
    }
}

/// Where the paired reasoning span's advantage comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReasoningSource {
    /// `A_think = A_sum`.
    Summary,
    /// `A_think = A_i`.
    Trajectory,
    /// `A_think` from branch final rewards.
    FinalSummary,
}

/// Gate outcome and reasoning-credit source for one anchor under `strategy`.
pub fn decide<R: Rng>(
    strategy: Strategy,
    stats: &CreditStats,
    thr: &GateThresholds,
    rng: &mut R,
) -> (GateDecision, ReasoningSource) {
    let full = gate(stats, thr);
    let forced = |open| GateDecision { open, reason: if open { GateReason::Open } else { full.reason } };
    let from_gate = |d: GateDecision| {
        let src = if d.open { ReasoningSource::Summary } else { ReasoningSource::Trajectory };
        (d, src)
    };
    match strategy {
        Strategy::RicePo | Strategy::RandomTrigger => from_gate(full),
        Strategy::Grpo => (forced(false), ReasoningSource::Trajectory),
        Strategy::Case1 => (forced(true), ReasoningSource::Summary),
        Strategy::Case2 => (forced(false), ReasoningSource::FinalSummary),
        Strategy::Random => {
            if rng.random_bool(0.5) {
                (forced(true), ReasoningSource::Summary)
            } else {
                (forced(false), ReasoningSource::FinalSummary)
            }
        }
        Strategy::InfluenceOnly => {
            let open = stats.sigma2_hat >= thr.tau_var;
            let reason = if open { GateReason::Open } else { GateReason::LowInfluence };
            from_gate(GateDecision { open, reason })
        }
        Strategy::EffectOnly => {
            let open = stats.res_var <= thr.tau_res;
            let reason = if open { GateReason::Open } else { GateReason::UnstableResidual };
            from_gate(GateDecision { open, reason })
        }
    }
}
