//! Run configuration: one TOML file holding every knob of a run.
//!
//! Precedence is command-line flags over file values over the defaults
//! below. The effective configuration is written next to every output.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::credit::CreditConfig;
use crate::error::{Error, Result};
use crate::optimizer::PpoConfig;
use crate::policy::{GenerationBudget, PolicyConfig};
use crate::retrieval::{EnvConfig, Task, TaskConfig};

pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySettings {
    /// Previous tokens visible to the policy.
    pub window: usize,
    pub budget: GenerationBudget,
}

impl Default for PolicySettings {
    fn default() -> Self {
        PolicySettings { window: 2, budget: GenerationBudget::default() }
    }
}

impl PolicySettings {
    pub fn for_task(&self, task: &Task) -> PolicyConfig {
        PolicyConfig {
            vocab: task.vocab,
            window: self.window,
            budget: self.budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSettings {
    pub iterations: usize,
    /// Evaluation episodes per query after training.
    pub eval_episodes: usize,
}

impl Default for LoopSettings {
    fn default() -> Self {
        LoopSettings { iterations: 40, eval_episodes: 32 }
    }
}

/// Inclusive seed range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for SeedRange {
    fn default() -> Self {
        SeedRange { first: 0, last: 9 }
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl FromStr for SeedRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("seed range `{s}` is not `a..b` or `a`"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
            None => (s.trim(), s.trim()),
        };
        let first: u64 = a.parse().map_err(|_| bad())?;
        let last: u64 = b.parse().map_err(|_| bad())?;
        if last < first {
            return Err(bad());
        }
        Ok(SeedRange { first, last })
    }
}

impl Serialize for SeedRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: SeedRange,
    pub task: TaskConfig,
    pub env: EnvConfig,
    pub policy: PolicySettings,
    pub credit: CreditConfig,
    pub ppo: PpoConfig,
    pub train: LoopSettings,
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        self.task.check()?;
        self.ppo.check()?;
        if self.env.max_depth == 0 || self.env.cutoff == 0 || self.env.ndcg_k == 0 {
            return Err(Error::InvalidConfig("env cutoff, ndcg_k and max_depth must be positive".into()));
        }
        if self.policy.budget.max_reasoning == 0 || self.policy.budget.max_summary == 0 {
            return Err(Error::InvalidConfig("generation budgets must be at least 1".into()));
        }
        if self.credit.k_anchors == 0 || self.credit.k_branches == 0 {
            return Err(Error::InvalidConfig("k_anchors and k_branches must be at least 1".into()));
        }
        let t = &self.credit.thresholds;
        if !(t.tau_var >= 0.0 && t.tau_res >= 0.0) {
            return Err(Error::InvalidConfig("gate thresholds must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// File values when `path` is given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::retrieval::io::write_atomic(path, self.to_toml().as_bytes())
    }
}
