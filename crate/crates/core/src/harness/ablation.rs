use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{RunConfig, SeedRange};
use crate::credit::Strategy;
use crate::error::{Error, Result};
use crate::optimizer::train_loop;
use crate::retrieval::RetrievalEnv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Propagation,
    Gates,
    Triggers,
}

impl Suite {
    pub const NAMES: [&'static str; 3] = ["propagation", "gates", "triggers"];

    /// Strategies compared by the suite; the reference method comes first.
    pub fn strategies(self) -> &'static [Strategy] {
        use Strategy::*;
        match self {
            Suite::Propagation => &[RicePo, Case1, Case2, Random],
            Suite::Gates => &[RicePo, InfluenceOnly, EffectOnly],
            Suite::Triggers => &[RicePo, RandomTrigger],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Propagation => "propagation",
            Suite::Gates => "gates",
            Suite::Triggers => "triggers",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "propagation" => Ok(Suite::Propagation),
            "gates" => Ok(Suite::Gates),
            "triggers" => Ok(Suite::Triggers),
            _ => Err(Error::InvalidConfig(format!(
                "unknown suite `{s}`; expected one of: {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

/// Final mean NDCG@10 per (seed, strategy).
#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// `scores[s][j]` for seed index `s` and strategy index `j`.
    pub scores: Vec<Vec<f64>>,
}

impl AblationTable {
    pub fn column(&self, strategy: Strategy) -> Option<Vec<f64>> {
        let j = self.strategies.iter().position(|&s| s == strategy)?;
        Some(self.scores.iter().map(|row| row[j]).collect())
    }

    pub fn mean(&self, strategy: Strategy) -> Option<f64> {
        let c = self.column(strategy)?;
        Some(c.iter().sum::<f64>() / c.len().max(1) as f64)
    }

    /// Per-seed `first − strategy` differences.
    pub fn gains(&self, strategy: Strategy) -> Option<Vec<f64>> {
        let base = self.column(self.strategies[0])?;
        let other = self.column(strategy)?;
        Some(base.iter().zip(&other).map(|(a, b)| a - b).collect())
    }
}

/// Trains every `(strategy, seed)` pair. Runs share rollout and evaluation
/// streams per seed, so differences come from credit assignment alone.
pub fn run_ablation(
    env: &RetrievalEnv,
    strategies: &[Strategy],
    seeds: SeedRange,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<AblationTable> {
    cfg.check()?;
    let jobs: Vec<(u64, Strategy)> = seeds.iter().flat_map(|s| strategies.iter().map(move |&k| (s, k))).collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(seed, strategy)| {
            let run = train_loop(cfg, env, strategy, seed, out)?;
            log::info!("{strategy} seed {seed}: final NDCG@10 {:.4}", run.evaluation.mean_final_reward);
            Ok(run.evaluation.mean_final_reward)
        })
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = seeds.iter().collect();
    let scores = results.chunks(strategies.len()).map(<[f64]>::to_vec).collect();
    Ok(AblationTable { strategies: strategies.to_vec(), seeds, scores })
}

/// CSV with one row per seed, the strategies' scores, and one
/// `gain_<strategy>` column per alternative holding the paired difference
/// to the first strategy. A final `mean` row averages every column.
pub fn ablation_csv(table: &AblationTable) -> String {
    let others = &table.strategies[1..];
    let gains: Vec<Vec<f64>> = others.iter().map(|&s| table.gains(s).unwrap_or_default()).collect();
    let fmt = |v: f64| format!("{v:.6}");

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed".to_string()];
    header.extend(table.strategies.iter().map(|s| s.name().to_string()));
    header.extend(others.iter().map(|s| format!("gain_{}", s.name())));
    let mut rows = vec![header];
    for (i, seed) in table.seeds.iter().enumerate() {
        let mut row = vec![seed.to_string()];
        row.extend(table.scores[i].iter().map(|&v| fmt(v)));
        row.extend(gains.iter().map(|g| fmt(g[i])));
        rows.push(row);
    }
    let n = table.seeds.len().max(1) as f64;
    let mut row = vec!["mean".to_string()];
    row.extend(table.strategies.iter().map(|&s| fmt(table.mean(s).unwrap_or(0.0))));
    row.extend(gains.iter().map(|g| fmt(g.iter().sum::<f64>() / n)));
    rows.push(row);
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii fields")
}
