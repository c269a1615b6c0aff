use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::credit::Strategy;
use crate::error::{Error, Result};

/// One line of the per-iteration metric log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub mean_final_reward: f64,
    pub mean_local_reward: f64,
    pub anchors: usize,
    pub gates_open: usize,
    pub mean_sigma2: f64,
    pub mean_resvar: f64,
    pub kl: f64,
    pub objective: f64,
}

/// Post-training evaluation of a policy snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub strategy: Strategy,
    pub seed: u64,
    pub iterations: usize,
    pub episodes: usize,
    pub mean_final_reward: f64,
    pub mean_local_reward: f64,
}

pub fn write_metrics<W: Write>(mut w: W, rows: &[IterationMetrics]) -> std::io::Result<()> {
    for r in rows {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_metrics<R: BufRead>(r: R) -> Result<Vec<IterationMetrics>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<metrics>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: "<metrics>".into(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
