//! Commands behind the `ricepo` binary. Each returns data or writes files;
//! argument parsing and exit codes live in the binary.

pub mod ablation;

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{RunConfig, SeedRange, CONFIG_FILE};
use crate::credit::{find_anchor, read_audit, render_report, Strategy};
use crate::error::{Error, Result};
use crate::optimizer::{train_loop, Evaluation};
use crate::retrieval::io::{load_manifest, load_task, render_task, write_atomic};
use crate::retrieval::{generate_synthetic_task, Manifest, RetrievalEnv};

pub use ablation::{ablation_csv, run_ablation, AblationTable, Suite};

/// Output root when `--out` is omitted.
pub const OUT_DIR_VAR: &str = "RICEPO_OUT_DIR";

pub fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_VAR).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

/// Exit status for a command result: 0 ok, 2 bad input, 1 anything else.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_usage() => 2,
        Err(_) => 1,
    }
}

/// Generates a task and writes it to `out`. Nothing is written unless the
/// self-check passes.
pub fn gen_task(seed: u64, out: &Path, cfg: &RunConfig) -> Result<Manifest> {
    cfg.check()?;
    let (task, manifest) = generate_synthetic_task(seed, &cfg.task, &cfg.env)?;
    let files = render_task(&task, Some(&manifest))?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (name, bytes) in files {
        write_atomic(&out.join(name), &bytes)?;
    }
    cfg.save(&out.join(CONFIG_FILE))?;
    Ok(manifest)
}

/// Loads a task directory and builds its environment from `cfg.env`. If the
/// directory carries a manifest, its recorded rewards are re-checked.
pub fn open_task(dir: &Path, cfg: &RunConfig) -> Result<RetrievalEnv> {
    let task = load_task(dir)?;
    let env = RetrievalEnv::new(task, cfg.env)?;
    if let Some(m) = load_manifest(dir)? {
        if m.env == cfg.env {
            m.verify(&env)?;
        }
    }
    Ok(env)
}

/// Trains `strategy` once per seed, in parallel, writing each run under
/// `out/<strategy>/seed-<s>/`.
pub fn train(task_dir: &Path, strategy: Strategy, seeds: SeedRange, out: &Path, cfg: &RunConfig) -> Result<Vec<Evaluation>> {
    cfg.check()?;
    let env = open_task(task_dir, cfg)?;
    seeds
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&s| {
            let run = train_loop(cfg, &env, strategy, s, Some(out))?;
            log::info!("{strategy} seed {s}: final NDCG@10 {:.4}", run.evaluation.mean_final_reward);
            Ok(run.evaluation)
        })
        .collect()
}

/// Text report for one anchor of an audit log.
pub fn inspect_branches(audit: &Path, anchor_id: u64) -> Result<String> {
    let records = read_audit(audit)?;
    Ok(render_report(find_anchor(&records, anchor_id)?))
}
