//! Desk-scale bridge-term retrieval tasks.
//!
//! Each query owns a few query terms and a few bridge terms. Distractor
//! documents pair one query term with one bridge term, so the bare query
//! retrieves only distractors. The relevant document repeats the bridge
//! terms and shares nothing with the query, so it is reachable only once a
//! summary names the bridge terms seen in earlier tool responses.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::env::{EnvConfig, RetrievalEnv, Task};
use super::ndcg::Qrels;
use crate::error::{Error, Result};
use crate::rng;
use crate::trajectory::{DocId, QueryId, TokenId};
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// Number of content terms.
    pub vocab_size: u32,
    pub n_queries: usize,
    pub query_terms: usize,
    pub bridge_terms: usize,
    /// Shared filler vocabulary used by distractors and noise documents.
    pub noise_terms: usize,
    pub filler_per_doc: usize,
    /// Occurrences of each bridge term inside the relevant document.
    pub relevant_tf: usize,
    pub noise_docs: usize,
    /// Required oracle-minus-bare-query reward gap for every query.
    pub min_gap: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            vocab_size: 40,
            n_queries: 8,
            query_terms: 2,
            bridge_terms: 2,
            noise_terms: 8,
            filler_per_doc: 2,
            relevant_tf: 3,
            noise_docs: 16,
            min_gap: 0.5,
        }
    }
}

impl TaskConfig {
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InfeasibleTask(m));
        if self.n_queries == 0 || self.query_terms == 0 || self.bridge_terms == 0 {
            return fail("n_queries, query_terms and bridge_terms must be positive".into());
        }
        if self.relevant_tf == 0 {
            return fail("relevant_tf must be positive".into());
        }
        let needed = self.n_queries * (self.query_terms + self.bridge_terms) + self.noise_terms;
        if needed > self.vocab_size as usize {
            return fail(format!(
                "{} queries x ({} query + {} bridge terms) + {} noise terms = {needed} exceeds vocab size {}",
                self.n_queries, self.query_terms, self.bridge_terms, self.noise_terms, self.vocab_size
            ));
        }
        if self.filler_per_doc > 0 && self.noise_terms == 0 {
            return fail("filler requires at least one noise term".into());
        }
        if self.noise_docs > 0 && self.noise_terms == 0 {
            return fail("noise documents require at least one noise term".into());
        }
        if !(0.0..=1.0).contains(&self.min_gap) {
            return fail(format!("min_gap {} outside [0, 1]", self.min_gap));
        }
        Ok(())
    }
}

/// Per-query self-check recorded by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCheck {
    pub query_id: QueryId,
    pub bridge_terms: Vec<TokenId>,
    pub relevant_docs: Vec<DocId>,
    pub round0_reward: f64,
    pub oracle_reward: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub vocab_size: u32,
    pub task: TaskConfig,
    pub env: EnvConfig,
    pub queries: Vec<QueryCheck>,
    pub passed: bool,
}

impl Manifest {
    /// Recomputes every recorded reward through `env` and checks the gap.
    pub fn verify(&self, env: &RetrievalEnv) -> Result<()> {
        for q in &self.queries {
            let (_, r0) = env.reset(q.query_id)?;
            let oracle = env.reward(
                q.query_id,
                &env.rank(&env.retrieval_query(q.query_id, &q.bridge_terms)?)?,
            );
            if r0 != q.round0_reward || oracle != q.oracle_reward {
                return Err(Error::SelfCheck(format!(
                    "query {}: recorded ({}, {}) but recomputed ({r0}, {oracle})",
                    q.query_id, q.round0_reward, q.oracle_reward
                )));
            }
            check_query(q, self.task.min_gap)?;
        }
        Ok(())
    }
}

fn check_query(q: &QueryCheck, min_gap: f64) -> Result<()> {
    if q.round0_reward >= 0.5 {
        return Err(Error::SelfCheck(format!("query {}: bare-query reward {} >= 0.5", q.query_id, q.round0_reward)));
    }
    if (q.oracle_reward - 1.0).abs() > 1e-12 {
        return Err(Error::SelfCheck(format!("query {}: oracle reward {} != 1", q.query_id, q.oracle_reward)));
    }
    if q.gap < min_gap {
        return Err(Error::SelfCheck(format!("query {}: gap {} < {min_gap}", q.query_id, q.gap)));
    }
    Ok(())
}

/// Builds a task deterministically from `seed` and self-checks it.
pub fn generate_synthetic_task(seed: u64, cfg: &TaskConfig, env_cfg: &EnvConfig) -> Result<(Task, Manifest)> {
    cfg.check()?;
    let mut rng = rng::substream(seed, &[rng::tag::TASK]);

    let mut terms: Vec<TokenId> = (0..cfg.vocab_size).collect();
    terms.shuffle(&mut rng);
    let mut pool = terms.into_iter();
    let mut take = |n: usize| -> Vec<TokenId> { pool.by_ref().take(n).collect() };

    let per_query: Vec<(Vec<TokenId>, Vec<TokenId>)> =
        (0..cfg.n_queries).map(|_| (take(cfg.query_terms), take(cfg.bridge_terms))).collect();
    let noise = take(cfg.noise_terms);

    // (owning query or None for noise, is_relevant, tokens)
    let mut raw: Vec<(Option<usize>, bool, Vec<TokenId>)> = Vec::new();
    for (qi, (qterms, bridges)) in per_query.iter().enumerate() {
        for &a in qterms {
            for &b in bridges {
                let mut toks = vec![a, b];
                toks.extend((0..cfg.filler_per_doc).map(|_| *noise.choose(&mut rng).expect("noise terms")));
                raw.push((Some(qi), false, toks));
            }
        }
        let rel: Vec<TokenId> =
            bridges.iter().flat_map(|&b| std::iter::repeat_n(b, cfg.relevant_tf)).collect();
        raw.push((Some(qi), true, rel));
    }
    for _ in 0..cfg.noise_docs {
        let len = cfg.filler_per_doc.max(1) + 1;
        raw.push((None, false, (0..len).map(|_| *noise.choose(&mut rng).expect("noise terms")).collect()));
    }
    raw.shuffle(&mut rng);

    let mut docs = BTreeMap::new();
    let mut qrels = Qrels::new();
    let mut relevant: Vec<Vec<DocId>> = vec![Vec::new(); cfg.n_queries];
    for (id, (owner, is_rel, toks)) in raw.into_iter().enumerate() {
        let id = id as DocId;
        if let (Some(qi), true) = (owner, is_rel) {
            qrels.insert(qi as QueryId, id, 1);
            relevant[qi].push(id);
        }
        docs.insert(id, toks);
    }
    let queries = per_query
        .iter()
        .enumerate()
        .map(|(qi, (qterms, _))| (qi as QueryId, qterms.clone()))
        .collect();
    let task = Task { vocab: Vocab::new(cfg.vocab_size), corpus: Corpus::new(docs), qrels, queries };
    let env = RetrievalEnv::new(task, *env_cfg)?;

    let mut checks = Vec::with_capacity(cfg.n_queries);
    for (qi, (_, bridges)) in per_query.iter().enumerate() {
        let qid = qi as QueryId;
        let (_, round0) = env.reset(qid)?;
        let oracle = env.reward(qid, &env.rank(&env.retrieval_query(qid, bridges)?)?);
        let check = QueryCheck {
            query_id: qid,
            bridge_terms: bridges.clone(),
            relevant_docs: relevant[qi].clone(),
            round0_reward: round0,
            oracle_reward: oracle,
            gap: oracle - round0,
        };
        check_query(&check, cfg.min_gap)?;
        checks.push(check);
    }
    let manifest = Manifest {
        seed,
        vocab_size: cfg.vocab_size,
        task: cfg.clone(),
        env: *env_cfg,
        queries: checks,
        passed: true,
    };
    Ok((env.task, manifest))
}
