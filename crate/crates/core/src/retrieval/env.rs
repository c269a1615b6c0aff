use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bm25::{bm25_rank, Bm25Params};
use super::corpus::Corpus;
use super::ndcg::{ndcg_at_k, Qrels, NDCG_CUTOFF};
use crate::error::{Error, Result};
use crate::trajectory::{DocId, QueryId, TokenId, Trajectory};
use crate::vocab::Vocab;

/// How the summary is combined with the original query before retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryFusion {
    /// `q_0 ⊕ summary`.
    #[default]
    Concat,
    /// The summary alone (the bare query when the summary is empty).
    SummaryOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Documents returned to the agent per round.
    pub cutoff: usize,
    pub ndcg_k: usize,
    pub max_depth: usize,
    pub fusion: QueryFusion,
    pub bm25: Bm25Params,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            cutoff: 3,
            ndcg_k: NDCG_CUTOFF,
            max_depth: 5,
            fusion: QueryFusion::Concat,
            bm25: Bm25Params::default(),
        }
    }
}

/// Corpus, judgments and queries for one retrieval task.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub vocab: Vocab,
    pub corpus: Corpus,
    pub qrels: Qrels,
    pub queries: BTreeMap<QueryId, Vec<TokenId>>,
}

impl Task {
    pub fn query(&self, id: QueryId) -> Result<&[TokenId]> {
        self.queries.get(&id).map(Vec::as_slice).ok_or(Error::UnknownQuery(id))
    }

    pub fn query_ids(&self) -> Vec<QueryId> {
        self.queries.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeState {
    pub query_id: QueryId,
    /// `D_t`, best first.
    pub current_docs: Vec<DocId>,
    pub depth: usize,
    pub terminated: bool,
}

/// The fixed retriever wrapped as an episodic environment.
#[derive(Debug, Clone)]
pub struct RetrievalEnv {
    pub task: Task,
    pub config: EnvConfig,
}

impl RetrievalEnv {
    pub fn new(task: Task, config: EnvConfig) -> Result<Self> {
        if task.corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if config.cutoff == 0 || config.ndcg_k == 0 || config.max_depth == 0 {
            return Err(Error::InvalidConfig("cutoff, ndcg_k and max_depth must be positive".into()));
        }
        Ok(RetrievalEnv { task, config })
    }

    pub fn vocab(&self) -> Vocab {
        self.task.vocab
    }

    /// Query actually sent to the retriever for a given summary.
    pub fn retrieval_query(&self, query_id: QueryId, summary: &[TokenId]) -> Result<Vec<TokenId>> {
        let q0 = self.task.query(query_id)?;
        Ok(match self.config.fusion {
            QueryFusion::Concat => q0.iter().chain(summary).copied().collect(),
            QueryFusion::SummaryOnly if summary.is_empty() => q0.to_vec(),
            QueryFusion::SummaryOnly => summary.to_vec(),
        })
    }

    pub fn rank(&self, query: &[TokenId]) -> Result<Vec<DocId>> {
        bm25_rank(query, &self.task.corpus, self.config.cutoff, self.config.bm25)
    }

    pub fn reward(&self, query_id: QueryId, ranked: &[DocId]) -> f64 {
        ndcg_at_k(ranked, self.task.qrels.for_query(query_id), self.config.ndcg_k)
    }

    /// Initial state with `D_0` retrieved by the bare query, plus its reward.
    pub fn reset(&self, query_id: QueryId) -> Result<(EpisodeState, f64)> {
        let docs = self.rank(self.task.query(query_id)?)?;
        let reward = self.reward(query_id, &docs);
        Ok((EpisodeState { query_id, current_docs: docs, depth: 0, terminated: false }, reward))
    }

    /// Submits `summary` (content tokens only) and returns the next state and
    /// the summary's retrieval reward.
    pub fn step(&self, state: &EpisodeState, summary: &[TokenId]) -> Result<(EpisodeState, f64)> {
        if state.terminated {
            return Err(Error::EpisodeOver);
        }
        let query = self.retrieval_query(state.query_id, summary)?;
        let docs = self.rank(&query)?;
        let reward = self.reward(state.query_id, &docs);
        let depth = state.depth + 1;
        Ok((
            EpisodeState {
                query_id: state.query_id,
                current_docs: docs,
                depth,
                terminated: depth >= self.config.max_depth,
            },
            reward,
        ))
    }

    /// Recomputes `R(τ)` from the trajectory's final summary.
    pub fn episode_reward(&self, traj: &Trajectory) -> Result<f64> {
        let last = traj.steps.last().ok_or(Error::EmptyTrajectory)?;
        let summary = self.vocab().content(traj.segment_tokens(&last.summary));
        let docs = self.rank(&self.retrieval_query(traj.query_id, &summary)?)?;
        Ok(self.reward(traj.query_id, &docs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RetrievalEnv {
        let docs = [(0, vec![0, 1]), (1, vec![0, 2]), (2, vec![3, 3]), (3, vec![4])];
        let corpus = Corpus::new(docs.into_iter().collect());
        let mut qrels = Qrels::new();
        qrels.insert(7, 2, 1);
        let queries = [(7, vec![0])].into_iter().collect();
        let task = Task { vocab: Vocab::new(5), corpus, qrels, queries };
        RetrievalEnv::new(task, EnvConfig { cutoff: 2, max_depth: 2, ..EnvConfig::default() }).unwrap()
    }

    #[test]
    fn bridge_term_retrieves_relevant_doc() {
        let env = tiny();
        let (s0, r0) = env.reset(7).unwrap();
        assert_eq!(s0.current_docs, vec![0, 1]);
        assert_eq!(r0, 0.0);
        let (s1, r1) = env.step(&s0, &[3]).unwrap();
        assert_eq!(s1.current_docs[0], 2);
        assert_eq!(r1, 1.0);
        assert_eq!(s1.depth, 1);
        assert!(!s1.terminated);
    }

    #[test]
    fn empty_summary_matches_round_zero() {
        let env = tiny();
        let (s0, r0) = env.reset(7).unwrap();
        let (s1, r1) = env.step(&s0, &[]).unwrap();
        assert_eq!(s1.current_docs, s0.current_docs);
        assert_eq!(r1, r0);
    }

    #[test]
    fn stepping_past_max_depth_fails() {
        let env = tiny();
        let (s0, _) = env.reset(7).unwrap();
        let (s1, _) = env.step(&s0, &[1]).unwrap();
        let (s2, _) = env.step(&s1, &[1]).unwrap();
        assert!(s2.terminated);
        assert!(matches!(env.step(&s2, &[1]), Err(Error::EpisodeOver)));
    }

    #[test]
    fn summary_only_fusion() {
        let mut env = tiny();
        env.config.fusion = QueryFusion::SummaryOnly;
        assert_eq!(env.retrieval_query(7, &[3]).unwrap(), vec![3]);
        assert_eq!(env.retrieval_query(7, &[]).unwrap(), vec![0]);
        assert!(matches!(env.retrieval_query(8, &[]), Err(Error::UnknownQuery(8))));
    }
}
