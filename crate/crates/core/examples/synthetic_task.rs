//! Generate the bridge-term task and show why one round of retrieval is
//! not enough.
//!
//! ```bash
//! cargo run --example synthetic_task -- 7
//! ```

use ricepo::retrieval::{generate_synthetic_task, EnvConfig, RetrievalEnv, TaskConfig};

fn main() -> ricepo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (task, manifest) = generate_synthetic_task(seed, &TaskConfig::default(), &EnvConfig::default())?;
    let env = RetrievalEnv::new(task, EnvConfig::default())?;
    manifest.verify(&env)?;

    println!("{} docs, {} queries, vocab {}", env.task.corpus.len(), manifest.queries.len(), manifest.vocab_size);
    for q in &manifest.queries {
        println!(
            "query {} {:?}: bare query {:.3}, with bridge terms {:?} {:.3}",
            q.query_id,
            env.task.query(q.query_id)?,
            q.round0_reward,
            q.bridge_terms,
            q.oracle_reward
        );
    }
    Ok(())
}
