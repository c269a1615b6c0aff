//! On-disk task formats.
//!
//! * `corpus.jsonl`: one `{"doc_id": u32, "token_ids": [u32, ...]}` per line.
//! * `queries.jsonl`: one `{"query_id": u32, "token_ids": [u32, ...]}` per line.
//! * `qrels.tsv`: `query_id<TAB>doc_id<TAB>relevance`, no header.
//! * `manifest.json`: generator self-check (synthetic tasks only).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::env::Task;
use super::ndcg::Qrels;
use super::synthetic::Manifest;
use crate::error::{Error, Result};
use crate::trajectory::{DocId, QueryId, TokenId};
use crate::vocab::Vocab;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const QUERIES_FILE: &str = "queries.jsonl";
pub const QRELS_FILE: &str = "qrels.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct DocLine {
    doc_id: DocId,
    token_ids: Vec<TokenId>,
}

#[derive(Serialize, Deserialize)]
struct QueryLine {
    query_id: QueryId,
    token_ids: Vec<TokenId>,
}

pub fn write_corpus<W: Write>(mut w: W, corpus: &Corpus) -> std::io::Result<()> {
    for (&doc_id, toks) in corpus.docs() {
        let line = serde_json::to_string(&DocLine { doc_id, token_ids: toks.clone() })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_queries<W: Write>(mut w: W, queries: &BTreeMap<QueryId, Vec<TokenId>>) -> std::io::Result<()> {
    for (&query_id, toks) in queries {
        let line = serde_json::to_string(&QueryLine { query_id, token_ids: toks.clone() })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_qrels<W: Write>(mut w: W, qrels: &Qrels) -> std::io::Result<()> {
    for (q, d, r) in qrels.iter() {
        writeln!(w, "{q}\t{d}\t{r}")?;
    }
    Ok(())
}

fn lines<'a, R: BufRead + 'a>(r: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    r.lines().enumerate().filter_map(move |(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::io(path, e))),
    })
}

fn parse_err(path: &Path, line: usize, msg: impl ToString) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.to_string() }
}

pub fn read_corpus<R: BufRead>(r: R, path: &Path) -> Result<Corpus> {
    let mut docs = BTreeMap::new();
    for item in lines(r, path) {
        let (n, line) = item?;
        let d: DocLine = serde_json::from_str(&line).map_err(|e| parse_err(path, n, e))?;
        if docs.insert(d.doc_id, d.token_ids).is_some() {
            return Err(parse_err(path, n, format!("duplicate doc_id {}", d.doc_id)));
        }
    }
    Ok(Corpus::new(docs))
}

pub fn read_queries<R: BufRead>(r: R, path: &Path) -> Result<BTreeMap<QueryId, Vec<TokenId>>> {
    let mut out = BTreeMap::new();
    for item in lines(r, path) {
        let (n, line) = item?;
        let q: QueryLine = serde_json::from_str(&line).map_err(|e| parse_err(path, n, e))?;
        if out.insert(q.query_id, q.token_ids).is_some() {
            return Err(parse_err(path, n, format!("duplicate query_id {}", q.query_id)));
        }
    }
    Ok(out)
}

pub fn read_qrels<R: BufRead>(r: R, path: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for item in lines(r, path) {
        let (n, line) = item?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err(path, n, format!("expected 3 tab-separated columns, found {}", cols.len())));
        }
        let q = cols[0].trim().parse().map_err(|e| parse_err(path, n, e))?;
        let d = cols[1].trim().parse().map_err(|e| parse_err(path, n, e))?;
        let r = cols[2].trim().parse().map_err(|e| parse_err(path, n, e))?;
        qrels.insert(q, d, r);
    }
    Ok(qrels)
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to `path` via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes the task files into memory, keyed by file name.
pub fn render_task(task: &Task, manifest: Option<&Manifest>) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut corpus = Vec::new();
    write_corpus(&mut corpus, &task.corpus).map_err(|e| Error::io(CORPUS_FILE, e))?;
    let mut queries = Vec::new();
    write_queries(&mut queries, &task.queries).map_err(|e| Error::io(QUERIES_FILE, e))?;
    let mut qrels = Vec::new();
    write_qrels(&mut qrels, &task.qrels).map_err(|e| Error::io(QRELS_FILE, e))?;
    let mut files = vec![(CORPUS_FILE, corpus), (QUERIES_FILE, queries), (QRELS_FILE, qrels)];
    if let Some(m) = manifest {
        let mut json = serde_json::to_vec_pretty(m)?;
        json.push(b'\n');
        files.push((MANIFEST_FILE, json));
    }
    Ok(files)
}

pub fn save_task(dir: &Path, task: &Task, manifest: Option<&Manifest>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in render_task(task, manifest)? {
        write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| parse_err(&path, 0, e))
}

/// Loads a task directory. The vocabulary size comes from the manifest when
/// present, otherwise from the largest term id seen.
pub fn load_task(dir: &Path) -> Result<Task> {
    let cp = dir.join(CORPUS_FILE);
    let corpus = read_corpus(open(&cp)?, &cp)?;
    let qp = dir.join(QUERIES_FILE);
    let queries = read_queries(open(&qp)?, &qp)?;
    let rp = dir.join(QRELS_FILE);
    let qrels = read_qrels(open(&rp)?, &rp)?;
    let n_terms = match load_manifest(dir)? {
        Some(m) => m.vocab_size,
        None => {
            let q_max = queries.values().flatten().copied().max();
            corpus.max_term().max(q_max).map_or(0, |t| t + 1)
        }
    };
    Ok(Task { vocab: Vocab::new(n_terms), corpus, qrels, queries })
}
