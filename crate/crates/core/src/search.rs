//! Exhaustive and approximate top-k retrieval.
//!
//! Approximate search bounds every block of the query's posting lists
//! with `dot(query, summary)`, then rescores blocks in decreasing bound
//! order. The moment the best remaining bound, scaled by `heap_factor`,
//! cannot beat the current k-th best score, every later block is
//! provably hopeless too and the scan stops. Rescoring goes through the
//! forward index, so every returned score is a true dot product; the
//! approximation only affects which documents get considered. With
//! `alpha` = 1, `heap_factor` = 1, no posting truncation, and the full
//! query, the bounds are admissible and the result matches exhaustive
//! search exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use thiserror::Error;

use crate::index::InvertedIndex;
use crate::sparse::{Collection, SparseVector, TokenId};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("heap_factor is {0}, must lie in (0, 1]")]
    HeapFactorOutOfRange(f64),
    #[error("cannot benchmark an empty query set")]
    EmptyQuerySet,
}

/// Approximate-search knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub k: usize,
    /// Number of highest-weight query tokens whose posting lists are
    /// visited; 0 means all of them.
    pub query_cut: usize,
    /// Scales summary upper bounds before comparing against the k-th
    /// best score. 1.0 never skips a block that could matter; lower
    /// values prune harder and may miss documents.
    pub heap_factor: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { k: 10, query_cut: 0, heap_factor: 1.0 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.k == 0 {
            return Err(SearchError::ZeroK);
        }
        if !(self.heap_factor > 0.0 && self.heap_factor <= 1.0) {
            return Err(SearchError::HeapFactorOutOfRange(self.heap_factor));
        }
        Ok(())
    }
}

/// Ranked hits, best first. Ties in score order by ascending doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    hits: Vec<(u32, f64)>,
}

impl TopKResult {
    pub fn hits(&self) -> &[(u32, f64)] {
        &self.hits
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.hits.iter().map(|&(d, _)| d)
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Max-heap entry ordered so the root is the worst kept hit: lowest
/// score, then highest doc id.
struct HeapEntry {
    score: f64,
    doc: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score && self.doc == other.doc
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .partial_cmp(&self.score)
            .unwrap()
            .then_with(|| self.doc.cmp(&other.doc))
    }
}

struct TopK {
    k: usize,
    heap: BinaryHeap<HeapEntry>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    fn push(&mut self, doc: u32, score: f64) {
        let entry = HeapEntry { score, doc };
        if self.heap.len() < self.k {
            self.heap.push(entry);
        } else if entry < *self.heap.peek().unwrap() {
            self.heap.pop();
            self.heap.push(entry);
        }
    }

    /// Score a candidate must beat to enter a full heap.
    fn threshold(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::NEG_INFINITY
        } else {
            self.heap.peek().unwrap().score
        }
    }

    fn into_result(self) -> TopKResult {
        let mut hits: Vec<(u32, f64)> =
            self.heap.into_iter().map(|e| (e.doc, e.score)).collect();
        hits.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
        });
        TopKResult { hits }
    }
}

fn densify(query: &SparseVector, vocab_size: u32) -> Vec<f64> {
    let mut dense = vec![0.0; vocab_size as usize];
    for &(t, w) in query.entries() {
        if t < vocab_size {
            dense[t as usize] = w;
        }
    }
    dense
}

fn score_against(dense_query: &[f64], doc: &SparseVector) -> f64 {
    let mut acc = 0.0;
    for &(t, w) in doc.entries() {
        acc += dense_query[t as usize] * w;
    }
    acc
}

/// Scores every document and returns the best k. Query tokens outside
/// the collection's vocabulary contribute nothing.
pub fn search_exhaustive(
    query: &SparseVector,
    collection: &Collection,
    k: usize,
) -> Result<TopKResult, SearchError> {
    if k == 0 {
        return Err(SearchError::ZeroK);
    }
    let dense = densify(query, collection.vocab_size());
    let mut top = TopK::new(k);
    for (doc_id, doc) in collection.iter().enumerate() {
        top.push(doc_id as u32, score_against(&dense, doc));
    }
    Ok(top.into_result())
}

/// Block-skipping search over the inverted index. Documents in blocks
/// that are never scored simply do not appear, so fewer than k hits can
/// come back on heavily pruned configurations.
pub fn search_approximate(
    query: &SparseVector,
    index: &InvertedIndex,
    params: &SearchParams,
) -> Result<TopKResult, SearchError> {
    params.validate()?;
    let forward = index.forward();
    let dense = densify(query, forward.vocab_size());

    let mut tokens: Vec<(TokenId, f64)> = query
        .entries()
        .iter()
        .copied()
        .filter(|&(t, _)| t < forward.vocab_size())
        .collect();
    tokens.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    if params.query_cut > 0 {
        tokens.truncate(params.query_cut);
    }

    // Entries are already in ascending token order, which fixes the
    // accumulation order of every block bound.
    let query_entries: Vec<(TokenId, f64)> = query
        .entries()
        .iter()
        .copied()
        .filter(|&(t, _)| t < forward.vocab_size())
        .collect();
    let mut candidates: Vec<(f64, &crate::index::Block)> = Vec::new();
    let mut bounds: Vec<f64> = Vec::new();
    for &(t, _) in &tokens {
        let Some(position) = index.list_position(t) else { continue };
        index.block_bounds(position, &query_entries, &mut bounds);
        let list = index.list_at(position);
        for (bi, &bound) in bounds.iter().enumerate() {
            if bound > 0.0 {
                candidates.push((bound, &list.blocks()[bi]));
            }
        }
    }
    candidates.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut top = TopK::new(params.k);
    let mut visited = vec![false; forward.n_docs()];
    for &(bound, block) in &candidates {
        if top.heap.len() >= params.k && bound * params.heap_factor <= top.threshold() {
            break;
        }
        for &doc_id in block.doc_ids() {
            if visited[doc_id as usize] {
                continue;
            }
            visited[doc_id as usize] = true;
            top.push(doc_id, index.score_doc(doc_id, &dense));
        }
    }
    Ok(top.into_result())
}

/// Mean fraction of exhaustive top-k ids the approximate search
/// recovers, over a query set.
pub fn recall_vs_exact(
    queries: &[SparseVector],
    index: &InvertedIndex,
    params: &SearchParams,
) -> Result<f64, SearchError> {
    if queries.is_empty() {
        return Err(SearchError::EmptyQuerySet);
    }
    params.validate()?;
    let mut total = 0.0;
    for query in queries {
        let exact = search_exhaustive(query, index.forward(), params.k)?;
        if exact.is_empty() {
            total += 1.0;
            continue;
        }
        let approx = search_approximate(query, index, params)?;
        let exact_ids: Vec<u32> = exact.doc_ids().collect();
        let found = approx.doc_ids().filter(|d| exact_ids.contains(d)).count();
        total += found as f64 / exact_ids.len() as f64;
    }
    Ok(total / queries.len() as f64)
}

/// Wall-clock timing for a batch of queries: one untimed warm-up pass,
/// then one timed pass, single-threaded.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    /// Average query time in microseconds.
    pub aqt_us: f64,
    pub total_us: f64,
    pub n_queries: usize,
}

/// Runs `search` over all queries twice (warm-up, then timed) and
/// averages the timed pass.
pub fn bench_aqt<F>(queries: &[SparseVector], mut search: F) -> Result<BenchResult, SearchError>
where
    F: FnMut(&SparseVector) -> TopKResult,
{
    if queries.is_empty() {
        return Err(SearchError::EmptyQuerySet);
    }
    for q in queries {
        std::hint::black_box(search(q));
    }
    let start = Instant::now();
    for q in queries {
        std::hint::black_box(search(q));
    }
    let total_us = start.elapsed().as_secs_f64() * 1e6;
    Ok(BenchResult { aqt_us: total_us / queries.len() as f64, total_us, n_queries: queries.len() })
}

pub fn bench_exhaustive(
    queries: &[SparseVector],
    collection: &Collection,
    k: usize,
) -> Result<BenchResult, SearchError> {
    if k == 0 {
        return Err(SearchError::ZeroK);
    }
    bench_aqt(queries, |q| search_exhaustive(q, collection, k).unwrap())
}

pub fn bench_approximate(
    queries: &[SparseVector],
    index: &InvertedIndex,
    params: &SearchParams,
) -> Result<BenchResult, SearchError> {
    params.validate()?;
    bench_aqt(queries, |q| search_approximate(q, index, params).unwrap())
}
