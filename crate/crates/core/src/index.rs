//! A pruned, clustered inverted index over a sparse collection.
//!
//! Each token's posting list is sorted by weight descending (impact
//! order) and truncated to the `max_postings` highest-impact documents.
//! The survivors are grouped into blocks by k-means over their full
//! document vectors, and each block carries a summary: the
//! coordinate-wise maximum of its documents, pruned to the
//! heaviest coordinates holding an `alpha` fraction of its L1 mass.
//! `dot(query, summary)` then upper-bounds the score of every document
//! in the block, which is what makes block skipping at search time safe
//! when `alpha` is 1.
//!
//! The forward collection rides along inside the index so blocks can be
//! rescored exactly.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::ioutil;
use crate::sparse::{Collection, SparseVector, TokenId};

const INDEX_MAGIC: [u8; 4] = *b"LSRI";
const INDEX_VERSION: u32 = 1;

/// How many k-means assignment rounds each posting list gets.
const CLUSTER_ROUNDS: usize = 3;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("max_postings must be at least 1")]
    ZeroMaxPostings,
    #[error("alpha is {0}, must lie in (0, 1]")]
    AlphaOutOfRange(f32),
    #[error("centroid_fraction is {0}, must lie in (0, 1]")]
    CentroidFractionOutOfRange(f32),
}

/// Index construction knobs.
///
/// `seed` is carried in the configuration and the file header for
/// forward compatibility; the current clustering initializer is
/// deterministic and does not consume it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig {
    /// Posting-list truncation depth: each list keeps only its
    /// top-weighted entries up to this count.
    pub max_postings: u32,
    /// Fraction of summary L1 mass kept after pruning.
    pub alpha: f32,
    /// Blocks per posting list, as a fraction of its length (rounded up).
    pub centroid_fraction: f32,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { max_postings: 4000, alpha: 0.4, centroid_fraction: 0.1, seed: 42 }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.max_postings == 0 {
            return Err(IndexError::ZeroMaxPostings);
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(IndexError::AlphaOutOfRange(self.alpha));
        }
        if !(self.centroid_fraction > 0.0 && self.centroid_fraction <= 1.0) {
            return Err(IndexError::CentroidFractionOutOfRange(self.centroid_fraction));
        }
        Ok(())
    }
}

/// One cluster of a posting list: its document ids (ascending) and the
/// pruned coordinate-max summary used for upper-bound pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    doc_ids: Vec<u32>,
    summary: SparseVector,
}

impl Block {
    pub fn doc_ids(&self) -> &[u32] {
        &self.doc_ids
    }

    pub fn summary(&self) -> &SparseVector {
        &self.summary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostingList {
    token_id: TokenId,
    blocks: Vec<Block>,
}

impl PostingList {
    pub fn token_id(&self) -> TokenId {
        self.token_id
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_postings(&self) -> usize {
        self.blocks.iter().map(|b| b.doc_ids.len()).sum()
    }
}

/// The forward collection flattened into contiguous arrays so block
/// rescoring streams through memory instead of chasing one allocation
/// per document.
#[derive(Debug, Clone, PartialEq)]
struct PackedForward {
    offsets: Vec<u64>,
    tokens: Vec<TokenId>,
    weights: Vec<f64>,
}

impl PackedForward {
    fn from_collection(collection: &Collection) -> Self {
        let total: usize = collection.iter().map(SparseVector::nnz).sum();
        let mut offsets = Vec::with_capacity(collection.n_docs() + 1);
        let mut tokens = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        offsets.push(0);
        for doc in collection.iter() {
            for &(t, w) in doc.entries() {
                tokens.push(t);
                weights.push(w);
            }
            offsets.push(tokens.len() as u64);
        }
        PackedForward { offsets, tokens, weights }
    }

    #[inline]
    fn score(&self, doc: u32, dense_query: &[f64]) -> f64 {
        let lo = self.offsets[doc as usize] as usize;
        let hi = self.offsets[doc as usize + 1] as usize;
        let mut acc = 0.0;
        for (t, w) in self.tokens[lo..hi].iter().zip(&self.weights[lo..hi]) {
            acc += dense_query[*t as usize] * w;
        }
        acc
    }
}

/// A posting list's block summaries inverted by token: for each token
/// appearing in any summary, the blocks that carry it and their summary
/// weights. Upper-bounding every block against a query then costs one
/// scatter-add pass per query token instead of one scan per summary,
/// which is what makes the bound phase cheap for long lists.
#[derive(Debug, Clone, PartialEq)]
struct SummaryIndex {
    tokens: Vec<TokenId>,
    offsets: Vec<u32>,
    blocks: Vec<u32>,
    weights: Vec<f64>,
}

impl SummaryIndex {
    fn from_blocks(blocks: &[Block]) -> Self {
        let mut entries: Vec<(TokenId, u32, f64)> = Vec::new();
        for (bi, block) in blocks.iter().enumerate() {
            for &(t, w) in block.summary.entries() {
                entries.push((t, bi as u32, w));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut tokens = Vec::new();
        let mut offsets = Vec::new();
        let mut block_ids = Vec::with_capacity(entries.len());
        let mut weights = Vec::with_capacity(entries.len());
        for (t, b, w) in entries {
            if tokens.last() != Some(&t) {
                tokens.push(t);
                offsets.push(block_ids.len() as u32);
            }
            block_ids.push(b);
            weights.push(w);
        }
        offsets.push(block_ids.len() as u32);
        SummaryIndex { tokens, offsets, blocks: block_ids, weights }
    }

    fn postings(&self, token: TokenId) -> Option<(&[u32], &[f64])> {
        let i = self.tokens.binary_search(&token).ok()?;
        let lo = self.offsets[i] as usize;
        let hi = self.offsets[i + 1] as usize;
        Some((&self.blocks[lo..hi], &self.weights[lo..hi]))
    }
}

/// The searchable index: blocked posting lists plus the forward
/// collection they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    config: BuildConfig,
    lists: Vec<PostingList>,
    summaries: Vec<SummaryIndex>,
    forward: Collection,
    packed: PackedForward,
}

impl InvertedIndex {
    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn forward(&self) -> &Collection {
        &self.forward
    }

    pub fn n_lists(&self) -> usize {
        self.lists.len()
    }

    pub fn lists(&self) -> impl Iterator<Item = &PostingList> {
        self.lists.iter()
    }

    pub fn list(&self, token: TokenId) -> Option<&PostingList> {
        self.lists
            .binary_search_by_key(&token, |l| l.token_id)
            .ok()
            .map(|i| &self.lists[i])
    }

    /// Exact query-document score through the flattened forward arrays.
    /// `dense_query` must span the collection's vocabulary.
    pub(crate) fn score_doc(&self, doc: u32, dense_query: &[f64]) -> f64 {
        self.packed.score(doc, dense_query)
    }

    /// Position of a token's posting list, if it has one.
    pub(crate) fn list_position(&self, token: TokenId) -> Option<usize> {
        self.lists.binary_search_by_key(&token, |l| l.token_id).ok()
    }

    pub(crate) fn list_at(&self, position: usize) -> &PostingList {
        &self.lists[position]
    }

    /// Fills `bounds` with `dot(query, summary)` for every block of the
    /// list at `position`, accumulating in ascending query-token order.
    pub(crate) fn block_bounds(
        &self,
        position: usize,
        query: &[(TokenId, f64)],
        bounds: &mut Vec<f64>,
    ) {
        bounds.clear();
        bounds.resize(self.lists[position].blocks.len(), 0.0);
        let sx = &self.summaries[position];
        for &(t, qw) in query {
            if let Some((blocks, weights)) = sx.postings(t) {
                for (b, w) in blocks.iter().zip(weights) {
                    bounds[*b as usize] += qw * w;
                }
            }
        }
    }

    pub fn stats(&self) -> IndexStats {
        let mut n_blocks = 0;
        let mut total_postings = 0;
        let mut summary_nnz = 0;
        let mut kept_mass = 0.0;
        let mut full_mass = 0.0;
        let mut serialized_bytes = 24; // magic + version + config
        for list in &self.lists {
            serialized_bytes += 8; // token_id + n_blocks
            for block in &list.blocks {
                n_blocks += 1;
                total_postings += block.doc_ids.len();
                summary_nnz += block.summary.nnz();
                kept_mass += block.summary.l1_norm();
                let docs: Vec<&SparseVector> =
                    block.doc_ids.iter().map(|&d| self.forward.doc(d as usize)).collect();
                full_mass += coordinate_max(&docs).iter().map(|&(_, w)| w).sum::<f64>();
                serialized_bytes += 4 + 4 * block.doc_ids.len(); // n_docs + ids
                serialized_bytes += 4 + 8 * block.summary.nnz(); // nnz + ids + weights
            }
        }
        IndexStats {
            n_lists: self.lists.len(),
            total_postings,
            n_blocks,
            summary_nnz,
            summary_mass_retained: if full_mass > 0.0 { kept_mass / full_mass } else { 1.0 },
            serialized_bytes,
        }
    }
}

/// Shape report for a built index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexStats {
    pub n_lists: usize,
    pub total_postings: usize,
    pub n_blocks: usize,
    pub summary_nnz: usize,
    /// Σ L1(pruned summary) / Σ L1(unpruned coordinate max), over all
    /// blocks. 1.0 when alpha = 1.
    pub summary_mass_retained: f64,
    pub serialized_bytes: usize,
}

impl std::fmt::Display for IndexStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "lists={} postings={} blocks={} summary_nnz={} summary_mass={:.4} bytes={}",
            self.n_lists,
            self.total_postings,
            self.n_blocks,
            self.summary_nnz,
            self.summary_mass_retained,
            self.serialized_bytes
        )
    }
}

/// Builds the index, consuming the collection (it becomes the forward
/// index). Posting lists are built independently per token, in
/// parallel; the result does not depend on the number of worker
/// threads.
pub fn build_index(collection: Collection, config: BuildConfig) -> Result<InvertedIndex, IndexError> {
    config.validate()?;

    let mut raw: Vec<Vec<(f64, u32)>> = vec![Vec::new(); collection.vocab_size() as usize];
    for (doc_id, doc) in collection.iter().enumerate() {
        for &(t, w) in doc.entries() {
            raw[t as usize].push((w, doc_id as u32));
        }
    }

    let nonempty: Vec<(TokenId, Vec<(f64, u32)>)> = raw
        .into_iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(t, l)| (t as TokenId, l))
        .collect();

    let lists: Vec<PostingList> = nonempty
        .into_par_iter()
        .map(|(token_id, mut postings)| {
            postings.sort_unstable_by(|a, b| impact_order(*a, *b));
            postings.truncate(config.max_postings as usize);
            let docs: Vec<&SparseVector> =
                postings.iter().map(|&(_, d)| collection.doc(d as usize)).collect();
            let n_centroids =
                (config.centroid_fraction as f64 * docs.len() as f64).ceil() as usize;
            let groups = cluster_postings(&docs, n_centroids, config.seed);
            let blocks = groups
                .into_iter()
                .map(|group| {
                    let mut doc_ids: Vec<u32> = group.iter().map(|&i| postings[i].1).collect();
                    doc_ids.sort_unstable();
                    let members: Vec<&SparseVector> = group.iter().map(|&i| docs[i]).collect();
                    let summary = build_summary(&members, config.alpha as f64);
                    Block { doc_ids, summary }
                })
                .collect();
            PostingList { token_id, blocks }
        })
        .collect();

    let summaries = lists.iter().map(|l| SummaryIndex::from_blocks(&l.blocks)).collect();
    let packed = PackedForward::from_collection(&collection);
    Ok(InvertedIndex { config, lists, summaries, forward: collection, packed })
}

fn impact_order(a: (f64, u32), b: (f64, u32)) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1))
}

/// Groups posting-list documents into at most `n_centroids` clusters by
/// spherical-free k-means on dot product similarity.
///
/// Centroids start as the first `n_centroids` documents (the list is in
/// impact order, so these are the heaviest postings), followed by
/// [`CLUSTER_ROUNDS`] rounds of assign/update. Ties in assignment go to
/// the lower centroid index, and clusters emptied by an assignment
/// round are refilled with the point least similar to its current
/// centroid, so every returned group is non-empty. The whole procedure
/// is deterministic.
pub fn cluster_postings(
    docs: &[&SparseVector],
    n_centroids: usize,
    _seed: u64,
) -> Vec<Vec<usize>> {
    let n = docs.len();
    let c = n_centroids.clamp(1, n.max(1));
    if n == 0 {
        return Vec::new();
    }
    if c == n {
        return (0..n).map(|i| vec![i]).collect();
    }
    if c == 1 {
        return vec![(0..n).collect()];
    }

    let mut centroids: Vec<Vec<(TokenId, f64)>> =
        docs[..c].iter().map(|d| d.entries().to_vec()).collect();
    let mut assignment = vec![0u32; n];
    let mut similarity = vec![0.0f64; n];

    for round in 0..CLUSTER_ROUNDS {
        // Invert the centroids so each document only touches the
        // centroids it shares a token with.
        let mut by_token: HashMap<TokenId, Vec<(u32, f64)>> = HashMap::new();
        for (ci, centroid) in centroids.iter().enumerate() {
            for &(t, w) in centroid {
                by_token.entry(t).or_default().push((ci as u32, w));
            }
        }

        let mut scores = vec![0.0f64; c];
        for (i, doc) in docs.iter().enumerate() {
            let mut touched: Vec<u32> = Vec::new();
            for &(t, w) in doc.entries() {
                if let Some(cands) = by_token.get(&t) {
                    for &(ci, cw) in cands {
                        if scores[ci as usize] == 0.0 {
                            touched.push(ci);
                        }
                        scores[ci as usize] += w * cw;
                    }
                }
            }
            let mut best = 0u32;
            let mut best_score = scores[0];
            for ci in 1..c as u32 {
                if scores[ci as usize] > best_score {
                    best = ci;
                    best_score = scores[ci as usize];
                }
            }
            assignment[i] = best;
            similarity[i] = best_score;
            for ci in touched {
                scores[ci as usize] = 0.0;
            }
        }

        let mut sizes = vec![0usize; c];
        for &a in &assignment {
            sizes[a as usize] += 1;
        }
        for empty in 0..c {
            if sizes[empty] > 0 {
                continue;
            }
            let mut pick: Option<usize> = None;
            for i in 0..n {
                if sizes[assignment[i] as usize] < 2 {
                    continue;
                }
                if pick.is_none_or(|p| similarity[i] < similarity[p]) {
                    pick = Some(i);
                }
            }
            if let Some(i) = pick {
                sizes[assignment[i] as usize] -= 1;
                assignment[i] = empty as u32;
                sizes[empty] += 1;
            }
        }

        if round + 1 < CLUSTER_ROUNDS {
            let mut sums: Vec<HashMap<TokenId, f64>> = vec![HashMap::new(); c];
            for (i, doc) in docs.iter().enumerate() {
                let sum = &mut sums[assignment[i] as usize];
                for &(t, w) in doc.entries() {
                    *sum.entry(t).or_insert(0.0) += w;
                }
            }
            for ci in 0..c {
                let size = sizes[ci] as f64;
                let mut mean: Vec<(TokenId, f64)> =
                    sums[ci].iter().map(|(&t, &w)| (t, w / size)).collect();
                mean.sort_unstable_by_key(|&(t, _)| t);
                centroids[ci] = mean;
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &a) in assignment.iter().enumerate() {
        groups[a as usize].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn coordinate_max(docs: &[&SparseVector]) -> Vec<(TokenId, f64)> {
    let mut max: HashMap<TokenId, f64> = HashMap::new();
    for doc in docs {
        for &(t, w) in doc.entries() {
            let slot = max.entry(t).or_insert(0.0);
            if w > *slot {
                *slot = w;
            }
        }
    }
    let mut entries: Vec<(TokenId, f64)> = max.into_iter().collect();
    entries.sort_unstable_by_key(|&(t, _)| t);
    entries
}

/// Coordinate-wise maximum of the documents, pruned to the smallest set
/// of heaviest coordinates whose L1 mass reaches `alpha` times the
/// maximum vector's. With `alpha` = 1 the full maximum comes back and
/// the summary is an exact upper bound for every member document.
pub fn build_summary(docs: &[&SparseVector], alpha: f64) -> SparseVector {
    let full = coordinate_max(docs);
    let total: f64 = full.iter().map(|&(_, w)| w).sum();
    let target = alpha * total;

    let mut by_weight = full;
    by_weight.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for (t, w) in by_weight {
        if mass >= target && !kept.is_empty() {
            break;
        }
        kept.push((t, w));
        mass += w;
    }
    kept.sort_unstable_by_key(|&(t, _)| t);
    SparseVector::from_sorted(kept)
}

#[derive(Debug, Error)]
pub enum IndexIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("invalid build configuration: {0}")]
    BadConfig(#[from] IndexError),
    #[error("truncated posting list for token {token}")]
    Truncated { token: TokenId },
    #[error("posting-list token ids not strictly increasing at token {token}")]
    TokenOrder { token: TokenId },
    #[error("token {token} out of range (vocab_size {vocab_size})")]
    TokenOutOfRange { token: TokenId, vocab_size: u32 },
    #[error("token {token}: posting list has no blocks")]
    EmptyList { token: TokenId },
    #[error("token {token}: block {block} is empty")]
    EmptyBlock { token: TokenId, block: usize },
    #[error("token {token}: doc ids not strictly increasing in block {block}")]
    DocOrder { token: TokenId, block: usize },
    #[error("token {token}: doc id {doc} beyond collection of {n_docs} docs")]
    DocOutOfRange { token: TokenId, doc: u32, n_docs: usize },
    #[error("token {token}: invalid summary in block {block}: {msg}")]
    BadSummary { token: TokenId, block: usize, msg: String },
}

/// Serializes the index (forward collection excluded; it travels as its
/// own file).
///
/// Summary weights narrow to `f32` here. When a weight is not exactly
/// representable it rounds up to the next `f32`, so a reloaded summary
/// never underestimates an upper bound and pruning stays safe.
pub fn write_index(index: &InvertedIndex, path: &Path) -> Result<(), IndexIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&INDEX_MAGIC)?;
    ioutil::write_u32(&mut w, INDEX_VERSION)?;
    ioutil::write_u32(&mut w, index.config.max_postings)?;
    ioutil::write_f32(&mut w, index.config.alpha)?;
    ioutil::write_f32(&mut w, index.config.centroid_fraction)?;
    ioutil::write_u64(&mut w, index.config.seed)?;
    for list in &index.lists {
        ioutil::write_u32(&mut w, list.token_id)?;
        ioutil::write_u32(&mut w, list.blocks.len() as u32)?;
        for block in &list.blocks {
            ioutil::write_u32(&mut w, block.doc_ids.len() as u32)?;
            for &d in &block.doc_ids {
                ioutil::write_u32(&mut w, d)?;
            }
            ioutil::write_u32(&mut w, block.summary.nnz() as u32)?;
            for &(t, _) in block.summary.entries() {
                ioutil::write_u32(&mut w, t)?;
            }
            for &(_, weight) in block.summary.entries() {
                ioutil::write_f32(&mut w, f32_round_up(weight))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Narrows to f32, rounding toward positive infinity when the value
/// falls between representable numbers.
fn f32_round_up(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) < x {
        f.next_up()
    } else {
        f
    }
}

/// Reads an index written by [`write_index`] and reattaches the forward
/// collection it was built from.
pub fn read_index(path: &Path, forward: Collection) -> Result<InvertedIndex, IndexIoError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = |what: &str| IndexIoError::Header(what.to_string());
    let magic = ioutil::read_magic(&mut r).map_err(|_| header("file too short for magic"))?;
    if magic != INDEX_MAGIC {
        return Err(header("expected magic \"LSRI\""));
    }
    let version = ioutil::read_u32(&mut r).map_err(|_| header("missing version"))?;
    if version != INDEX_VERSION {
        return Err(IndexIoError::Header(format!("unsupported version {version}")));
    }
    let max_postings = ioutil::read_u32(&mut r).map_err(|_| header("missing max_postings"))?;
    let alpha = ioutil::read_f32(&mut r).map_err(|_| header("missing alpha"))?;
    let centroid_fraction =
        ioutil::read_f32(&mut r).map_err(|_| header("missing centroid_fraction"))?;
    let seed = ioutil::read_u64(&mut r).map_err(|_| header("missing seed"))?;
    let config = BuildConfig { max_postings, alpha, centroid_fraction, seed };
    config.validate()?;

    let n_docs = forward.n_docs();
    let vocab_size = forward.vocab_size();
    let mut lists: Vec<PostingList> = Vec::new();
    loop {
        let token = match ioutil::read_u32_or_eof(&mut r)? {
            None => break,
            Some(t) => t,
        };
        if token >= vocab_size {
            return Err(IndexIoError::TokenOutOfRange { token, vocab_size });
        }
        if lists.last().is_some_and(|l| l.token_id >= token) {
            return Err(IndexIoError::TokenOrder { token });
        }
        let truncated = |e: io::Error| match e.kind() {
            io::ErrorKind::UnexpectedEof => IndexIoError::Truncated { token },
            _ => IndexIoError::Io(e),
        };
        let n_blocks = ioutil::read_u32(&mut r).map_err(truncated)? as usize;
        if n_blocks == 0 {
            return Err(IndexIoError::EmptyList { token });
        }
        let mut blocks = Vec::with_capacity(n_blocks);
        for bi in 0..n_blocks {
            let n = ioutil::read_u32(&mut r).map_err(truncated)? as usize;
            if n == 0 {
                return Err(IndexIoError::EmptyBlock { token, block: bi });
            }
            let mut doc_ids = Vec::with_capacity(n);
            for _ in 0..n {
                doc_ids.push(ioutil::read_u32(&mut r).map_err(truncated)?);
            }
            if doc_ids.windows(2).any(|p| p[0] >= p[1]) {
                return Err(IndexIoError::DocOrder { token, block: bi });
            }
            let top = *doc_ids.last().unwrap();
            if top as usize >= n_docs {
                return Err(IndexIoError::DocOutOfRange { token, doc: top, n_docs });
            }
            let nnz = ioutil::read_u32(&mut r).map_err(truncated)? as usize;
            let bad_summary = |msg: &str| IndexIoError::BadSummary {
                token,
                block: bi,
                msg: msg.to_string(),
            };
            if nnz == 0 {
                return Err(bad_summary("no entries"));
            }
            let mut ids = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                ids.push(ioutil::read_u32(&mut r).map_err(truncated)?);
            }
            if ids.windows(2).any(|p| p[0] >= p[1]) {
                return Err(bad_summary("token ids not strictly increasing"));
            }
            if *ids.last().unwrap() >= vocab_size {
                return Err(bad_summary("token id beyond vocab"));
            }
            let mut entries = Vec::with_capacity(nnz);
            for id in ids {
                let weight = ioutil::read_f32(&mut r).map_err(truncated)?;
                if !weight.is_finite() {
                    return Err(bad_summary("non-finite weight"));
                }
                if weight <= 0.0 {
                    return Err(bad_summary("non-positive weight"));
                }
                entries.push((id, f64::from(weight)));
            }
            blocks.push(Block { doc_ids, summary: SparseVector::from_sorted(entries) });
        }
        lists.push(PostingList { token_id: token, blocks });
    }
    let summaries = lists.iter().map(|l| SummaryIndex::from_blocks(&l.blocks)).collect();
    let packed = PackedForward::from_collection(&forward);
    Ok(InvertedIndex { config, lists, summaries, forward, packed })
}
