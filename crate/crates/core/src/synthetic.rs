//! Deterministic synthetic data for tests and benchmarks.
//!
//! Collections draw token ids from a Zipf distribution so a few tokens
//! own long posting lists while the tail stays sparse, roughly the
//! shape a learned encoder produces on real text. All generators are
//! pure functions of their seed.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Zipf};

use crate::encoder::{EmbeddingMatrix, TokenSequence};
use crate::sparse::{Collection, SparseVector, TokenId};

const ZIPF_EXPONENT: f64 = 1.07;

fn zipf_vector(
    rng: &mut ChaCha8Rng,
    zipf: &Zipf<f64>,
    weights: &LogNormal<f64>,
    nnz: usize,
) -> SparseVector {
    let mut ids: BTreeSet<TokenId> = BTreeSet::new();
    let mut attempts = 0usize;
    while ids.len() < nnz && attempts < nnz * 50 {
        ids.insert(rng.sample(zipf) as TokenId - 1);
        attempts += 1;
    }
    let entries = ids
        .into_iter()
        .map(|t| (t, f64::from(rng.sample(weights) as f32)))
        .collect();
    SparseVector::from_sorted(entries)
}

/// A collection of `n_docs` sparse vectors whose token ids follow a
/// Zipf law over the vocabulary and whose per-document size is uniform
/// in `[avg_nnz/2, 3·avg_nnz/2]`. Weights are log-normal, rounded to
/// f32 so the vectors survive serialization unchanged.
pub fn zipf_collection(n_docs: usize, vocab_size: u32, avg_nnz: usize, seed: u64) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(u64::from(vocab_size), ZIPF_EXPONENT).unwrap();
    let weights = LogNormal::new(0.0, 0.5).unwrap();
    let lo = (avg_nnz / 2).max(1);
    let hi = avg_nnz + avg_nnz / 2;
    let docs = (0..n_docs)
        .map(|_| {
            let nnz = rng.gen_range(lo..=hi);
            zipf_vector(&mut rng, &zipf, &weights, nnz)
        })
        .collect();
    Collection::new(docs, vocab_size).expect("generated docs are valid")
}

/// Query vectors drawn from the same Zipf law, `min_terms..=max_terms`
/// entries each, so they overlap the collection's frequent tokens.
pub fn zipf_queries(
    n: usize,
    vocab_size: u32,
    min_terms: usize,
    max_terms: usize,
    seed: u64,
) -> Vec<SparseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(u64::from(vocab_size), ZIPF_EXPONENT).unwrap();
    let weights = LogNormal::new(0.0, 0.5).unwrap();
    (0..n)
        .map(|_| {
            let nnz = rng.gen_range(min_terms..=max_terms);
            zipf_vector(&mut rng, &zipf, &weights, nnz)
        })
        .collect()
}

/// An embedding matrix with entries uniform in [-1, 1].
pub fn random_embeddings(vocab_size: u32, dim: u32, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..vocab_size as usize * dim as usize)
        .map(|_| rng.gen_range(-1.0f32..1.0))
        .collect();
    EmbeddingMatrix::new(vocab_size, dim, data).expect("generated entries are finite")
}

/// Token sequences with lengths uniform in `min_len..=max_len` and ids
/// uniform over the vocabulary; repeats are possible and intended.
pub fn random_token_queries(
    n: usize,
    vocab_size: u32,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(min_len..=max_len);
            TokenSequence::new((0..len).map(|_| rng.gen_range(0..vocab_size)).collect())
        })
        .collect()
}

/// Sparse documents with ids uniform over the vocabulary (no Zipf
/// skew) and log-normal weights, f32-rounded.
pub fn random_docs(
    n: usize,
    vocab_size: u32,
    min_nnz: usize,
    max_nnz: usize,
    seed: u64,
) -> Vec<SparseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = LogNormal::new(0.0, 0.5).unwrap();
    (0..n)
        .map(|_| {
            let nnz = rng.gen_range(min_nnz..=max_nnz).min(vocab_size as usize);
            let ids = rand::seq::index::sample(&mut rng, vocab_size as usize, nnz);
            let mut entries: Vec<(TokenId, f64)> = ids
                .iter()
                .map(|t| (t as TokenId, f64::from(rng.sample(weights) as f32)))
                .collect();
            entries.sort_unstable_by_key(|&(t, _)| t);
            SparseVector::from_sorted(entries)
        })
        .collect()
}
