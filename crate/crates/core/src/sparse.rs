//! Sparse vectors and document collections, plus their on-disk format.
//!
//! A [`SparseVector`] stores `(token_id, weight)` pairs sorted by strictly
//! increasing token id, with every weight strictly positive and finite.
//! A [`Collection`] is a sequence of such vectors over a shared vocabulary.
//!
//! Collections serialize to a little-endian binary format: the magic bytes
//! `LSRC`, a format version, `vocab_size`, `n_docs`, then per document the
//! entry count, the token ids, and the weights as `f32`.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::ioutil;

/// Index of a token in the vocabulary.
pub type TokenId = u32;

const COLLECTION_MAGIC: [u8; 4] = *b"LSRC";
const COLLECTION_VERSION: u32 = 1;

/// Bytes per stored posting: a 16-bit token id plus a 16-bit weight.
///
/// This is an accounting convention for reporting footprints, not the
/// layout of [`write_collection`], which keeps ids and weights at full
/// width. It is only honest while `vocab_size` fits in 16 bits.
pub const BYTES_PER_POSTING: usize = 4;

/// A sparse vector: `(token_id, weight)` pairs with strictly increasing
/// ids and strictly positive, finite weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(TokenId, f64)>,
}

impl SparseVector {
    /// Builds a vector from arbitrary pairs.
    ///
    /// Entries are sorted by token id, duplicate ids are combined by
    /// summing their weights, and entries whose combined weight is zero,
    /// negative, or non-finite are dropped.
    pub fn new(pairs: Vec<(TokenId, f64)>) -> Self {
        let mut sorted = pairs;
        sorted.sort_unstable_by_key(|&(id, _)| id);
        let mut entries: Vec<(TokenId, f64)> = Vec::with_capacity(sorted.len());
        for (id, w) in sorted {
            match entries.last_mut() {
                Some(last) if last.0 == id => last.1 += w,
                _ => entries.push((id, w)),
            }
        }
        entries.retain(|&(_, w)| w.is_finite() && w > 0.0);
        SparseVector { entries }
    }

    /// Wraps entries that already satisfy the invariants.
    ///
    /// Callers must pass strictly increasing ids and strictly positive,
    /// finite weights; this is only checked in debug builds.
    pub fn from_sorted(entries: Vec<(TokenId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w.is_finite() && w > 0.0));
        SparseVector { entries }
    }

    pub fn empty() -> Self {
        SparseVector { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(TokenId, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weight of `token`, or zero when the coordinate is absent.
    pub fn weight(&self, token: TokenId) -> f64 {
        match self.entries.binary_search_by_key(&token, |&(id, _)| id) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    /// Inner product with another sparse vector.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let a = &self.entries;
        let b = &other.entries;
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Sum of weights. Weights are positive, so no absolute values are
    /// taken.
    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }
}

/// Why a [`Collection`] could not be assembled in memory.
#[derive(Debug, Error)]
pub enum CollectionError {
    #[error("document {doc} is empty")]
    EmptyDoc { doc: usize },
    #[error("document {doc} has token id {id}, but vocab_size is {vocab_size}")]
    TokenOutOfRange { doc: usize, id: TokenId, vocab_size: u32 },
}

/// An ordered set of sparse document vectors over one vocabulary.
///
/// Document ids are positions: document `i` is the `i`-th vector. Every
/// token id in every document is below `vocab_size`, and no document is
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    vectors: Vec<SparseVector>,
    vocab_size: u32,
}

impl Collection {
    pub fn new(vectors: Vec<SparseVector>, vocab_size: u32) -> Result<Self, CollectionError> {
        for (doc, v) in vectors.iter().enumerate() {
            if v.is_empty() {
                return Err(CollectionError::EmptyDoc { doc });
            }
            let top = v.entries.last().unwrap().0;
            if top >= vocab_size {
                return Err(CollectionError::TokenOutOfRange { doc, id: top, vocab_size });
            }
        }
        Ok(Collection { vectors, vocab_size })
    }

    pub fn n_docs(&self) -> usize {
        self.vectors.len()
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn doc(&self, doc_id: usize) -> &SparseVector {
        &self.vectors[doc_id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &SparseVector> {
        self.vectors.iter()
    }

    pub fn stats(&self) -> CollectionStats {
        let total_nnz: usize = self.vectors.iter().map(SparseVector::nnz).sum();
        let n_docs = self.vectors.len();
        let avg_nnz = if n_docs == 0 { 0.0 } else { total_nnz as f64 / n_docs as f64 };
        CollectionStats {
            n_docs,
            total_nnz,
            avg_nnz,
            footprint_bytes: total_nnz * BYTES_PER_POSTING,
            vocab_size: self.vocab_size,
        }
    }
}

/// Size summary for a collection.
///
/// `footprint_bytes` charges [`BYTES_PER_POSTING`] bytes per stored entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    pub n_docs: usize,
    pub total_nnz: usize,
    pub avg_nnz: f64,
    pub footprint_bytes: usize,
    pub vocab_size: u32,
}

impl fmt::Display for CollectionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "docs={} total_nnz={} avg_nnz={:.2} footprint_bytes={} vocab_size={}",
            self.n_docs, self.total_nnz, self.avg_nnz, self.footprint_bytes, self.vocab_size
        )?;
        if self.vocab_size > u16::MAX as u32 + 1 {
            write!(f, " (vocab exceeds 16-bit ids; footprint is optimistic)")?;
        }
        Ok(())
    }
}

/// Why a collection file could not be read or written.
#[derive(Debug, Error)]
pub enum CollectionIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated payload in document {doc}")]
    Truncated { doc: usize },
    #[error("document {doc}: token ids not strictly increasing")]
    NonIncreasingIds { doc: usize },
    #[error("document {doc}: token id {id} out of range (vocab_size {vocab_size})")]
    TokenOutOfRange { doc: usize, id: TokenId, vocab_size: u32 },
    #[error("document {doc}: weight {weight} is not strictly positive")]
    NonPositiveWeight { doc: usize, weight: f32 },
    #[error("document {doc}: non-finite weight")]
    NonFiniteWeight { doc: usize },
    #[error("document {doc} has no entries")]
    EmptyDoc { doc: usize },
    #[error("trailing bytes after the last document")]
    TrailingBytes,
}

/// Writes a collection in the `LSRC` binary format.
///
/// Weights are stored as `f32`, so an in-memory weight that is not
/// exactly representable in single precision loses the excess bits here.
/// Collections that came from [`read_collection`] round-trip unchanged.
pub fn write_collection(collection: &Collection, path: &Path) -> Result<(), CollectionIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&COLLECTION_MAGIC)?;
    ioutil::write_u32(&mut w, COLLECTION_VERSION)?;
    ioutil::write_u32(&mut w, collection.vocab_size)?;
    ioutil::write_u32(&mut w, collection.vectors.len() as u32)?;
    for v in &collection.vectors {
        ioutil::write_u32(&mut w, v.nnz() as u32)?;
        for &(id, _) in v.entries() {
            ioutil::write_u32(&mut w, id)?;
        }
        for &(_, weight) in v.entries() {
            ioutil::write_f32(&mut w, weight as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a collection written by [`write_collection`], validating the
/// invariants as it goes.
pub fn read_collection(path: &Path) -> Result<Collection, CollectionIoError> {
    let mut r = BufReader::new(File::open(path)?);

    let header = |what: &str| CollectionIoError::Header(what.to_string());
    let magic = ioutil::read_magic(&mut r).map_err(|_| header("file too short for magic"))?;
    if magic != COLLECTION_MAGIC {
        return Err(header("expected magic \"LSRC\""));
    }
    let version = ioutil::read_u32(&mut r).map_err(|_| header("missing version"))?;
    if version != COLLECTION_VERSION {
        return Err(CollectionIoError::Header(format!("unsupported version {version}")));
    }
    let vocab_size = ioutil::read_u32(&mut r).map_err(|_| header("missing vocab_size"))?;
    let n_docs = ioutil::read_u32(&mut r).map_err(|_| header("missing n_docs"))? as usize;

    let mut vectors = Vec::with_capacity(n_docs);
    for doc in 0..n_docs {
        let truncated = |e: io::Error| match e.kind() {
            io::ErrorKind::UnexpectedEof => CollectionIoError::Truncated { doc },
            _ => CollectionIoError::Io(e),
        };
        let nnz = ioutil::read_u32(&mut r).map_err(truncated)? as usize;
        if nnz == 0 {
            return Err(CollectionIoError::EmptyDoc { doc });
        }
        let mut ids = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            ids.push(ioutil::read_u32(&mut r).map_err(truncated)?);
        }
        for pair in ids.windows(2) {
            if pair[0] >= pair[1] {
                return Err(CollectionIoError::NonIncreasingIds { doc });
            }
        }
        let top = *ids.last().unwrap();
        if top >= vocab_size {
            return Err(CollectionIoError::TokenOutOfRange { doc, id: top, vocab_size });
        }
        let mut entries = Vec::with_capacity(nnz);
        for id in ids {
            let weight = ioutil::read_f32(&mut r).map_err(truncated)?;
            if !weight.is_finite() {
                return Err(CollectionIoError::NonFiniteWeight { doc });
            }
            if weight <= 0.0 {
                return Err(CollectionIoError::NonPositiveWeight { doc, weight });
            }
            entries.push((id, f64::from(weight)));
        }
        vectors.push(SparseVector::from_sorted(entries));
    }
    if !ioutil::at_eof(&mut r)? {
        return Err(CollectionIoError::TrailingBytes);
    }
    Ok(Collection { vectors, vocab_size })
}
