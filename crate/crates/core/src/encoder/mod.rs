//! Query encoding without a model in the loop.
//!
//! The encoder is a table: token id → learned score. Building the table
//! evaluates `log(1 + ReLU(w·e_t + b))` once per vocabulary entry
//! against a frozen embedding matrix; encoding a query is then
//! tokenization, table lookup, and multiplication by the token's
//! occurrence count. An optional IDF table can be folded in to reweight
//! query terms.

pub mod tokenizer;

pub use tokenizer::{read_vocab, write_vocab, TokenSequence, TokenizerVocab, VocabError};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::ioutil;
use crate::sparse::{Collection, SparseVector, TokenId};

const EMBEDDING_MAGIC: [u8; 4] = *b"LSRE";
const EMBEDDING_VERSION: u32 = 1;
const TABLE_HEADER_PREFIX: &str = "#LSRT v1 vocab=";
const IDF_HEADER_PREFIX: &str = "#LSRF v1 vocab=";

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("dimension mismatch: w has {w_dim} components, embedding rows have {e_dim}")]
    DimensionMismatch { w_dim: usize, e_dim: usize },
    #[error("token id {id} outside table of {table_len} scores")]
    TokenOutOfRange { id: TokenId, table_len: usize },
    #[error("query maps to an empty vector (all token scores zero)")]
    EmptyQuery,
    #[error("table has {table} entries but idf has {idf}")]
    SizeMismatch { table: usize, idf: usize },
    #[error("score at index {index} is {value}, outside [0, inf)")]
    InvalidScore { index: usize, value: f64 },
}

/// Frozen per-token embeddings, row-major, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab_size: u32,
    dim: u32,
    data: Vec<f32>,
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("expected {expected} entries ({vocab_size} x {dim}), got {got}")]
    WrongLength { vocab_size: u32, dim: u32, expected: usize, got: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
}

impl EmbeddingMatrix {
    pub fn new(vocab_size: u32, dim: u32, data: Vec<f32>) -> Result<Self, EmbeddingError> {
        let expected = vocab_size as usize * dim as usize;
        if data.len() != expected {
            return Err(EmbeddingError::WrongLength { vocab_size, dim, expected, got: data.len() });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite { index });
        }
        Ok(EmbeddingMatrix { vocab_size, dim, data })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn row(&self, token: TokenId) -> &[f32] {
        let d = self.dim as usize;
        let start = token as usize * d;
        &self.data[start..start + d]
    }
}

/// The learned token → score lookup. One finite, non-negative score per
/// vocabulary entry; zero means the token contributes nothing to a
/// query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn new(scores: Vec<f64>) -> Result<Self, EncoderError> {
        for (index, &value) in scores.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EncoderError::InvalidScore { index, value });
            }
        }
        Ok(ScoreTable { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score(&self, token: TokenId) -> f64 {
        self.scores[token as usize]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Inverse document frequencies over a collection's non-zero supports.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    values: Vec<f64>,
    n_docs: usize,
}

impl IdfTable {
    pub fn new(values: Vec<f64>, n_docs: usize) -> Result<Self, EncoderError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EncoderError::InvalidScore { index, value });
            }
        }
        Ok(IdfTable { values, n_docs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn idf(&self, token: TokenId) -> f64 {
        self.values[token as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of documents the frequencies were computed over. Zero when
    /// the table was loaded from a file that predates the computation.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

pub(crate) fn preactivation(w: &[f64], b: f64, e: &[f32]) -> f64 {
    let mut acc = b;
    for (wi, ei) in w.iter().zip(e) {
        acc += wi * f64::from(*ei);
    }
    acc
}

pub(crate) fn saturate(preact: f64) -> f64 {
    if preact > 0.0 {
        preact.ln_1p()
    } else {
        0.0
    }
}

/// The per-token score: `log(1 + ReLU(w·e + b))`. Always ≥ 0.
pub fn score_from_embedding(w: &[f64], b: f64, e: &[f32]) -> Result<f64, EncoderError> {
    if w.len() != e.len() {
        return Err(EncoderError::DimensionMismatch { w_dim: w.len(), e_dim: e.len() });
    }
    Ok(saturate(preactivation(w, b, e)))
}

/// The raw affine value `w·e + b` before the rectified log. Useful for
/// checking how close a token sits to the activation threshold.
pub fn preactivation_from_embedding(w: &[f64], b: f64, e: &[f32]) -> Result<f64, EncoderError> {
    if w.len() != e.len() {
        return Err(EncoderError::DimensionMismatch { w_dim: w.len(), e_dim: e.len() });
    }
    Ok(preactivation(w, b, e))
}

/// Evaluates the score for every vocabulary entry and forces the listed
/// special tokens to zero.
pub fn build_table(
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    special_ids: &[TokenId],
) -> Result<ScoreTable, EncoderError> {
    if w.len() != emb.dim() as usize {
        return Err(EncoderError::DimensionMismatch { w_dim: w.len(), e_dim: emb.dim() as usize });
    }
    let mut scores = Vec::with_capacity(emb.vocab_size() as usize);
    for t in 0..emb.vocab_size() {
        scores.push(saturate(preactivation(w, b, emb.row(t))));
    }
    for &s in special_ids {
        if s >= emb.vocab_size() {
            return Err(EncoderError::TokenOutOfRange { id: s, table_len: scores.len() });
        }
        scores[s as usize] = 0.0;
    }
    Ok(ScoreTable { scores })
}

/// Turns a token sequence into a query vector: each distinct token
/// contributes its table score multiplied by its occurrence count.
/// Zero-score tokens drop out; a query that loses every token this way
/// is an error, since ranking against an empty vector is undefined.
pub fn encode_query(tokens: &TokenSequence, table: &ScoreTable) -> Result<SparseVector, EncoderError> {
    let mut counts: BTreeMap<TokenId, u32> = BTreeMap::new();
    for &id in tokens.ids() {
        if id as usize >= table.len() {
            return Err(EncoderError::TokenOutOfRange { id, table_len: table.len() });
        }
        *counts.entry(id).or_insert(0) += 1;
    }
    let mut entries = Vec::with_capacity(counts.len());
    for (id, count) in counts {
        let score = table.score(id);
        if score > 0.0 {
            entries.push((id, count as f64 * score));
        }
    }
    if entries.is_empty() {
        return Err(EncoderError::EmptyQuery);
    }
    Ok(SparseVector::from_sorted(entries))
}

/// BM25-style smoothed IDF over document supports:
/// `ln(1 + (N − df + 0.5)/(df + 0.5))`, floored at zero.
pub fn compute_idf(collection: &Collection) -> IdfTable {
    let n = collection.n_docs();
    let mut df = vec![0usize; collection.vocab_size() as usize];
    for doc in collection.iter() {
        for &(t, _) in doc.entries() {
            df[t as usize] += 1;
        }
    }
    let values = df
        .iter()
        .map(|&d| {
            let ratio = (n as f64 - d as f64 + 0.5) / (d as f64 + 0.5);
            (1.0 + ratio).ln().max(0.0)
        })
        .collect();
    IdfTable { values, n_docs: n }
}

/// Elementwise product of a score table with an IDF table.
pub fn combine_idf(table: &ScoreTable, idf: &IdfTable) -> Result<ScoreTable, EncoderError> {
    if table.len() != idf.len() {
        return Err(EncoderError::SizeMismatch { table: table.len(), idf: idf.len() });
    }
    let scores = table.scores.iter().zip(&idf.values).map(|(s, i)| s * i).collect();
    Ok(ScoreTable { scores })
}

#[derive(Debug, Error)]
pub enum TableIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> TableIoError {
    TableIoError::Malformed { line, msg: msg.into() }
}

/// Writes one `token_id<TAB>score` line per vocabulary entry, zeros
/// included, under a `#LSRT` header. Scores render with enough digits
/// to round-trip exactly.
pub fn write_table(table: &ScoreTable, path: &Path) -> Result<(), TableIoError> {
    write_tsv_table(&table.scores, TABLE_HEADER_PREFIX, "", path)
}

pub fn read_table(path: &Path) -> Result<ScoreTable, TableIoError> {
    let (scores, _) = read_tsv_table(TABLE_HEADER_PREFIX, path)?;
    Ok(ScoreTable { scores })
}

/// IDF tables share the score-table line format under a `#LSRF` header
/// that additionally records the collection size.
pub fn write_idf(idf: &IdfTable, path: &Path) -> Result<(), TableIoError> {
    write_tsv_table(&idf.values, IDF_HEADER_PREFIX, &format!(" ndocs={}", idf.n_docs), path)
}

pub fn read_idf(path: &Path) -> Result<IdfTable, TableIoError> {
    let (values, extra) = read_tsv_table(IDF_HEADER_PREFIX, path)?;
    let n_docs = match extra.strip_prefix(" ndocs=") {
        Some(rest) => rest.parse().map_err(|_| malformed(1, "bad ndocs in header"))?,
        None => return Err(malformed(1, "missing ndocs in header")),
    };
    Ok(IdfTable { values, n_docs })
}

fn write_tsv_table(
    values: &[f64],
    header_prefix: &str,
    header_suffix: &str,
    path: &Path,
) -> Result<(), TableIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header_prefix}{}{header_suffix}", values.len())?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i}\t{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the shared table format. Entries must appear in strictly
/// increasing id order below the header's vocab size; ids absent from
/// the file default to zero. Returns the values and any header text
/// after the vocab count.
fn read_tsv_table(header_prefix: &str, path: &Path) -> Result<(Vec<f64>, String), TableIoError> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| malformed(1, "empty file"))??;
    let rest = header
        .strip_prefix(header_prefix)
        .ok_or_else(|| malformed(1, format!("expected header {header_prefix:?}...")))?;
    let digits_end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
    let vocab: usize =
        rest[..digits_end].parse().map_err(|_| malformed(1, "bad vocab count in header"))?;
    let extra = rest[digits_end..].to_string();

    let mut values = vec![0.0; vocab];
    let mut prev: Option<usize> = None;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (id_str, value_str) =
            line.split_once('\t').ok_or_else(|| malformed(line_no, "expected id<TAB>value"))?;
        let id: usize = id_str.parse().map_err(|_| malformed(line_no, "bad token id"))?;
        if id >= vocab {
            return Err(malformed(line_no, format!("token id {id} beyond vocab {vocab}")));
        }
        if prev.is_some_and(|p| id <= p) {
            return Err(malformed(line_no, "token ids must be strictly increasing"));
        }
        let value: f64 = value_str.parse().map_err(|_| malformed(line_no, "bad value"))?;
        if !value.is_finite() || value < 0.0 {
            return Err(malformed(line_no, format!("value {value} outside [0, inf)")));
        }
        values[id] = value;
        prev = Some(id);
    }
    Ok((values, extra))
}

#[derive(Debug, Error)]
pub enum EmbeddingIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated embedding payload")]
    Truncated,
    #[error("non-finite entry in row {row}")]
    NonFinite { row: u32 },
    #[error("trailing bytes after the last row")]
    TrailingBytes,
}

pub fn write_embeddings(emb: &EmbeddingMatrix, path: &Path) -> Result<(), EmbeddingIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&EMBEDDING_MAGIC)?;
    ioutil::write_u32(&mut w, EMBEDDING_VERSION)?;
    ioutil::write_u32(&mut w, emb.vocab_size)?;
    ioutil::write_u32(&mut w, emb.dim)?;
    for &x in &emb.data {
        ioutil::write_f32(&mut w, x)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix, EmbeddingIoError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = |what: &str| EmbeddingIoError::Header(what.to_string());
    let magic = ioutil::read_magic(&mut r).map_err(|_| header("file too short for magic"))?;
    if magic != EMBEDDING_MAGIC {
        return Err(header("expected magic \"LSRE\""));
    }
    let version = ioutil::read_u32(&mut r).map_err(|_| header("missing version"))?;
    if version != EMBEDDING_VERSION {
        return Err(EmbeddingIoError::Header(format!("unsupported version {version}")));
    }
    let vocab_size = ioutil::read_u32(&mut r).map_err(|_| header("missing vocab size"))?;
    let dim = ioutil::read_u32(&mut r).map_err(|_| header("missing dimension"))?;
    let n = vocab_size as usize * dim as usize;
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let x = ioutil::read_f32(&mut r).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => EmbeddingIoError::Truncated,
            _ => EmbeddingIoError::Io(e),
        })?;
        if !x.is_finite() {
            return Err(EmbeddingIoError::NonFinite { row: (i / dim.max(1) as usize) as u32 });
        }
        data.push(x);
    }
    if !ioutil::at_eof(&mut r)? {
        return Err(EmbeddingIoError::TrailingBytes);
    }
    Ok(EmbeddingMatrix { vocab_size, dim, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn matrix(vocab: u32, dim: u32, mut f: impl FnMut(u32, u32) -> f32) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(vocab as usize * dim as usize);
        for t in 0..vocab {
            for j in 0..dim {
                data.push(f(t, j));
            }
        }
        EmbeddingMatrix::new(vocab, dim, data).unwrap()
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let w = [1.0, 1.0];
        let e = [0.5f32, -1.5];
        // preactivation = 0.5 - 1.5 + 0 = -1
        assert_eq!(score_from_embedding(&w, 0.0, &e).unwrap(), 0.0);
    }

    #[test]
    fn preactivation_of_e_minus_one_scores_one() {
        let b = std::f64::consts::E - 1.0;
        let s = score_from_embedding(&[0.0], b, &[7.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = score_from_embedding(&[1.0, 2.0], 0.0, &[1.0f32]).unwrap_err();
        assert!(matches!(err, EncoderError::DimensionMismatch { w_dim: 2, e_dim: 1 }));
    }

    #[test]
    fn score_matches_scalar_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e: Vec<f32> = (0..8).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let b: f64 = rng.gen_range(-0.5..0.5);
            let mut sum = b;
            for j in 0..8 {
                sum += w[j] * e[j] as f64;
            }
            let expect = if sum > 0.0 { (1.0 + sum).ln() } else { 0.0 };
            let got = score_from_embedding(&w, b, &e).unwrap();
            assert!((got - expect).abs() < 1e-9, "got {got}, expect {expect}");
        }
    }

    #[test]
    fn build_table_on_zero_matrix_is_constant() {
        let emb = matrix(10, 4, |_, _| 0.0);
        let b = std::f64::consts::E - 1.0;
        let table = build_table(&[0.1, 0.2, 0.3, 0.4], b, &emb, &[0, 1, 2, 3]).unwrap();
        for t in 0..10u32 {
            if t < 4 {
                assert_eq!(table.score(t), 0.0);
            } else {
                assert!((table.score(t) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_weights_nonpositive_bias_give_zero_table() {
        let emb = matrix(6, 3, |t, j| (t + j) as f32);
        let table = build_table(&[0.0, 0.0, 0.0], -0.25, &emb, &[]).unwrap();
        assert!(table.scores().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn table_entries_match_per_token_scores() {
        let mut mrng = ChaCha8Rng::seed_from_u64(9);
        let emb = matrix(100, 8, move |_, _| mrng.gen_range(-1.0f32..1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let table = build_table(&w, 0.1, &emb, &[]).unwrap();
        for t in [0u32, 7, 13, 31, 42, 55, 68, 77, 91, 99] {
            let direct = score_from_embedding(&w, 0.1, emb.row(t)).unwrap();
            assert_eq!(table.score(t), direct);
        }
    }

    #[test]
    fn encoding_multiplies_by_occurrence_count() {
        let table = ScoreTable::new(vec![0.0, 0.5, 1.2]).unwrap();
        let q = TokenSequence::new(vec![1, 2, 1]);
        let v = encode_query(&q, &table).unwrap();
        assert_eq!(v.entries(), &[(1, 1.0), (2, 1.2)]);
    }

    #[test]
    fn zero_score_tokens_drop_out() {
        let table = ScoreTable::new(vec![0.0, 0.5]).unwrap();
        let v = encode_query(&TokenSequence::new(vec![0, 1, 0]), &table).unwrap();
        assert_eq!(v.entries(), &[(1, 0.5)]);
    }

    #[test]
    fn all_zero_query_is_an_error() {
        let table = ScoreTable::new(vec![0.0, 0.5]).unwrap();
        let err = encode_query(&TokenSequence::new(vec![0, 0]), &table).unwrap_err();
        assert!(matches!(err, EncoderError::EmptyQuery));
    }

    #[test]
    fn encoding_matches_histogram_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let scores: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..2.0)).collect();
        let table = ScoreTable::new(scores.clone()).unwrap();
        for _ in 0..50 {
            let len = rng.gen_range(1..12);
            let ids: Vec<u32> = (0..len).map(|_| rng.gen_range(0..40)).collect();
            let mut hist = vec![0u32; 40];
            for &id in &ids {
                hist[id as usize] += 1;
            }
            let expect: Vec<(u32, f64)> = (0..40u32)
                .filter(|&t| hist[t as usize] > 0 && scores[t as usize] > 0.0)
                .map(|t| (t, hist[t as usize] as f64 * scores[t as usize]))
                .collect();
            match encode_query(&TokenSequence::new(ids), &table) {
                Ok(v) => assert_eq!(v.entries(), expect.as_slice()),
                Err(EncoderError::EmptyQuery) => assert!(expect.is_empty()),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn duplicating_a_token_doubles_its_weight() {
        let table = ScoreTable::new(vec![0.7, 1.1]).unwrap();
        let once = encode_query(&TokenSequence::new(vec![1]), &table).unwrap();
        let twice = encode_query(&TokenSequence::new(vec![1, 1]), &table).unwrap();
        assert_eq!(twice.weight(1), 2.0 * once.weight(1));
    }

    #[test]
    fn idf_hand_values() {
        let doc = SparseVector::new(vec![(0, 1.0)]);
        let c = Collection::new(vec![doc], 2).unwrap();
        let idf = compute_idf(&c);
        // df=1, N=1: ln(1 + 0.5/1.5) = ln(4/3)
        assert!((idf.idf(0) - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        // df=0, N=1: ln(1 + 1.5/0.5) = ln 4
        assert!((idf.idf(1) - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(idf.n_docs(), 1);
    }

    #[test]
    fn idf_never_increases_with_df() {
        let n = 20;
        // Doc d holds tokens d..n, so df(t) = t + 1, increasing in t.
        let docs: Vec<SparseVector> = (0..n)
            .map(|d| SparseVector::new((d..n).map(|t| (t as u32, 1.0)).collect()))
            .collect();
        let c = Collection::new(docs, n as u32).unwrap();
        let idf = compute_idf(&c);
        for t in 1..n as u32 {
            assert!(idf.idf(t) <= idf.idf(t - 1) + 1e-15);
        }
    }

    #[test]
    fn combine_with_ones_is_identity() {
        let table = ScoreTable::new(vec![0.0, 0.5, 2.0]).unwrap();
        let idf = IdfTable::new(vec![1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(combine_idf(&table, &idf).unwrap(), table);
    }

    #[test]
    fn zero_absorbs_in_combination() {
        let table = ScoreTable::new(vec![0.0, 0.5]).unwrap();
        let idf = IdfTable::new(vec![3.0, 0.0], 4).unwrap();
        let combined = combine_idf(&table, &idf).unwrap();
        assert_eq!(combined.scores(), &[0.0, 0.0]);
    }

    #[test]
    fn combination_is_pointwise_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..2.0)).collect();
        let i: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..3.0)).collect();
        let combined =
            combine_idf(&ScoreTable::new(s.clone()).unwrap(), &IdfTable::new(i.clone(), 9).unwrap())
                .unwrap();
        for t in 0..30 {
            assert_eq!(combined.score(t), s[t as usize] * i[t as usize]);
        }
    }

    #[test]
    fn combine_rejects_size_mismatch() {
        let table = ScoreTable::new(vec![1.0]).unwrap();
        let idf = IdfTable::new(vec![1.0, 2.0], 1).unwrap();
        assert!(matches!(
            combine_idf(&table, &idf),
            Err(EncoderError::SizeMismatch { table: 1, idf: 2 })
        ));
    }

    #[test]
    fn score_table_rejects_negative_and_non_finite() {
        assert!(ScoreTable::new(vec![0.5, -0.1]).is_err());
        assert!(ScoreTable::new(vec![f64::NAN]).is_err());
        assert!(ScoreTable::new(vec![f64::INFINITY]).is_err());
    }
}
