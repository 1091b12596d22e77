//! On-disk format behavior: round trips through real files, plus the
//! failure modes a user hits with truncated, corrupted, or mismatched
//! inputs.

use std::fs;
use std::path::{Path, PathBuf};

use lsr_core::encoder::{
    self, read_embeddings, read_idf, read_table, read_vocab, write_embeddings, write_idf,
    write_table, write_vocab, EmbeddingIoError, IdfTable, ScoreTable, TableIoError,
    TokenizerVocab,
};
use lsr_core::eval::{read_qrels, read_run, write_run, EvalError, RunFile};
use lsr_core::index::{build_index, read_index, write_index, BuildConfig, IndexIoError};
use lsr_core::sparse::{
    read_collection, write_collection, Collection, CollectionIoError, SparseVector,
};
use lsr_core::synthetic;
use tempfile::TempDir;

fn tmp(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn corrupt<F: FnOnce(&mut Vec<u8>)>(src: &Path, dst: &Path, f: F) {
    let mut bytes = fs::read(src).unwrap();
    f(&mut bytes);
    fs::write(dst, bytes).unwrap();
}

#[test]
fn empty_collection_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "empty.bin");
    let c = Collection::new(vec![], 1000).unwrap();
    write_collection(&c, &path).unwrap();
    let back = read_collection(&path).unwrap();
    assert_eq!(back.n_docs(), 0);
    assert_eq!(back.vocab_size(), 1000);
}

#[test]
fn collection_rejects_wrong_magic() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    let c = synthetic::zipf_collection(5, 100, 10, 1);
    write_collection(&c, &good).unwrap();
    corrupt(&good, &bad, |b| b[..4].copy_from_slice(b"XXXX"));
    assert!(matches!(read_collection(&bad), Err(CollectionIoError::Header(_))));
}

#[test]
fn collection_rejects_unsupported_version() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    let c = synthetic::zipf_collection(5, 100, 10, 2);
    write_collection(&c, &good).unwrap();
    corrupt(&good, &bad, |b| b[4..8].copy_from_slice(&9u32.to_le_bytes()));
    assert!(matches!(read_collection(&bad), Err(CollectionIoError::Header(_))));
}

#[test]
fn truncated_collection_names_the_failing_doc() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    let c = synthetic::zipf_collection(8, 100, 10, 3);
    write_collection(&c, &good).unwrap();
    let full = fs::read(&good).unwrap().len();
    corrupt(&good, &bad, |b| b.truncate(full - 6));
    match read_collection(&bad) {
        Err(CollectionIoError::Truncated { doc }) => assert_eq!(doc, 7),
        other => panic!("expected truncation at doc 7, got {other:?}"),
    }
}

#[test]
fn collection_rejects_trailing_bytes() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    let c = synthetic::zipf_collection(4, 100, 10, 4);
    write_collection(&c, &good).unwrap();
    corrupt(&good, &bad, |b| b.extend_from_slice(&[0u8; 3]));
    assert!(matches!(read_collection(&bad), Err(CollectionIoError::TrailingBytes)));
}

#[test]
fn collection_rejects_disordered_token_ids() {
    let dir = TempDir::new().unwrap();
    let bad = tmp(&dir, "bad.bin");
    // Hand-built: one doc with ids (7, 3).
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"LSRC");
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&100u32.to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&7u32.to_le_bytes());
    bytes.extend_from_slice(&3u32.to_le_bytes());
    bytes.extend_from_slice(&1.0f32.to_le_bytes());
    bytes.extend_from_slice(&1.0f32.to_le_bytes());
    fs::write(&bad, bytes).unwrap();
    assert!(matches!(
        read_collection(&bad),
        Err(CollectionIoError::NonIncreasingIds { doc: 0 })
    ));
}

#[test]
fn collection_rejects_zero_weight_on_disk() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    let c = Collection::new(vec![SparseVector::new(vec![(0, 1.0), (1, 2.0)])], 10).unwrap();
    write_collection(&c, &good).unwrap();
    let len = fs::read(&good).unwrap().len();
    // Overwrite the last weight with 0.0.
    corrupt(&good, &bad, |b| b[len - 4..].copy_from_slice(&0.0f32.to_le_bytes()));
    assert!(matches!(
        read_collection(&bad),
        Err(CollectionIoError::NonPositiveWeight { doc: 0, .. })
    ));
}

#[test]
fn embeddings_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "emb.bin");
    let emb = synthetic::random_embeddings(64, 12, 9);
    write_embeddings(&emb, &path).unwrap();
    let back = read_embeddings(&path).unwrap();
    assert_eq!(back.vocab_size(), 64);
    assert_eq!(back.dim(), 12);
    for t in 0..64 {
        assert_eq!(back.row(t), emb.row(t));
    }
}

#[test]
fn truncated_embeddings_are_detected() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    write_embeddings(&synthetic::random_embeddings(16, 4, 9), &good).unwrap();
    let len = fs::read(&good).unwrap().len();
    corrupt(&good, &bad, |b| b.truncate(len - 2));
    assert!(matches!(read_embeddings(&bad), Err(EmbeddingIoError::Truncated)));
}

#[test]
fn embeddings_reject_nan_entries() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let bad = tmp(&dir, "bad.bin");
    write_embeddings(&synthetic::random_embeddings(16, 4, 9), &good).unwrap();
    corrupt(&good, &bad, |b| {
        let at = 16 + 5 * 4;
        b[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    });
    assert!(matches!(read_embeddings(&bad), Err(EmbeddingIoError::NonFinite { row: 1 })));
}

#[test]
fn score_table_round_trips_with_zero_gaps() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "table.tsv");
    let mut scores = vec![0.0; 50];
    scores[3] = 1.25;
    scores[17] = 0.5;
    scores[49] = 2.0;
    let table = ScoreTable::new(scores.clone()).unwrap();
    write_table(&table, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 50);
    let back = read_table(&path).unwrap();
    assert_eq!(back.scores(), &scores[..]);

    // Readers also accept sparse files where zero rows are left out.
    let sparse_file = tmp(&dir, "sparse.tsv");
    fs::write(&sparse_file, "#LSRT v1 vocab=50\n3\t1.25\n17\t0.5\n49\t2\n").unwrap();
    let from_sparse = read_table(&sparse_file).unwrap();
    assert_eq!(from_sparse.scores(), &scores[..]);
}

#[test]
fn score_table_rejects_disordered_and_negative_rows() {
    let dir = TempDir::new().unwrap();
    let disordered = tmp(&dir, "a.tsv");
    fs::write(&disordered, "#LSRT v1 vocab=10\n5\t1.0\n2\t1.0\n").unwrap();
    assert!(matches!(read_table(&disordered), Err(TableIoError::Malformed { line: 3, .. })));

    let negative = tmp(&dir, "b.tsv");
    fs::write(&negative, "#LSRT v1 vocab=10\n5\t-0.5\n").unwrap();
    assert!(matches!(read_table(&negative), Err(TableIoError::Malformed { line: 2, .. })));

    let out_of_vocab = tmp(&dir, "c.tsv");
    fs::write(&out_of_vocab, "#LSRT v1 vocab=10\n12\t0.5\n").unwrap();
    assert!(matches!(read_table(&out_of_vocab), Err(TableIoError::Malformed { line: 2, .. })));
}

#[test]
fn score_table_rejects_missing_header() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "naked.tsv");
    fs::write(&path, "0\t1.0\n").unwrap();
    assert!(read_table(&path).is_err());
}

#[test]
fn idf_round_trip_keeps_doc_count() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "idf.tsv");
    let c = synthetic::zipf_collection(40, 200, 15, 5);
    let idf = encoder::compute_idf(&c);
    write_idf(&idf, &path).unwrap();
    let back = read_idf(&path).unwrap();
    assert_eq!(back.n_docs(), 40);
    assert_eq!(back.values(), idf.values());
}

#[test]
fn idf_file_written_by_hand_parses() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "idf.tsv");
    fs::write(&path, "#LSRF v1 vocab=4 ndocs=10\n0\t1.5\n3\t0.25\n").unwrap();
    let idf = read_idf(&path).unwrap();
    assert_eq!(idf.values(), &[1.5, 0.0, 0.0, 0.25]);
    assert_eq!(idf.n_docs(), 10);
    let _ = IdfTable::new(idf.values().to_vec(), idf.n_docs()).unwrap();
}

#[test]
fn index_round_trips_structure_and_config() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "index.bin");
    let c = synthetic::zipf_collection(300, 500, 25, 6);
    let forward = synthetic::zipf_collection(300, 500, 25, 6);
    let config = BuildConfig { max_postings: 100, alpha: 0.6, centroid_fraction: 0.2, seed: 7 };
    let index = build_index(c, config).unwrap();
    write_index(&index, &path).unwrap();
    let back = read_index(&path, forward).unwrap();

    assert_eq!(back.config(), index.config());
    assert_eq!(back.n_lists(), index.n_lists());
    for (a, b) in back.lists().zip(index.lists()) {
        assert_eq!(a.token_id(), b.token_id());
        assert_eq!(a.blocks().len(), b.blocks().len());
        for (ba, bb) in a.blocks().iter().zip(b.blocks()) {
            assert_eq!(ba.doc_ids(), bb.doc_ids());
            assert_eq!(ba.summary().nnz(), bb.summary().nnz());
        }
    }
}

#[test]
fn summary_weights_never_shrink_on_disk() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "index.bin");
    // Weights with long mantissas that cannot be exact in f32.
    let docs: Vec<SparseVector> = (0..20)
        .map(|i| {
            SparseVector::new(vec![
                (0, 1.0 + (i as f64) * 0.0123456789),
                (i + 1, 0.1 + (i as f64) * 0.987654321),
            ])
        })
        .collect();
    let c = Collection::new(docs.clone(), 64).unwrap();
    let forward = Collection::new(docs, 64).unwrap();
    let config = BuildConfig { max_postings: 50, alpha: 1.0, centroid_fraction: 0.3, seed: 1 };
    let index = build_index(c, config).unwrap();
    write_index(&index, &path).unwrap();
    let back = read_index(&path, forward).unwrap();

    for (list_disk, list_mem) in back.lists().zip(index.lists()) {
        for (bd, bm) in list_disk.blocks().iter().zip(list_mem.blocks()) {
            for &(t, w_mem) in bm.summary().entries() {
                let w_disk = bd.summary().weight(t);
                assert!(
                    w_disk >= w_mem,
                    "token {t}: disk {w_disk} < memory {w_mem}"
                );
                assert!((w_disk - w_mem).abs() < 1e-6 * w_mem.abs().max(1.0));
            }
        }
    }
}

#[test]
fn index_rejects_doc_beyond_forward_collection() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "index.bin");
    let c = synthetic::zipf_collection(50, 200, 10, 8);
    let index = build_index(c, BuildConfig::default()).unwrap();
    write_index(&index, &path).unwrap();
    // A forward collection with fewer documents than the index references.
    let short = synthetic::zipf_collection(10, 200, 10, 8);
    assert!(matches!(
        read_index(&path, short),
        Err(IndexIoError::DocOutOfRange { .. })
    ));
}

#[test]
fn index_rejects_wrong_magic_and_truncation() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.bin");
    let c = synthetic::zipf_collection(50, 200, 10, 9);
    let forward = synthetic::zipf_collection(50, 200, 10, 9);
    let index = build_index(c, BuildConfig::default()).unwrap();
    write_index(&index, &good).unwrap();

    let bad_magic = tmp(&dir, "magic.bin");
    corrupt(&good, &bad_magic, |b| b[..4].copy_from_slice(b"ABCD"));
    assert!(matches!(
        read_index(&bad_magic, synthetic::zipf_collection(50, 200, 10, 9)),
        Err(IndexIoError::Header(_))
    ));

    let cut = tmp(&dir, "cut.bin");
    let len = fs::read(&good).unwrap().len();
    corrupt(&good, &cut, |b| b.truncate(len - 5));
    assert!(matches!(read_index(&cut, forward), Err(IndexIoError::Truncated { .. })));
}

#[test]
fn vocab_file_round_trips_and_tolerates_crlf() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "vocab.txt");
    let vocab = TokenizerVocab::from_lines(
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "quick", "##ly"]
            .iter()
            .map(|s| s.to_string()),
    )
    .unwrap();
    write_vocab(&vocab, &path).unwrap();
    let back = read_vocab(&path).unwrap();
    assert_eq!(back.vocab_size(), vocab.vocab_size());
    assert_eq!(back.token_id("##ly"), vocab.token_id("##ly"));

    let crlf = tmp(&dir, "crlf.txt");
    fs::write(&crlf, "[PAD]\r\n[UNK]\r\n[CLS]\r\n[SEP]\r\nword\r\n").unwrap();
    let v = read_vocab(&crlf).unwrap();
    assert_eq!(v.token_id("word"), Some(4));
}

#[test]
fn run_file_round_trips_ranks_and_scores() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "run.txt");
    let mut run = RunFile::new();
    run.push_query("q2", vec![("d9".into(), 3.5), ("d1".into(), 1.25)]).unwrap();
    run.push_query("q1", vec![("d4".into(), 0.123456789012345)]).unwrap();
    write_run(&run, &path, "tagged").unwrap();

    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().all(|l| l.split_whitespace().count() == 6));
    assert!(text.contains(" Q0 "));
    assert!(text.contains("tagged"));

    let back = read_run(&path).unwrap();
    assert_eq!(back.n_queries(), 2);
    assert_eq!(back.ranking("q2").unwrap(), run.ranking("q2").unwrap());
    assert_eq!(back.ranking("q1").unwrap(), run.ranking("q1").unwrap());
}

#[test]
fn run_file_rows_may_arrive_out_of_rank_order() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "run.txt");
    fs::write(
        &path,
        "q1 Q0 d3 2 1.5 t\nq1 Q0 d7 1 2.5 t\nq1 Q0 d2 3 0.5 t\n",
    )
    .unwrap();
    let run = read_run(&path).unwrap();
    let docs: Vec<&str> = run.ranking("q1").unwrap().iter().map(|(d, _)| d.as_str()).collect();
    assert_eq!(docs, ["d7", "d3", "d2"]);
}

#[test]
fn run_file_rejects_rank_gaps() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "run.txt");
    fs::write(&path, "q1 Q0 d3 1 1.5 t\nq1 Q0 d7 3 2.5 t\n").unwrap();
    assert!(matches!(read_run(&path), Err(EvalError::BadRanks { .. })));
}

#[test]
fn qrels_parse_and_reject_malformed_lines() {
    let dir = TempDir::new().unwrap();
    let good = tmp(&dir, "good.qrels");
    fs::write(&good, "q1 0 d1 2\nq1 0 d2 0\nq2 0 d9 1\n").unwrap();
    let qrels = read_qrels(&good).unwrap();
    assert_eq!(qrels.grade("q1", "d1"), Some(2));
    assert_eq!(qrels.grade("q1", "d2"), Some(0));
    assert_eq!(qrels.n_queries(), 2);

    let bad = tmp(&dir, "bad.qrels");
    fs::write(&bad, "q1 0 d1 2\nq1 d2 0\n").unwrap();
    assert!(matches!(read_qrels(&bad), Err(EvalError::Malformed { line: 2, .. })));

    let dup = tmp(&dir, "dup.qrels");
    fs::write(&dup, "q1 0 d1 2\nq1 0 d1 1\n").unwrap();
    assert!(matches!(read_qrels(&dup), Err(EvalError::DuplicateJudgment { .. })));
}
