//! TREC-style effectiveness evaluation: qrels, run files, mRR@k and
//! nDCG@k.
//!
//! Qrels lines are `qid 0 docid grade`, runs are
//! `qid Q0 docid rank score tag`, both whitespace-separated. Run
//! queries with no judgments at all are skipped and counted rather than
//! scored as zero; nDCG additionally skips judged queries whose ideal
//! gain is zero.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("duplicate judgment for query {qid}, doc {docid}")]
    DuplicateJudgment { qid: String, docid: String },
    #[error("query {qid}: duplicate doc {docid} in run")]
    DuplicateDoc { qid: String, docid: String },
    #[error("query {qid}: ranks are not contiguous from 1")]
    BadRanks { qid: String },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no run query has any judgment")]
    NoJudgedQueries,
}

fn malformed(line: usize, msg: impl Into<String>) -> EvalError {
    EvalError::Malformed { line, msg: msg.into() }
}

/// Relevance judgments: query id → doc id → grade.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    grades: HashMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: &str, docid: &str, grade: u32) -> Result<(), EvalError> {
        let q = self.grades.entry(qid.to_string()).or_default();
        if q.insert(docid.to_string(), grade).is_some() {
            return Err(EvalError::DuplicateJudgment {
                qid: qid.to_string(),
                docid: docid.to_string(),
            });
        }
        Ok(())
    }

    pub fn grade(&self, qid: &str, docid: &str) -> Option<u32> {
        self.grades.get(qid)?.get(docid).copied()
    }

    /// All judgments for one query, if any exist.
    pub fn judgments(&self, qid: &str) -> Option<&HashMap<String, u32>> {
        self.grades.get(qid)
    }

    pub fn n_queries(&self) -> usize {
        self.grades.len()
    }
}

/// A ranked run: per query, documents in rank order with their scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    rankings: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one query's ranking, already ordered best-first.
    pub fn push_query(&mut self, qid: &str, ranking: Vec<(String, f64)>) -> Result<(), EvalError> {
        let mut seen: HashMap<&str, ()> = HashMap::with_capacity(ranking.len());
        for (docid, _) in &ranking {
            if seen.insert(docid.as_str(), ()).is_some() {
                return Err(EvalError::DuplicateDoc {
                    qid: qid.to_string(),
                    docid: docid.clone(),
                });
            }
        }
        self.rankings.insert(qid.to_string(), ranking);
        Ok(())
    }

    pub fn ranking(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.rankings.get(qid).map(|r| r.as_slice())
    }

    pub fn queries(&self) -> impl Iterator<Item = (&String, &Vec<(String, f64)>)> {
        self.rankings.iter()
    }

    pub fn n_queries(&self) -> usize {
        self.rankings.len()
    }
}

/// One metric over one run, with the query accounting that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: String,
    pub k: usize,
    pub value: f64,
    /// Queries that entered the mean.
    pub n_queries: usize,
    /// Queries dropped: unjudged, plus (for nDCG) judged ones with zero
    /// ideal gain.
    pub n_skipped: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "metric,k,value,n_queries,n_skipped";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.metric, self.k, self.value, self.n_queries, self.n_skipped)
    }
}

/// Mean reciprocal rank at `k`: per query, 1/rank of the first doc with
/// grade ≥ 1 inside the top k, else 0.
pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let mut sum = 0.0;
    let mut n_queries = 0;
    let mut n_skipped = 0;
    for (qid, ranking) in run.queries() {
        let Some(judged) = qrels.judgments(qid) else {
            n_skipped += 1;
            continue;
        };
        n_queries += 1;
        for (i, (docid, _)) in ranking.iter().take(k).enumerate() {
            if judged.get(docid).copied().unwrap_or(0) >= 1 {
                sum += 1.0 / (i + 1) as f64;
                break;
            }
        }
    }
    if n_queries == 0 {
        return Err(EvalError::NoJudgedQueries);
    }
    Ok(MetricReport {
        metric: "mrr".to_string(),
        k,
        value: sum / n_queries as f64,
        n_queries,
        n_skipped,
    })
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// Normalized DCG at `k` with exponential gain `2^grade − 1`. Judged
/// queries whose ideal DCG is zero are skipped and counted.
pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> Result<MetricReport, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let mut sum = 0.0;
    let mut n_queries = 0;
    let mut n_skipped = 0;
    for (qid, ranking) in run.queries() {
        let Some(judged) = qrels.judgments(qid) else {
            n_skipped += 1;
            continue;
        };
        let mut grades: Vec<u32> = judged.values().copied().collect();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 =
            grades.iter().take(k).enumerate().map(|(i, &g)| gain(g) / discount(i + 1)).sum();
        if idcg <= 0.0 {
            n_skipped += 1;
            continue;
        }
        let dcg: f64 = ranking
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, (docid, _))| {
                gain(judged.get(docid).copied().unwrap_or(0)) / discount(i + 1)
            })
            .sum();
        sum += dcg / idcg;
        n_queries += 1;
    }
    if n_queries == 0 {
        return Err(EvalError::NoJudgedQueries);
    }
    Ok(MetricReport {
        metric: "ndcg".to_string(),
        k,
        value: sum / n_queries as f64,
        n_queries,
        n_skipped,
    })
}

pub fn read_qrels(path: &Path) -> Result<Qrels, EvalError> {
    let r = BufReader::new(File::open(path)?);
    let mut qrels = Qrels::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [qid, _, docid, grade] = fields.as_slice() else {
            return Err(malformed(line_no, format!("expected 4 fields, got {}", fields.len())));
        };
        let grade: u32 =
            grade.parse().map_err(|_| malformed(line_no, "grade must be a non-negative integer"))?;
        qrels.insert(qid, docid, grade)?;
    }
    Ok(qrels)
}

pub fn read_run(path: &Path) -> Result<RunFile, EvalError> {
    let r = BufReader::new(File::open(path)?);
    let mut per_query: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [qid, _, docid, rank, score, _tag] = fields.as_slice() else {
            return Err(malformed(line_no, format!("expected 6 fields, got {}", fields.len())));
        };
        let rank: usize = rank.parse().map_err(|_| malformed(line_no, "bad rank"))?;
        let score: f64 = score.parse().map_err(|_| malformed(line_no, "bad score"))?;
        if !score.is_finite() {
            return Err(malformed(line_no, "non-finite score"));
        }
        per_query.entry(qid.to_string()).or_default().push((rank, docid.to_string(), score));
    }
    let mut run = RunFile::new();
    for (qid, mut rows) in per_query {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
            return Err(EvalError::BadRanks { qid });
        }
        let ranking: Vec<(String, f64)> = rows.into_iter().map(|(_, d, s)| (d, s)).collect();
        run.push_query(&qid, ranking)?;
    }
    Ok(run)
}

/// Writes the run in TREC format with 1-based ranks. Scores render with
/// full round-trip precision.
pub fn write_run(run: &RunFile, path: &Path, tag: &str) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    for (qid, ranking) in run.queries() {
        for (i, (docid, score)) in ranking.iter().enumerate() {
            writeln!(w, "{qid} Q0 {docid} {} {score} {tag}", i + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_of(entries: &[(&str, &[&str])]) -> RunFile {
        let mut run = RunFile::new();
        for (qid, docs) in entries {
            let ranking =
                docs.iter().enumerate().map(|(i, d)| (d.to_string(), 10.0 - i as f64)).collect();
            run.push_query(qid, ranking).unwrap();
        }
        run
    }

    fn qrels_of(entries: &[(&str, &str, u32)]) -> Qrels {
        let mut qrels = Qrels::new();
        for (qid, docid, grade) in entries {
            qrels.insert(qid, docid, *grade).unwrap();
        }
        qrels
    }

    #[test]
    fn mrr_rank_one_contributes_one() {
        let run = run_of(&[("q1", &["d1", "d2"])]);
        let qrels = qrels_of(&[("q1", "d1", 1)]);
        let report = mrr_at_k(&run, &qrels, 10).unwrap();
        assert_eq!(report.value, 1.0);
        assert_eq!(report.n_queries, 1);
    }

    #[test]
    fn mrr_mean_over_three_queries() {
        let run = run_of(&[
            ("q1", &["d1", "d2"]),
            ("q2", &["d3", "d4"]),
            ("q3", &["d5", "d6"]),
        ]);
        let qrels = qrels_of(&[
            ("q1", "d1", 1),
            ("q2", "d4", 2),
            ("q3", "d9", 1), // judged but never retrieved
        ]);
        let report = mrr_at_k(&run, &qrels, 10).unwrap();
        assert!((report.value - 0.5).abs() < 1e-12);
        assert_eq!(report.n_queries, 3);
        assert_eq!(report.n_skipped, 0);
    }

    #[test]
    fn mrr_ignores_relevance_beyond_k() {
        let run = run_of(&[("q1", &["d1", "d2", "d3"])]);
        let qrels = qrels_of(&[("q1", "d3", 1)]);
        let report = mrr_at_k(&run, &qrels, 2).unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn ndcg_of_ideal_ranking_is_one() {
        let run = run_of(&[("q1", &["d1", "d2", "d3"])]);
        let qrels = qrels_of(&[("q1", "d1", 3), ("q1", "d2", 1), ("q1", "d3", 0)]);
        let report = ndcg_at_k(&run, &qrels, 10).unwrap();
        assert!((report.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ndcg_single_relevant_at_rank_two() {
        let run = run_of(&[("q1", &["d2", "d1", "d3"])]);
        let qrels = qrels_of(&[("q1", "d1", 1)]);
        let report = ndcg_at_k(&run, &qrels, 10).unwrap();
        assert!((report.value - 0.6309297535714575).abs() < 1e-12);
    }

    #[test]
    fn ndcg_all_irrelevant_topk_is_zero() {
        let run = run_of(&[("q1", &["d1", "d2"])]);
        let qrels = qrels_of(&[("q1", "d7", 2)]);
        let report = ndcg_at_k(&run, &qrels, 10).unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn ndcg_skips_queries_with_zero_ideal_gain() {
        let run = run_of(&[("q1", &["d1"]), ("q2", &["d2"])]);
        let qrels = qrels_of(&[("q1", "d1", 0), ("q2", "d2", 1)]);
        let report = ndcg_at_k(&run, &qrels, 10).unwrap();
        assert_eq!(report.n_queries, 1);
        assert_eq!(report.n_skipped, 1);
        assert_eq!(report.value, 1.0);
    }

    #[test]
    fn unjudged_queries_are_skipped_and_counted() {
        let run = run_of(&[("q1", &["d1"]), ("q9", &["d1"])]);
        let qrels = qrels_of(&[("q1", "d1", 1)]);
        let report = mrr_at_k(&run, &qrels, 10).unwrap();
        assert_eq!(report.n_queries, 1);
        assert_eq!(report.n_skipped, 1);
    }

    #[test]
    fn fully_disjoint_run_and_qrels_is_an_error() {
        let run = run_of(&[("q1", &["d1"])]);
        let qrels = qrels_of(&[("q2", "d1", 1)]);
        assert!(matches!(mrr_at_k(&run, &qrels, 10), Err(EvalError::NoJudgedQueries)));
        assert!(matches!(ndcg_at_k(&run, &qrels, 10), Err(EvalError::NoJudgedQueries)));
    }

    #[test]
    fn duplicate_doc_in_ranking_is_rejected() {
        let mut run = RunFile::new();
        let err = run
            .push_query("q1", vec![("d1".into(), 2.0), ("d1".into(), 1.0)])
            .unwrap_err();
        assert!(matches!(err, EvalError::DuplicateDoc { .. }));
    }

    #[test]
    fn metrics_stay_within_unit_interval() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let mut run = RunFile::new();
            let mut qrels = Qrels::new();
            for q in 0..5 {
                let qid = format!("q{q}");
                let mut docs: Vec<usize> = (0..12).collect();
                docs.shuffle(&mut rng);
                let ranking: Vec<(String, f64)> = docs
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (format!("d{d}"), 20.0 - i as f64))
                    .collect();
                run.push_query(&qid, ranking).unwrap();
                for d in 0..12 {
                    if rng.gen_bool(0.3) {
                        qrels.insert(&qid, &format!("d{d}"), rng.gen_range(0..4)).unwrap();
                    }
                }
            }
            if let Ok(r) = mrr_at_k(&run, &qrels, 10) {
                assert!((0.0..=1.0).contains(&r.value));
            }
            if let Ok(r) = ndcg_at_k(&run, &qrels, 10) {
                assert!((0.0..=1.0).contains(&r.value));
            }
        }
    }

    #[test]
    fn permuting_docs_below_first_relevant_keeps_mrr() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let qrels = qrels_of(&[("q1", "d3", 1)]);
        let head = ["d0", "d1", "d3"];
        let mut tail = vec!["d4", "d5", "d6", "d7"];
        let mut last = None;
        for _ in 0..20 {
            tail.shuffle(&mut rng);
            let docs: Vec<&str> = head.iter().chain(tail.iter()).copied().collect();
            let run = run_of(&[("q1", &docs)]);
            let value = mrr_at_k(&run, &qrels, 10).unwrap().value;
            if let Some(prev) = last {
                assert_eq!(value, prev);
            }
            last = Some(value);
        }
        assert!((last.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn promoting_a_relevant_doc_never_hurts() {
        let qrels = qrels_of(&[("q1", "d5", 2), ("q1", "d1", 1)]);
        let before = run_of(&[("q1", &["d0", "d1", "d2", "d5"])]);
        // Swap d5 up one position.
        let after = run_of(&[("q1", &["d0", "d1", "d5", "d2"])]);
        for metric in [mrr_at_k, ndcg_at_k] {
            let b = metric(&before, &qrels, 10).unwrap().value;
            let a = metric(&after, &qrels, 10).unwrap().value;
            assert!(a >= b - 1e-12, "{a} < {b}");
        }
    }
}
