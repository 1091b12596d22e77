//! Readers for the tab-separated text inputs: raw queries and
//! distillation triples.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// `qid<TAB>text` rows. Query ids must be non-empty and free of
/// whitespace so they survive the run-file format.
pub fn read_queries(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read queries file {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let Some((qid, query)) = line.split_once('\t') else {
            bail!("{}:{}: expected qid<TAB>text", path.display(), i + 1);
        };
        if qid.is_empty() || qid.chars().any(char::is_whitespace) {
            bail!("{}:{}: bad query id {qid:?}", path.display(), i + 1);
        }
        rows.push((qid.to_string(), query.to_string()));
    }
    Ok(rows)
}

/// One distillation example read from disk; document ids are row
/// indexes into the accompanying collection.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleRow {
    pub qid: String,
    pub text: String,
    pub pos: u32,
    pub neg: u32,
    pub teacher_pos: f64,
    pub teacher_neg: f64,
}

/// `qid<TAB>query text<TAB>pos_doc<TAB>neg_doc<TAB>teacher_pos<TAB>teacher_neg` rows.
pub fn read_triples(path: &Path) -> Result<Vec<TripleRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read triples file {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            bail!("{}:{}: expected 6 tab-separated fields, found {}", path.display(), i + 1, fields.len());
        }
        let parse_u32 = |what: &str, s: &str| -> Result<u32> {
            s.parse().with_context(|| {
                format!("{}:{}: bad {what} \"{s}\"", path.display(), i + 1)
            })
        };
        let parse_f64 = |what: &str, s: &str| -> Result<f64> {
            let v: f64 = s.parse().with_context(|| {
                format!("{}:{}: bad {what} \"{s}\"", path.display(), i + 1)
            })?;
            if !v.is_finite() {
                bail!("{}:{}: non-finite {what}", path.display(), i + 1);
            }
            Ok(v)
        };
        rows.push(TripleRow {
            qid: fields[0].to_string(),
            text: fields[1].to_string(),
            pos: parse_u32("positive doc id", fields[2])?,
            neg: parse_u32("negative doc id", fields[3])?,
            teacher_pos: parse_f64("teacher score", fields[4])?,
            teacher_neg: parse_f64("teacher score", fields[5])?,
        });
    }
    Ok(rows)
}
