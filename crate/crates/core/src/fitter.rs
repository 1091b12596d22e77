//! Fits the score table's parameters by mini-batch gradient descent.
//!
//! The model is tiny: a weight vector `w` (one entry per embedding
//! dimension) and a bias `b`, pushed through the frozen embedding
//! matrix to produce every token's score. Training distills from
//! teacher scores over (query, positive doc, negative doc) triples,
//! with a ranking loss (KL over the pair's softmax, or MSE on margins)
//! plus a sparsity regularizer (L1 or FLOPS) applied to the encoded
//! queries. Documents are frozen inputs, so the document-side
//! regularizer is computed and logged but contributes no gradient.
//!
//! Everything here runs in f64 with fixed summation orders, so a fit is
//! reproducible bit-for-bit from its seed.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoder::{self, build_table, EmbeddingMatrix, ScoreTable, TokenSequence};
use crate::sparse::{SparseVector, TokenId};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("dimension mismatch: w has {w_dim} components, embeddings have {e_dim}")]
    DimensionMismatch { w_dim: usize, e_dim: usize },
    #[error("token id {id} beyond embedding vocab of {vocab_size}")]
    TokenOutOfRange { id: TokenId, vocab_size: u32 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("no training triples")]
    NoTriples,
    #[error("non-finite teacher score in triple {triple}")]
    BadTeacher { triple: usize },
    #[error("invalid config: {0}")]
    BadConfig(&'static str),
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Kl,
    MarginMse,
    /// Plain per-document MSE against the teacher scores, mean of the
    /// two squared errors.
    PointwiseMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    L1,
    Flops,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub loss: LossKind,
    pub reg: Regularizer,
    /// Query regularization strength.
    pub lambda_q: f64,
    /// Document regularization strength. Reported in the log only;
    /// documents are frozen, so it never produces a gradient.
    pub lambda_d: f64,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            loss: LossKind::Kl,
            reg: Regularizer::L1,
            lambda_q: 0.0,
            lambda_d: 0.0,
            lr: 1e-2,
            steps: 1000,
            batch_size: 32,
            seed: 42,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(FitError::BadConfig("lr must be positive and finite"));
        }
        if self.batch_size == 0 {
            return Err(FitError::BadConfig("batch_size must be at least 1"));
        }
        if !(self.lambda_q >= 0.0 && self.lambda_q.is_finite()) {
            return Err(FitError::BadConfig("lambda_q must be non-negative and finite"));
        }
        if !(self.lambda_d >= 0.0 && self.lambda_d.is_finite()) {
            return Err(FitError::BadConfig("lambda_d must be non-negative and finite"));
        }
        Ok(())
    }
}

/// One distillation example: a tokenized query, a positive and a
/// negative document, and the teacher's scores for both.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTriple {
    pub query: TokenSequence,
    pub pos: SparseVector,
    pub neg: SparseVector,
    pub teacher_pos: f64,
    pub teacher_neg: f64,
}

/// Trainable parameters plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    pub w: Vec<f64>,
    pub b: f64,
    pub step: usize,
}

impl FitState {
    /// Fresh parameters: `w` uniform in `[-1/sqrt(d), 1/sqrt(d)]`,
    /// `b` = 0.
    pub fn init(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_from_rng(dim, &mut rng)
    }

    fn init_from_rng(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        let w = (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect();
        FitState { w, b: 0.0, step: 0 }
    }
}

/// Loss components at one step. `total` is what the gradient descends:
/// rank_loss + λ_q·reg_q + λ_d·reg_d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub rank_loss: f64,
    pub reg_q: f64,
    pub reg_d: f64,
    pub total: f64,
}

/// One training-log line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub rank_loss: f64,
    pub reg_q: f64,
    pub reg_d: f64,
    pub total: f64,
}

impl LogRow {
    pub const CSV_HEADER: &'static str = "step,rank_loss,reg_q,reg_d,total";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.step, self.rank_loss, self.reg_q, self.reg_d, self.total)
    }
}

/// Everything a fit returns: final parameters, the materialized table,
/// and the per-step loss log.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub state: FitState,
    pub table: ScoreTable,
    pub log: Vec<LogRow>,
}

/// Scores one (query, doc) pair directly from parameters, with the
/// same semantics as encoding the query through a built table and
/// taking the dot product: per distinct token, count × score ×
/// document weight.
pub fn student_score(
    q_tokens: &TokenSequence,
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    doc: &SparseVector,
) -> Result<f64, FitError> {
    if w.len() != emb.dim() as usize {
        return Err(FitError::DimensionMismatch { w_dim: w.len(), e_dim: emb.dim() as usize });
    }
    let mut counts: BTreeMap<TokenId, u32> = BTreeMap::new();
    for &id in q_tokens.ids() {
        if id >= emb.vocab_size() {
            return Err(FitError::TokenOutOfRange { id, vocab_size: emb.vocab_size() });
        }
        *counts.entry(id).or_insert(0) += 1;
    }
    let mut score = 0.0;
    for (t, c) in counts {
        let s = encoder::saturate(encoder::preactivation(w, b, emb.row(t)));
        score += c as f64 * s * doc.weight(t);
    }
    Ok(score)
}

fn softmax2(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let z = ea + eb;
    (ea / z, eb / z)
}

/// KL divergence from the teacher pair's softmax to the student
/// pair's. Zero exactly when the score margins agree.
pub fn loss_kl(s_pos: f64, s_neg: f64, t_pos: f64, t_neg: f64) -> f64 {
    let (qp, qn) = softmax2(t_pos, t_neg);
    let (pp, pn) = softmax2(s_pos, s_neg);
    qp * (qp.ln() - pp.ln()) + qn * (qn.ln() - pn.ln())
}

/// Squared error between student and teacher margins.
pub fn loss_margin_mse(s_pos: f64, s_neg: f64, t_pos: f64, t_neg: f64) -> f64 {
    let d = (s_pos - s_neg) - (t_pos - t_neg);
    d * d
}

/// Mean of the two per-document squared errors.
pub fn loss_pointwise_mse(s_pos: f64, s_neg: f64, t_pos: f64, t_neg: f64) -> f64 {
    let dp = s_pos - t_pos;
    let dn = s_neg - t_neg;
    (dp * dp + dn * dn) / 2.0
}

/// Loss value and its partials w.r.t. (s_pos, s_neg).
fn rank_loss_grad(
    kind: LossKind,
    s_pos: f64,
    s_neg: f64,
    t_pos: f64,
    t_neg: f64,
) -> (f64, f64, f64) {
    match kind {
        LossKind::Kl => {
            let (qp, qn) = softmax2(t_pos, t_neg);
            let (pp, pn) = softmax2(s_pos, s_neg);
            let loss = qp * (qp.ln() - pp.ln()) + qn * (qn.ln() - pn.ln());
            (loss, pp - qp, pn - qn)
        }
        LossKind::MarginMse => {
            let d = (s_pos - s_neg) - (t_pos - t_neg);
            (d * d, 2.0 * d, -2.0 * d)
        }
        LossKind::PointwiseMse => {
            let dp = s_pos - t_pos;
            let dn = s_neg - t_neg;
            ((dp * dp + dn * dn) / 2.0, dp, dn)
        }
    }
}

fn l1_over<'a>(batch: impl ExactSizeIterator<Item = &'a SparseVector>) -> f64 {
    let n = batch.len() as f64;
    batch.map(SparseVector::l1_norm).sum::<f64>() / n
}

fn flops_over<'a>(vectors: &[&'a SparseVector]) -> f64 {
    let n = vectors.len() as f64;
    let mut mean: BTreeMap<TokenId, f64> = BTreeMap::new();
    for v in vectors {
        for &(t, w) in v.entries() {
            *mean.entry(t).or_insert(0.0) += w / n;
        }
    }
    mean.values().map(|m| m * m).sum()
}

/// Mean L1 norm over the batch.
pub fn reg_l1(batch: &[SparseVector]) -> Result<f64, FitError> {
    if batch.is_empty() {
        return Err(FitError::EmptyBatch);
    }
    Ok(l1_over(batch.iter()))
}

/// Sum over coordinates of the squared batch-mean weight (absent
/// entries count as zero).
pub fn reg_flops(batch: &[SparseVector]) -> Result<f64, FitError> {
    if batch.is_empty() {
        return Err(FitError::EmptyBatch);
    }
    let refs: Vec<&SparseVector> = batch.iter().collect();
    Ok(flops_over(&refs))
}

/// Per-token forward pass, shared by every triple in a batch: the
/// score and its derivative w.r.t. the pre-activation.
struct TokenCalc {
    s: f64,
    dsda: f64,
}

fn token_calcs(
    batch: &[&TrainTriple],
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
) -> Result<BTreeMap<TokenId, TokenCalc>, FitError> {
    if w.len() != emb.dim() as usize {
        return Err(FitError::DimensionMismatch { w_dim: w.len(), e_dim: emb.dim() as usize });
    }
    let mut calcs = BTreeMap::new();
    for triple in batch {
        for &id in triple.query.ids() {
            if id >= emb.vocab_size() {
                return Err(FitError::TokenOutOfRange { id, vocab_size: emb.vocab_size() });
            }
            calcs.entry(id).or_insert_with(|| {
                let a = encoder::preactivation(w, b, emb.row(id));
                if a > 0.0 {
                    TokenCalc { s: a.ln_1p(), dsda: 1.0 / (1.0 + a) }
                } else {
                    TokenCalc { s: 0.0, dsda: 0.0 }
                }
            });
        }
    }
    Ok(calcs)
}

fn count_tokens(q: &TokenSequence) -> BTreeMap<TokenId, u32> {
    let mut counts = BTreeMap::new();
    for &id in q.ids() {
        *counts.entry(id).or_insert(0u32) += 1;
    }
    counts
}

fn encode_from_calcs(
    counts: &BTreeMap<TokenId, u32>,
    calcs: &BTreeMap<TokenId, TokenCalc>,
) -> SparseVector {
    let entries: Vec<(TokenId, f64)> = counts
        .iter()
        .filter(|(t, _)| calcs[t].s > 0.0)
        .map(|(&t, &c)| (t, c as f64 * calcs[&t].s))
        .collect();
    SparseVector::from_sorted(entries)
}

fn stats_from(cfg: &FitConfig, rank_loss: f64, reg_q: f64, reg_d: f64) -> StepStats {
    StepStats {
        rank_loss,
        reg_q,
        reg_d,
        total: rank_loss + cfg.lambda_q * reg_q + cfg.lambda_d * reg_d,
    }
}

fn batch_objective_refs(
    batch: &[&TrainTriple],
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    cfg: &FitConfig,
) -> Result<StepStats, FitError> {
    if batch.is_empty() {
        return Err(FitError::EmptyBatch);
    }
    let calcs = token_calcs(batch, w, b, emb)?;
    let n = batch.len() as f64;
    let mut rank_sum = 0.0;
    let mut encoded = Vec::with_capacity(batch.len());
    for triple in batch {
        let counts = count_tokens(&triple.query);
        let mut s_pos = 0.0;
        let mut s_neg = 0.0;
        for (t, &c) in &counts {
            let cs = c as f64 * calcs[t].s;
            s_pos += cs * triple.pos.weight(*t);
            s_neg += cs * triple.neg.weight(*t);
        }
        rank_sum +=
            rank_loss_grad(cfg.loss, s_pos, s_neg, triple.teacher_pos, triple.teacher_neg).0;
        encoded.push(encode_from_calcs(&counts, &calcs));
    }
    let enc_refs: Vec<&SparseVector> = encoded.iter().collect();
    let reg_q = match cfg.reg {
        Regularizer::L1 => l1_over(enc_refs.iter().copied()),
        Regularizer::Flops => flops_over(&enc_refs),
    };
    let doc_refs: Vec<&SparseVector> =
        batch.iter().flat_map(|t| [&t.pos, &t.neg]).collect();
    let reg_d = match cfg.reg {
        Regularizer::L1 => l1_over(doc_refs.iter().copied()),
        Regularizer::Flops => flops_over(&doc_refs),
    };
    Ok(stats_from(cfg, rank_sum / n, reg_q, reg_d))
}

/// The Eq.-style total objective on one batch at the given parameters,
/// without touching any state. This is the function the analytic
/// gradients are checked against.
pub fn batch_objective(
    batch: &[TrainTriple],
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    cfg: &FitConfig,
) -> Result<StepStats, FitError> {
    let refs: Vec<&TrainTriple> = batch.iter().collect();
    batch_objective_refs(&refs, w, b, emb, cfg)
}

fn batch_gradient_refs(
    batch: &[&TrainTriple],
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    cfg: &FitConfig,
) -> Result<(StepStats, Vec<f64>, f64), FitError> {
    if batch.is_empty() {
        return Err(FitError::EmptyBatch);
    }
    let calcs = token_calcs(batch, w, b, emb)?;
    let n = batch.len() as f64;

    // d(total)/d(pre-activation) per token, accumulated over the batch.
    let mut dla: BTreeMap<TokenId, f64> = BTreeMap::new();
    let mut rank_sum = 0.0;
    let mut encoded = Vec::with_capacity(batch.len());
    let mut all_counts = Vec::with_capacity(batch.len());
    for triple in batch {
        let counts = count_tokens(&triple.query);
        let mut s_pos = 0.0;
        let mut s_neg = 0.0;
        for (t, &c) in &counts {
            let cs = c as f64 * calcs[t].s;
            s_pos += cs * triple.pos.weight(*t);
            s_neg += cs * triple.neg.weight(*t);
        }
        let (loss, dlp, dln) =
            rank_loss_grad(cfg.loss, s_pos, s_neg, triple.teacher_pos, triple.teacher_neg);
        rank_sum += loss;
        for (t, &c) in &counts {
            let calc = &calcs[t];
            let coeff = (dlp * triple.pos.weight(*t) + dln * triple.neg.weight(*t))
                * c as f64
                * calc.dsda
                / n;
            *dla.entry(*t).or_insert(0.0) += coeff;
        }
        encoded.push(encode_from_calcs(&counts, &calcs));
        all_counts.push(counts);
    }

    let enc_refs: Vec<&SparseVector> = encoded.iter().collect();
    let reg_q = match cfg.reg {
        Regularizer::L1 => {
            for counts in &all_counts {
                for (t, &c) in counts {
                    *dla.entry(*t).or_insert(0.0) +=
                        cfg.lambda_q * c as f64 * calcs[t].dsda / n;
                }
            }
            l1_over(enc_refs.iter().copied())
        }
        Regularizer::Flops => {
            let mut ybar: BTreeMap<TokenId, f64> = BTreeMap::new();
            for counts in &all_counts {
                for (t, &c) in counts {
                    *ybar.entry(*t).or_insert(0.0) += c as f64 * calcs[t].s / n;
                }
            }
            for counts in &all_counts {
                for (t, &c) in counts {
                    *dla.entry(*t).or_insert(0.0) +=
                        cfg.lambda_q * 2.0 * ybar[t] * c as f64 * calcs[t].dsda / n;
                }
            }
            ybar.values().map(|m| m * m).sum()
        }
    };

    let doc_refs: Vec<&SparseVector> =
        batch.iter().flat_map(|t| [&t.pos, &t.neg]).collect();
    let reg_d = match cfg.reg {
        Regularizer::L1 => l1_over(doc_refs.iter().copied()),
        Regularizer::Flops => flops_over(&doc_refs),
    };

    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (t, &g) in &dla {
        let row = emb.row(*t);
        for (j, gj) in gw.iter_mut().enumerate() {
            *gj += g * f64::from(row[j]);
        }
        gb += g;
    }

    Ok((stats_from(cfg, rank_sum / n, reg_q, reg_d), gw, gb))
}

/// Analytic gradient of [`batch_objective`] w.r.t. `(w, b)`, plus the
/// loss components at the evaluation point.
pub fn batch_gradient(
    batch: &[TrainTriple],
    w: &[f64],
    b: f64,
    emb: &EmbeddingMatrix,
    cfg: &FitConfig,
) -> Result<(StepStats, Vec<f64>, f64), FitError> {
    let refs: Vec<&TrainTriple> = batch.iter().collect();
    batch_gradient_refs(&refs, w, b, emb, cfg)
}

/// One gradient-descent update. Returns the advanced state and the
/// loss components measured before the update.
pub fn grad_step(
    state: FitState,
    batch: &[TrainTriple],
    cfg: &FitConfig,
    emb: &EmbeddingMatrix,
) -> Result<(FitState, StepStats), FitError> {
    let refs: Vec<&TrainTriple> = batch.iter().collect();
    grad_step_refs(state, &refs, cfg, emb)
}

fn grad_step_refs(
    state: FitState,
    batch: &[&TrainTriple],
    cfg: &FitConfig,
    emb: &EmbeddingMatrix,
) -> Result<(FitState, StepStats), FitError> {
    cfg.validate()?;
    let (stats, gw, gb) = batch_gradient_refs(batch, &state.w, state.b, emb, cfg)?;
    if !stats.total.is_finite() {
        return Err(FitError::Diverged { step: state.step });
    }
    let mut w = state.w;
    for (wj, gj) in w.iter_mut().zip(&gw) {
        *wj -= cfg.lr * gj;
    }
    let b = state.b - cfg.lr * gb;
    if !b.is_finite() || w.iter().any(|x| !x.is_finite()) {
        return Err(FitError::Diverged { step: state.step });
    }
    Ok((FitState { w, b, step: state.step + 1 }, stats))
}

/// Runs `cfg.steps` mini-batch updates over the triples (reshuffling
/// each epoch from the seed) and materializes the fitted table, zeroing
/// the given special tokens.
pub fn fit(
    triples: &[TrainTriple],
    emb: &EmbeddingMatrix,
    cfg: &FitConfig,
    special_ids: &[TokenId],
) -> Result<FitOutcome, FitError> {
    cfg.validate()?;
    if triples.is_empty() {
        return Err(FitError::NoTriples);
    }
    for (i, t) in triples.iter().enumerate() {
        if !t.teacher_pos.is_finite() || !t.teacher_neg.is_finite() {
            return Err(FitError::BadTeacher { triple: i });
        }
        for &id in t.query.ids() {
            if id >= emb.vocab_size() {
                return Err(FitError::TokenOutOfRange { id, vocab_size: emb.vocab_size() });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = FitState::init_from_rng(emb.dim() as usize, &mut rng);
    let mut log = Vec::with_capacity(cfg.steps);

    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut cursor = order.len(); // force a shuffle before the first batch
    while state.step < cfg.steps {
        if cursor >= order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let batch: Vec<&TrainTriple> = order[cursor..end].iter().map(|&i| &triples[i]).collect();
        cursor = end;
        let step = state.step;
        let (next, stats) = grad_step_refs(state, &batch, cfg, emb)?;
        state = next;
        log.push(LogRow {
            step,
            rank_loss: stats.rank_loss,
            reg_q: stats.reg_q,
            reg_d: stats.reg_d,
            total: stats.total,
        });
    }

    let table = build_table(&state.w, state.b, emb, special_ids).map_err(|e| match e {
        encoder::EncoderError::TokenOutOfRange { id, .. } => {
            FitError::TokenOutOfRange { id, vocab_size: emb.vocab_size() }
        }
        _ => FitError::DimensionMismatch { w_dim: state.w.len(), e_dim: emb.dim() as usize },
    })?;
    Ok(FitOutcome { state, table, log })
}
