//! Representation-quality and distribution-shift statistics.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::VocabError;
use crate::ingest::EmbeddingMatrix;
use crate::par::{self, Exec};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, VocabError> {
    if a.len() != b.len() {
        return Err(VocabError::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(VocabError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Mean cosine between each query and its gold pool row.
    pub mean_cosine: f64,
    pub r_at_1: f64,
    pub correct: usize,
    pub queries: usize,
}

pub fn retrieval_r_at_1(
    queries: &EmbeddingMatrix,
    pool: &EmbeddingMatrix,
    gold: &[usize],
) -> Result<QualityReport, VocabError> {
    retrieval_r_at_1_with(queries, pool, gold, Exec::default())
}

/// Nearest pool row by cosine for each query (ties go to the lowest index);
/// R@1 is the fraction of queries whose nearest row is the gold one.
pub fn retrieval_r_at_1_with(
    queries: &EmbeddingMatrix,
    pool: &EmbeddingMatrix,
    gold: &[usize],
    exec: Exec,
) -> Result<QualityReport, VocabError> {
    if queries.dim() != pool.dim() {
        return Err(VocabError::DimensionMismatch(queries.dim(), pool.dim()));
    }
    if gold.len() != queries.vocab_size() {
        return Err(VocabError::LengthMismatch(gold.len(), queries.vocab_size()));
    }
    if pool.vocab_size() == 0 || queries.vocab_size() == 0 {
        return Err(VocabError::EmptyInput);
    }
    if let Some(&g) = gold.iter().find(|&&g| g >= pool.vocab_size()) {
        return Err(VocabError::GoldIndex { index: g, pool: pool.vocab_size() });
    }
    let pool_norms: Vec<f64> = pool.rows().map(norm).collect();
    if pool_norms.contains(&0.0) {
        return Err(VocabError::ZeroVector);
    }
    let idx: Vec<usize> = (0..queries.vocab_size()).collect();
    let per_query = par::try_map(exec, &idx, |&q| {
        let row = queries.row(q);
        let qn = norm(row);
        if qn == 0.0 {
            return Err(VocabError::ZeroVector);
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, (p, pn)) in pool.rows().zip(&pool_norms).enumerate() {
            let c = dot(row, p) / (qn * pn);
            if c > best.1 {
                best = (i, c);
            }
        }
        let g = gold[q];
        let gold_cos = dot(row, pool.row(g)) / (qn * pool_norms[g]);
        Ok((best.0 == g, gold_cos))
    })?;
    let correct = per_query.iter().filter(|(hit, _)| *hit).count();
    let n = per_query.len();
    Ok(QualityReport {
        mean_cosine: per_query.iter().map(|(_, c)| c).sum::<f64>() / n as f64,
        r_at_1: correct as f64 / n as f64,
        correct,
        queries: n,
    })
}

/// 1-based ranks with ties sharing their mean rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, VocabError> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(VocabError::Degenerate);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, VocabError> {
    if x.len() != y.len() {
        return Err(VocabError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(VocabError::Degenerate);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= l) = sqrt(2 pi)/l * sum exp(-(2k-1)^2 pi^2 / (8 l^2))
        let t = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            let term = (m * m * t).exp();
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Two-sample Kolmogorov-Smirnov statistic with an asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, VocabError> {
    if a.is_empty() || b.is_empty() {
        return Err(VocabError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = match a[i].total_cmp(&b[j]) {
            Ordering::Greater => b[j],
            _ => a[i],
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // once one sample is exhausted the gap only shrinks toward 0
    let effective = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(effective.sqrt() * d) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenShift {
    pub token_id: usize,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub per_token: Vec<TokenShift>,
    pub shift_tokens: Vec<usize>,
    pub shift_count: usize,
    /// Mean KS statistic over the shifted tokens; `None` when nothing shifted.
    pub shift_distance: Option<f64>,
}

pub fn ks_lottery(before: &EmbeddingMatrix, after: &EmbeddingMatrix, alpha: f64) -> Result<ShiftReport, VocabError> {
    ks_lottery_with(before, after, alpha, Exec::default())
}

/// Per-row KS test between two embedding snapshots; rows with `p < alpha` shifted.
pub fn ks_lottery_with(
    before: &EmbeddingMatrix,
    after: &EmbeddingMatrix,
    alpha: f64,
    exec: Exec,
) -> Result<ShiftReport, VocabError> {
    if before.vocab_size() != after.vocab_size() || before.dim() != after.dim() {
        return Err(VocabError::ShapeMismatch(before.vocab_size(), before.dim(), after.vocab_size(), after.dim()));
    }
    let idx: Vec<usize> = (0..before.vocab_size()).collect();
    let per_token = par::try_map(exec, &idx, |&i| {
        let r = ks_two_sample(before.row(i), after.row(i))?;
        Ok(TokenShift { token_id: i, statistic: r.statistic, p_value: r.p_value })
    })?;
    let shifted: Vec<&TokenShift> = per_token.iter().filter(|t| t.p_value < alpha).collect();
    let shift_distance = if shifted.is_empty() {
        None
    } else {
        Some(shifted.iter().map(|t| t.statistic).sum::<f64>() / shifted.len() as f64)
    };
    let shift_tokens: Vec<usize> = shifted.iter().map(|t| t.token_id).collect();
    Ok(ShiftReport { shift_count: shift_tokens.len(), shift_tokens, shift_distance, per_token })
}
