//! Fertility, candidate selection and mean-initialized vocabulary extension.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::{TokenizerModel, VocabError};
use crate::augment::{SegmentMode, SegmenterPolicy};
use crate::ingest::{EmbeddingMatrix, LanguageCode, MonolingualRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityReport {
    pub lang: LanguageCode,
    pub token_count: usize,
    pub base_unit_count: usize,
    pub fertility: f64,
}

/// Tokens per base unit over `corpus`. Base units are whitespace words, or
/// non-space characters for languages segmented per character (zh, ja).
/// Tokens are counted word by word, so separators never count as tokens.
pub fn fertility<'a>(
    tok: &TokenizerModel,
    corpus: impl IntoIterator<Item = &'a MonolingualRecord>,
    lang: &LanguageCode,
) -> Result<FertilityReport, VocabError> {
    let per_char = SegmenterPolicy::default().mode(lang) == SegmentMode::PerCharacter;
    let (mut tokens, mut units) = (0usize, 0usize);
    for rec in corpus {
        for word in rec.text.split_whitespace() {
            tokens += tok.encode(word).len();
            units += if per_char { word.graphemes(true).count() } else { 1 };
        }
    }
    if units == 0 {
        return Err(VocabError::EmptyInput);
    }
    Ok(FertilityReport {
        lang: lang.clone(),
        token_count: tokens,
        base_unit_count: units,
        fertility: tokens as f64 / units as f64,
    })
}

/// The `n` most frequent whitespace words that currently need two or more
/// tokens; frequency descending, ties in lexicographic order.
pub fn derive_candidates<'a>(
    corpus: impl IntoIterator<Item = &'a MonolingualRecord>,
    tok: &TokenizerModel,
    n: usize,
) -> Result<Vec<String>, VocabError> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for rec in corpus {
        for w in rec.text.split_whitespace() {
            *freq.entry(w).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().filter(|(w, _)| tok.encode(w).len() >= 2).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if ranked.len() < n {
        return Err(VocabError::InsufficientCandidates { wanted: n, found: ranked.len() });
    }
    Ok(ranked.into_iter().take(n).map(|(w, _)| w.to_string()).collect())
}

/// Append `candidates` as added tokens and give each a new embedding row
/// equal to the mean of all existing rows.
pub fn extend_vocab(
    tok: &TokenizerModel,
    candidates: &[String],
    emb: &EmbeddingMatrix,
) -> Result<(TokenizerModel, EmbeddingMatrix), VocabError> {
    if emb.vocab_size() != tok.len() {
        return Err(VocabError::EmbeddingSize { rows: emb.vocab_size(), vocab: tok.len() });
    }
    let new_tok = tok.with_added_tokens(candidates)?;
    let mut new_emb = emb.clone();
    if candidates.is_empty() {
        return Ok((new_tok, new_emb));
    }
    if emb.vocab_size() == 0 {
        return Err(VocabError::EmptyInput);
    }
    let mean = column_means(emb);
    for c in candidates {
        new_emb.push_row(&mean, Some(c.clone()));
    }
    Ok((new_tok, new_emb))
}

/// Arithmetic mean of every row of `emb`.
pub fn column_means(emb: &EmbeddingMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; emb.dim()];
    for row in emb.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = emb.vocab_size().max(1) as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}
