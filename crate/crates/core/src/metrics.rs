//! Corpus BLEU / spBLEU, language-ratio reports and pivot translation.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{LabelFile, LanguageCode};
use crate::par::{self, Exec};
use crate::provider::{ProviderError, TranslationProvider};
use crate::vocab::TokenizerModel;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("max_n must be at least 1")]
    MaxN,
    #[error("bad smoothing {0:?} (expected none or add-k:K)")]
    Smoothing(String),
    #[error("no labels")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "k")]
pub enum Smoothing {
    #[default]
    None,
    /// adds k to matches and totals of every order above 1
    AddK(f64),
}

impl FromStr for Smoothing {
    type Err = MetricsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(Smoothing::None);
        }
        let k = s
            .strip_prefix("add-k:")
            .and_then(|k| k.parse::<f64>().ok())
            .filter(|k| k.is_finite() && *k > 0.0)
            .ok_or_else(|| MetricsError::Smoothing(s.to_string()))?;
        Ok(Smoothing::AddK(k))
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::None => f.write_str("none"),
            Smoothing::AddK(k) => write!(f, "add-k:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
}

fn ngram_counts<T: Eq + Hash>(toks: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn sentence_stats<T: Eq + Hash>(hyp: &[T], refr: &[T], max_n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut matches = vec![0; max_n];
    let mut totals = vec![0; max_n];
    for n in 1..=max_n {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(refr, n);
        totals[n - 1] = hyp.len().saturating_sub(n - 1);
        matches[n - 1] = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    }
    (matches, totals)
}

/// Corpus BLEU over pre-tokenized sequences.
pub fn corpus_bleu_tokens<T>(
    hyps: &[Vec<T>],
    refs: &[Vec<T>],
    max_n: usize,
    smoothing: Smoothing,
    exec: Exec,
) -> Result<BleuScore, MetricsError>
where
    T: Eq + Hash + Sync,
{
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if max_n == 0 {
        return Err(MetricsError::MaxN);
    }
    let pairs: Vec<(&Vec<T>, &Vec<T>)> = hyps.iter().zip(refs).collect();
    let stats = par::map(exec, &pairs, |(h, r)| sentence_stats(h, r, max_n));
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    for (m, t) in stats {
        for i in 0..max_n {
            matches[i] += m[i];
            totals[i] += t[i];
        }
    }
    let hyp_len: usize = hyps.iter().map(Vec::len).sum();
    let ref_len: usize = refs.iter().map(Vec::len).sum();

    let precisions: Vec<f64> = (0..max_n)
        .map(|i| {
            let (m, t) = (matches[i] as f64, totals[i] as f64);
            match smoothing {
                Smoothing::AddK(k) if i > 0 => (m + k) / (t + k),
                _ if t == 0.0 => 0.0,
                _ => m / t,
            }
        })
        .collect();

    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.iter().any(|&p| p <= 0.0) || brevity_penalty == 0.0 {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / max_n as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore { score, precisions, brevity_penalty, hyp_len, ref_len, matches, totals })
}

/// Corpus BLEU with whitespace tokenization.
pub fn corpus_bleu(
    hyps: &[String],
    refs: &[String],
    max_n: usize,
    smoothing: Smoothing,
) -> Result<BleuScore, MetricsError> {
    let split = |xs: &[String]| -> Vec<Vec<String>> {
        xs.iter().map(|s| s.split_whitespace().map(String::from).collect()).collect()
    };
    corpus_bleu_tokens(&split(hyps), &split(refs), max_n, smoothing, Exec::default())
}

/// BLEU over subword ids from `tok`.
pub fn spbleu(
    hyps: &[String],
    refs: &[String],
    tok: &TokenizerModel,
    smoothing: Smoothing,
    exec: Exec,
) -> Result<BleuScore, MetricsError> {
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    let h = tok.encode_batch(hyps, exec);
    let r = tok.encode_batch(refs, exec);
    corpus_bleu_tokens(&h, &r, 4, smoothing, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub target: LanguageCode,
    pub contrast: LanguageCode,
    pub r_target: f64,
    pub r_contrast: f64,
    pub target_count: usize,
    pub contrast_count: usize,
    pub n: usize,
}

/// Fractions of sentences labeled `target` and `contrast`.
pub fn language_ratio(
    labels: &LabelFile,
    target: &LanguageCode,
    contrast: &LanguageCode,
) -> Result<RatioReport, MetricsError> {
    let n = labels.len();
    if n == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let count = |l: &LanguageCode| labels.entries.iter().filter(|(_, x)| x == l).count();
    let (tc, cc) = (count(target), count(contrast));
    Ok(RatioReport {
        target: target.clone(),
        contrast: contrast.clone(),
        r_target: tc as f64 / n as f64,
        r_contrast: cc as f64 / n as f64,
        target_count: tc,
        contrast_count: cc,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PivotStage {
    SrcToPivot,
    PivotToTgt,
}

impl fmt::Display for PivotStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotStage::SrcToPivot => "source->pivot",
            PivotStage::PivotToTgt => "pivot->target",
        })
    }
}

#[derive(Debug, Error)]
pub enum PivotError {
    #[error("pivot needs three distinct languages, got {src}/{pivot}/{tgt}")]
    SameLanguage { src: LanguageCode, pivot: LanguageCode, tgt: LanguageCode },
    #[error("{stage} stage: {source}")]
    Provider {
        stage: PivotStage,
        #[source]
        source: ProviderError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotOutput {
    /// intermediate translations
    pub pivot: Vec<String>,
    pub output: Vec<String>,
}

/// `src -> pivot -> tgt` through one provider.
pub fn pivot_translate<P: TranslationProvider + ?Sized>(
    provider: &P,
    sentences: &[String],
    src: &LanguageCode,
    pivot: &LanguageCode,
    tgt: &LanguageCode,
) -> Result<PivotOutput, PivotError> {
    if src == pivot || pivot == tgt || src == tgt {
        return Err(PivotError::SameLanguage { src: src.clone(), pivot: pivot.clone(), tgt: tgt.clone() });
    }
    if sentences.is_empty() {
        return Ok(PivotOutput { pivot: vec![], output: vec![] });
    }
    let stage = |stage| move |source| PivotError::Provider { stage, source };
    let mid = provider.translate(sentences, src, pivot).map_err(stage(PivotStage::SrcToPivot))?;
    if mid.len() != sentences.len() {
        return Err(stage(PivotStage::SrcToPivot)(ProviderError::LengthMismatch {
            expected: sentences.len(),
            got: mid.len(),
        }));
    }
    let output = provider.translate(&mid, pivot, tgt).map_err(stage(PivotStage::PivotToTgt))?;
    if output.len() != mid.len() {
        return Err(stage(PivotStage::PivotToTgt)(ProviderError::LengthMismatch {
            expected: mid.len(),
            got: output.len(),
        }));
    }
    Ok(PivotOutput { pivot: mid, output })
}
