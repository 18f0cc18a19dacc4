//! Dictionary code-switching ("synonym random alignment").
//!
//! A sentence is lowercased, segmented into words, and each word that has a
//! lexicon translation in the drawn language is replaced with probability
//! `replace_prob` by a uniformly chosen synonym. Words without a
//! translation stay as they are.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::ingest::{LanguageCode, MonolingualRecord, Origin, SentencePair};
use crate::lexicon::Lexicon;
use crate::par::{self, Exec};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("no switch language available: pool minus {0} is empty")]
    EmptyPool(LanguageCode),
    #[error("replace probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("no augmented pairs with eligible positions")]
    EmptyInput,
}

/// Splits text into word spans for one language.
pub trait Segmenter: Send + Sync {
    fn segment(&self, text: &str) -> Vec<Range<usize>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    Whitespace,
    PerCharacter,
    Plugin,
}

/// Per-language segmentation choice. `zh`, `ja` and `zhtrad` default to
/// per-character; everything else splits on whitespace.
#[derive(Clone, Default)]
pub struct SegmenterPolicy {
    modes: HashMap<LanguageCode, SegmentMode>,
    plugins: HashMap<LanguageCode, Arc<dyn Segmenter>>,
}

impl fmt::Debug for SegmenterPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SegmenterPolicy")
            .field("modes", &self.modes)
            .field("plugins", &self.plugins.keys().collect::<Vec<_>>())
            .finish()
    }
}

const PER_CHARACTER_DEFAULT: [&str; 3] = ["zh", "ja", "zhtrad"];

impl SegmenterPolicy {
    pub fn mode(&self, lang: &LanguageCode) -> SegmentMode {
        if self.plugins.contains_key(lang) {
            return SegmentMode::Plugin;
        }
        if let Some(m) = self.modes.get(lang) {
            return *m;
        }
        if PER_CHARACTER_DEFAULT.contains(&lang.as_str()) {
            SegmentMode::PerCharacter
        } else {
            SegmentMode::Whitespace
        }
    }

    pub fn set_mode(&mut self, lang: LanguageCode, mode: SegmentMode) {
        self.modes.insert(lang, mode);
    }

    /// Register an external word segmenter (e.g. a Jieba binding) for `lang`.
    pub fn register(&mut self, lang: LanguageCode, seg: Arc<dyn Segmenter>) {
        self.plugins.insert(lang, seg);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub span: (usize, usize),
}

/// Segment `text` into words with byte spans.
pub fn segment<'a>(text: &'a str, lang: &LanguageCode, policy: &SegmenterPolicy) -> Vec<Token<'a>> {
    let spans: Vec<Range<usize>> = match policy.mode(lang) {
        SegmentMode::Plugin => policy.plugins[lang].segment(text),
        SegmentMode::Whitespace => whitespace_spans(text),
        SegmentMode::PerCharacter => text
            .grapheme_indices(true)
            .filter(|(_, g)| !g.chars().all(char::is_whitespace))
            .map(|(i, g)| i..i + g.len())
            .collect(),
    };
    spans.into_iter().map(|r| Token { text: &text[r.clone()], span: (r.start, r.end) }).collect()
}

fn whitespace_spans(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..text.len());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchStrategy {
    /// One language per sentence (parallel-data recipe).
    PerSentenceLanguage,
    /// A fresh language per word (monolingual-data recipe).
    PerWordLanguage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub replace_prob: f64,
    pub language_pool: BTreeSet<LanguageCode>,
    pub strategy: SwitchStrategy,
    pub seed: u64,
}

pub const DEFAULT_REPLACE_PROB: f64 = 0.90;

impl AugmentConfig {
    pub fn for_parallel(pool: impl IntoIterator<Item = LanguageCode>, seed: u64) -> Self {
        AugmentConfig {
            replace_prob: DEFAULT_REPLACE_PROB,
            language_pool: pool.into_iter().collect(),
            strategy: SwitchStrategy::PerSentenceLanguage,
            seed,
        }
    }

    pub fn for_monolingual(pool: impl IntoIterator<Item = LanguageCode>, seed: u64) -> Self {
        AugmentConfig { strategy: SwitchStrategy::PerWordLanguage, ..Self::for_parallel(pool, seed) }
    }

    pub fn with_prob(mut self, p: f64) -> Self {
        self.replace_prob = p;
        self
    }

    fn check(&self) -> Result<(), AugmentError> {
        if (0.0..=1.0).contains(&self.replace_prob) {
            Ok(())
        } else {
            Err(AugmentError::Probability(self.replace_prob))
        }
    }

    fn pool_without(&self, lang: &LanguageCode) -> Result<Vec<&LanguageCode>, AugmentError> {
        let pool: Vec<_> = self.language_pool.iter().filter(|l| *l != lang).collect();
        if pool.is_empty() {
            Err(AugmentError::EmptyPool(lang.clone()))
        } else {
            Ok(pool)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScope {
    TargetOnly,
    FullPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Replacement {
    pub position: usize,
    pub original: String,
    pub chosen: String,
    pub lang: LanguageCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AugmentBase {
    Parallel(SentencePair),
    Monolingual(MonolingualRecord),
}

/// A code-switched sentence paired with its untouched counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AugmentedPair {
    pub base: AugmentBase,
    pub switched_text: String,
    pub loss_scope: LossScope,
    pub replacements: Vec<Replacement>,
    /// Word positions that had at least one candidate translation.
    pub eligible: usize,
    /// The sentence-level switch language, when one was drawn.
    pub switch_lang: Option<LanguageCode>,
}

impl AugmentedPair {
    /// The code-switched side.
    pub fn src_text(&self) -> &str {
        &self.switched_text
    }

    /// The untouched side: the bitext target, or the original monolingual sentence.
    pub fn tgt_text(&self) -> &str {
        match &self.base {
            AugmentBase::Parallel(p) => &p.tgt_text,
            AugmentBase::Monolingual(m) => &m.text,
        }
    }

    pub fn src_lang(&self) -> &LanguageCode {
        match &self.base {
            AugmentBase::Parallel(p) => &p.src_lang,
            AugmentBase::Monolingual(m) => &m.lang,
        }
    }

    pub fn tgt_lang(&self) -> &LanguageCode {
        match &self.base {
            AugmentBase::Parallel(p) => &p.tgt_lang,
            AugmentBase::Monolingual(m) => &m.lang,
        }
    }

    pub fn to_record(&self) -> AugmentRecord {
        AugmentRecord {
            src_lang: self.src_lang().clone(),
            tgt_lang: self.tgt_lang().clone(),
            src_text: self.src_text().to_string(),
            tgt_text: self.tgt_text().to_string(),
            loss_scope: self.loss_scope,
            replacements: self.replacements.clone(),
            eligible: self.eligible,
            origin: Origin::Synthetic,
        }
    }
}

/// JSONL row for augmented output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub src_lang: LanguageCode,
    pub tgt_lang: LanguageCode,
    pub src_text: String,
    pub tgt_text: String,
    pub loss_scope: LossScope,
    pub replacements: Vec<Replacement>,
    pub eligible: usize,
    pub origin: Origin,
}

struct Switched {
    text: String,
    replacements: Vec<Replacement>,
    eligible: usize,
    switch_lang: Option<LanguageCode>,
}

fn switch_sentence<R: Rng + ?Sized>(
    text: &str,
    src_lang: &LanguageCode,
    lex: &Lexicon,
    cfg: &AugmentConfig,
    policy: &SegmenterPolicy,
    rng: &mut R,
) -> Result<Switched, AugmentError> {
    cfg.check()?;
    let pool = cfg.pool_without(src_lang)?;
    let lowered = text.to_lowercase();
    let tokens = segment(&lowered, src_lang, policy);
    let sentence_lang = match cfg.strategy {
        SwitchStrategy::PerSentenceLanguage => Some(pool[rng.random_range(0..pool.len())]),
        SwitchStrategy::PerWordLanguage => None,
    };

    let mut out = String::with_capacity(lowered.len());
    let mut cursor = 0;
    let mut replacements = Vec::new();
    let mut eligible = 0;
    for (position, tok) in tokens.iter().enumerate() {
        let lang = match sentence_lang {
            Some(l) => l,
            None => pool[rng.random_range(0..pool.len())],
        };
        let Some(syns) = lex.synonyms_lower(tok.text, src_lang, lang) else { continue };
        eligible += 1;
        if !rng.random_bool(cfg.replace_prob) {
            continue;
        }
        let chosen = &syns[rng.random_range(0..syns.len())];
        out.push_str(&lowered[cursor..tok.span.0]);
        out.push_str(chosen);
        cursor = tok.span.1;
        replacements.push(Replacement {
            position,
            original: tok.text.to_string(),
            chosen: chosen.clone(),
            lang: lang.clone(),
        });
    }
    out.push_str(&lowered[cursor..]);
    Ok(Switched { text: out, replacements, eligible, switch_lang: sentence_lang.cloned() })
}

/// Code-switch the source side of a bitext pair; loss falls on the target only.
pub fn code_switch_parallel<R: Rng + ?Sized>(
    pair: &SentencePair,
    lex: &Lexicon,
    cfg: &AugmentConfig,
    policy: &SegmenterPolicy,
    rng: &mut R,
) -> Result<AugmentedPair, AugmentError> {
    let s = switch_sentence(&pair.src_text, &pair.src_lang, lex, cfg, policy, rng)?;
    Ok(AugmentedPair {
        base: AugmentBase::Parallel(pair.clone()),
        switched_text: s.text,
        loss_scope: LossScope::TargetOnly,
        replacements: s.replacements,
        eligible: s.eligible,
        switch_lang: s.switch_lang,
    })
}

/// Code-switch a monolingual sentence into a pseudo-pair with itself; loss covers both sides.
pub fn code_switch_monolingual<R: Rng + ?Sized>(
    rec: &MonolingualRecord,
    lex: &Lexicon,
    cfg: &AugmentConfig,
    policy: &SegmenterPolicy,
    rng: &mut R,
) -> Result<AugmentedPair, AugmentError> {
    let s = switch_sentence(&rec.text, &rec.lang, lex, cfg, policy, rng)?;
    Ok(AugmentedPair {
        base: AugmentBase::Monolingual(rec.clone()),
        switched_text: s.text,
        loss_scope: LossScope::FullPair,
        replacements: s.replacements,
        eligible: s.eligible,
        switch_lang: s.switch_lang,
    })
}

/// Augment a batch of bitext pairs; record `i` draws from substream `i` of `cfg.seed`.
pub fn augment_parallel_batch(
    pairs: &[SentencePair],
    lex: &Lexicon,
    cfg: &AugmentConfig,
    policy: &SegmenterPolicy,
    exec: Exec,
) -> Result<Vec<AugmentedPair>, AugmentError> {
    par::map_indexed(exec, pairs, |i, p| {
        let mut rng = rng::indexed(cfg.seed, "augment", i as u64);
        code_switch_parallel(p, lex, cfg, policy, &mut rng)
    })
    .into_iter()
    .collect()
}

pub fn augment_monolingual_batch(
    records: &[MonolingualRecord],
    lex: &Lexicon,
    cfg: &AugmentConfig,
    policy: &SegmenterPolicy,
    exec: Exec,
) -> Result<Vec<AugmentedPair>, AugmentError> {
    par::map_indexed(exec, records, |i, r| {
        let mut rng = rng::indexed(cfg.seed, "augment", i as u64);
        code_switch_monolingual(r, lex, cfg, policy, &mut rng)
    })
    .into_iter()
    .collect()
}

/// Replacements over eligible positions, pooled across `pairs`.
pub fn estimate_replacement_rate<'a>(pairs: impl IntoIterator<Item = &'a AugmentedPair>) -> Result<f64, AugmentError> {
    let (mut replaced, mut eligible) = (0usize, 0usize);
    for p in pairs {
        replaced += p.replacements.len();
        eligible += p.eligible;
    }
    if eligible == 0 {
        return Err(AugmentError::EmptyInput);
    }
    Ok(replaced as f64 / eligible as f64)
}
