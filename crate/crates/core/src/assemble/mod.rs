//! Epoch construction: connected bitext records, monolingual blocks,
//! low-resource replication, pivot-synthesized fill, and the seeded shuffle.

mod epoch;
mod output;
mod sources;
mod stage;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AugmentError, AugmentedPair};
use crate::ingest::{Direction, DirectionChoice, IngestError, LanguageCode, MonolingualRecord, Origin, SentencePair};
use crate::lexicon::LexiconError;
use crate::provider::ProviderError;
use crate::vocab::TokenizerModel;

pub use epoch::{build_epoch, pair_key, DirectionStats, synthesize_pivot_pairs, EpochConfig, EpochOutput, EpochPlan, MonoPlan, PairPlan};
pub use output::{write_epoch, InputChecksum, Manifest, ShardEntry};
pub use sources::{load_sources, EpochSources, SourcePaths};
pub use stage::{stage_sample, PairQuota, StageConfig, StageQuotas};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("English pool has {available} usable sentences, {needed} needed")]
    InsufficientPool { needed: usize, available: usize },
    #[error("{src}->{tgt}: {source}")]
    Provider {
        src: LanguageCode,
        tgt: LanguageCode,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("pair {s}-{t}: {source}")]
    InPair {
        s: LanguageCode,
        t: LanguageCode,
        #[source]
        source: Box<AssembleError>,
    },
    #[error("language {0} is not part of the epoch")]
    UnknownLanguage(LanguageCode),
    #[error("unknown pair {0}")]
    UnknownPair(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Where a training record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordOrigin {
    Monolingual,
    Natural,
    Replicated,
    Synthetic,
}

impl From<Origin> for RecordOrigin {
    fn from(o: Origin) -> Self {
        match o {
            Origin::Natural => RecordOrigin::Natural,
            Origin::Replicated => RecordOrigin::Replicated,
            Origin::Synthetic => RecordOrigin::Synthetic,
        }
    }
}

impl fmt::Display for RecordOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordOrigin::Monolingual => "monolingual",
            RecordOrigin::Natural => "natural",
            RecordOrigin::Replicated => "replicated",
            RecordOrigin::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordMeta {
    /// language of the first segment
    pub src_lang: LanguageCode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tgt_lang: Option<LanguageCode>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<Direction>,
    pub origin: RecordOrigin,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage: Option<u8>,
}

/// One training sequence. `loss_spans` are half-open byte ranges of `text`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub text: String,
    pub loss_spans: Vec<(usize, usize)>,
    /// exact token ids for monolingual blocks
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tokens: Option<Vec<u32>>,
    pub meta: RecordMeta,
}

impl TrainingRecord {
    /// Spans sorted, disjoint, non-empty and inside `text`.
    pub fn spans_valid(&self) -> bool {
        let mut prev = 0;
        for &(a, b) in &self.loss_spans {
            if a < prev || a >= b || b > self.text.len() {
                return false;
            }
            prev = b;
        }
        true
    }

    /// Unordered language pair of a bitext record, smaller code first.
    pub fn pair(&self) -> Option<(LanguageCode, LanguageCode)> {
        let t = self.meta.tgt_lang.clone()?;
        let s = self.meta.src_lang.clone();
        Some(if s <= t { (s, t) } else { (t, s) })
    }
}

/// `first + " " + second` with loss on the whole text.
pub fn make_connected_record<R: Rng + ?Sized>(pair: &SentencePair, choice: DirectionChoice, rng: &mut R) -> TrainingRecord {
    let direction = choice.resolve(rng);
    let p = match direction {
        Direction::Forward => pair.clone(),
        Direction::Backward => pair.swapped(),
    };
    let text = format!("{} {}", p.src_text, p.tgt_text);
    TrainingRecord {
        loss_spans: vec![(0, text.len())],
        text,
        tokens: None,
        meta: RecordMeta {
            src_lang: p.src_lang,
            tgt_lang: Some(p.tgt_lang),
            direction: Some(direction),
            origin: pair.origin.into(),
            stage: None,
        },
    }
}

/// `switched_source + " " + target` with loss on the target only. The pair is
/// expected to be oriented already; `direction` is recorded as given.
pub fn make_augmented_record(aug: &AugmentedPair, direction: Direction) -> TrainingRecord {
    let tgt = aug.tgt_text();
    let text = format!("{} {}", aug.switched_text, tgt);
    let start = aug.switched_text.len() + 1;
    TrainingRecord {
        loss_spans: vec![(start, text.len())],
        text,
        tokens: None,
        meta: RecordMeta {
            src_lang: aug.src_lang().clone(),
            tgt_lang: Some(aug.tgt_lang().clone()),
            direction: Some(direction),
            origin: RecordOrigin::Synthetic,
            stage: None,
        },
    }
}

/// Split a monolingual text into consecutive windows of `block_size` tokens.
/// Text is the lossy decode of each window; `tokens` keeps the exact ids.
pub fn block_split(rec: &MonolingualRecord, tok: &TokenizerModel, block_size: usize) -> Vec<TrainingRecord> {
    assert!(block_size >= 1, "block_size must be at least 1");
    let ids = tok.encode(&rec.text);
    ids.chunks(block_size)
        .map(|chunk| {
            let text = tok.decode_lossy(chunk);
            TrainingRecord {
                loss_spans: if text.is_empty() { vec![] } else { vec![(0, text.len())] },
                text,
                tokens: Some(chunk.to_vec()),
                meta: RecordMeta {
                    src_lang: rec.lang.clone(),
                    tgt_lang: None,
                    direction: None,
                    origin: RecordOrigin::Monolingual,
                    stage: None,
                },
            }
        })
        .collect()
}

/// Below `threshold`, every pair `factor` times: the originals first, then
/// whole copies marked replicated. At or above it, the input unchanged.
pub fn replicate_low_resource(pairs: &[SentencePair], threshold: usize, factor: usize) -> Vec<SentencePair> {
    assert!(factor >= 1, "factor must be at least 1");
    if pairs.len() >= threshold {
        return pairs.to_vec();
    }
    let mut out = Vec::with_capacity(pairs.len() * factor);
    out.extend_from_slice(pairs);
    for _ in 1..factor {
        out.extend(pairs.iter().map(|p| p.clone().with_origin(Origin::Replicated)));
    }
    out
}
