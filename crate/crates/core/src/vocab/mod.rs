//! Tokenizer economics and embedding-shift instruments.

mod analysis;
mod bpe;
mod stats;

use thiserror::Error;

pub use analysis::{column_means, derive_candidates, extend_vocab, fertility, FertilityReport};
pub use bpe::{byte_to_unicode, TokenizerFile, TokenizerModel};
pub use stats::{
    cosine, kolmogorov_survival, ks_lottery, ks_lottery_with, ks_two_sample, retrieval_r_at_1,
    retrieval_r_at_1_with, spearman, KsResult, QualityReport, ShiftReport, TokenShift,
};

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("token {0:?} is already in the vocabulary")]
    DuplicateToken(String),
    #[error("empty input")]
    EmptyInput,
    #[error("only {found} candidates qualify, {wanted} requested")]
    InsufficientCandidates { wanted: usize, found: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series is constant")]
    Degenerate,
    #[error("empty sample")]
    EmptySample,
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("embedding rows ({rows}) do not match vocabulary size ({vocab})")]
    EmbeddingSize { rows: usize, vocab: usize },
    #[error("gold index {index} out of range for pool of {pool}")]
    GoldIndex { index: usize, pool: usize },
}
