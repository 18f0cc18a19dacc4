//! Corpus construction and analysis toolkit for massively multilingual
//! continual pre-training.
//!
//! The crate turns monolingual text, bitext and bilingual dictionaries into
//! per-epoch training records (connected parallel pairs, 512-token
//! monolingual blocks, dictionary code-switched pseudo-parallel data), and
//! ships the instruments used to reason about tokenizer fit and embedding
//! drift: byte-level BPE, fertility, mean-initialized vocabulary extension,
//! R@1 retrieval, Spearman correlation and KS-based shift detection.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is on and falls back to plain iteration otherwise.

pub mod assemble;
pub mod augment;
pub mod cli;
pub mod fsutil;
pub mod ingest;
pub mod lexicon;
pub mod metrics;
pub mod par;
pub mod provider;
pub mod prompts;
pub mod rng;
pub mod vocab;

pub use ingest::{Direction, DirectionChoice, LanguageCode, MonolingualRecord, Origin, SentencePair};
pub use lexicon::Lexicon;
