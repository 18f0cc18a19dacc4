//! Sentence translation backends used for pivot synthesis and pivot
//! evaluation.
//!
//! Backends: [`IdentityProvider`] and [`DictionaryProvider`] (offline
//! mocks), [`CachedProvider`] (persistent cache in front of any backend, or
//! cache-only), and `HttpProvider` speaking
//! `{sentences, src, tgt} -> {translations}` (feature `http`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{segment, SegmenterPolicy};
use crate::fsutil::write_atomic;
use crate::ingest::LanguageCode;
use crate::lexicon::Lexicon;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("backend failed at sentence {index:?}: {message}")]
    Backend { index: Option<usize>, message: String },
    #[error("{src}->{tgt}: no cached translation for sentence {index}")]
    CacheMiss { src: LanguageCode, tgt: LanguageCode, index: usize },
    #[error("backend returned {got} translations for {expected} sentences")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cache file: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Batch sentence translation. Implementations return exactly one output
/// per input, in order.
pub trait TranslationProvider: Send + Sync {
    fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError>;
}

impl<P: TranslationProvider + ?Sized> TranslationProvider for Arc<P> {
    fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError> {
        (**self).translate(batch, src, tgt)
    }
}

impl<P: TranslationProvider + ?Sized> TranslationProvider for Box<P> {
    fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError> {
        (**self).translate(batch, src, tgt)
    }
}

fn check_len(expected: usize, out: Vec<String>) -> Result<Vec<String>, ProviderError> {
    if out.len() == expected {
        Ok(out)
    } else {
        Err(ProviderError::LengthMismatch { expected, got: out.len() })
    }
}

/// Returns its input.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProvider;

impl TranslationProvider for IdentityProvider {
    fn translate(&self, batch: &[String], _: &LanguageCode, _: &LanguageCode) -> Result<Vec<String>, ProviderError> {
        Ok(batch.to_vec())
    }
}

/// Word-by-word lexicon translation: the first synonym of each word, or
/// the word itself when the lexicon has none. Separators are preserved.
#[derive(Debug, Clone)]
pub struct DictionaryProvider {
    lex: Arc<Lexicon>,
    policy: SegmenterPolicy,
}

impl DictionaryProvider {
    pub fn new(lex: Arc<Lexicon>) -> Self {
        DictionaryProvider { lex, policy: SegmenterPolicy::default() }
    }

    pub fn translate_one(&self, text: &str, src: &LanguageCode, tgt: &LanguageCode) -> String {
        let mut out = String::with_capacity(text.len());
        let mut cursor = 0;
        for tok in segment(text, src, &self.policy) {
            out.push_str(&text[cursor..tok.span.0]);
            match self.lex.lookup(tok.text, src, tgt).first() {
                Some(w) => out.push_str(w),
                None => out.push_str(tok.text),
            }
            cursor = tok.span.1;
        }
        out.push_str(&text[cursor..]);
        out
    }
}

impl TranslationProvider for DictionaryProvider {
    fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError> {
        Ok(batch.iter().map(|s| self.translate_one(s, src, tgt)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CacheLine {
    src: LanguageCode,
    tgt: LanguageCode,
    sentence: String,
    translation: String,
}

type CacheKey = (LanguageCode, LanguageCode, String);

/// Persistent translation cache. Hits never reach the backend; without a
/// backend every miss is an error (cache-only mode).
pub struct CachedProvider {
    backend: Option<Box<dyn TranslationProvider>>,
    cache: RwLock<HashMap<CacheKey, String>>,
    path: Option<PathBuf>,
}

impl CachedProvider {
    pub fn new(backend: Option<Box<dyn TranslationProvider>>) -> Self {
        CachedProvider { backend, cache: RwLock::new(HashMap::new()), path: None }
    }

    /// Load the JSONL cache at `path` if it exists; [`CachedProvider::save`] writes back there.
    pub fn open(path: &Path, backend: Option<Box<dyn TranslationProvider>>) -> Result<Self, ProviderError> {
        let mut p = Self::new(backend);
        p.path = Some(path.to_path_buf());
        if path.exists() {
            let mut cache = HashMap::new();
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let c: CacheLine = serde_json::from_str(&line)
                    .map_err(|e| ProviderError::Cache(format!("{}:{}: {e}", path.display(), i + 1)))?;
                cache.insert((c.src, c.tgt, c.sentence), c.translation);
            }
            p.cache = RwLock::new(cache);
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, src: &LanguageCode, tgt: &LanguageCode, sentence: &str, translation: &str) {
        self.cache
            .write()
            .expect("cache lock")
            .insert((src.clone(), tgt.clone(), sentence.to_string()), translation.to_string());
    }

    /// Write the cache as sorted JSONL.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let cache = self.cache.read().expect("cache lock");
        let mut keys: Vec<&CacheKey> = cache.keys().collect();
        keys.sort();
        for k in keys {
            let line = CacheLine { src: k.0.clone(), tgt: k.1.clone(), sentence: k.2.clone(), translation: cache[k].clone() };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self) -> Result<(), ProviderError> {
        if let Some(path) = &self.path {
            write_atomic(path, |w| self.write_to(w))?;
        }
        Ok(())
    }
}

impl TranslationProvider for CachedProvider {
    fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError> {
        let mut out: Vec<Option<String>> = {
            let cache = self.cache.read().expect("cache lock");
            batch.iter().map(|s| cache.get(&(src.clone(), tgt.clone(), s.clone())).cloned()).collect()
        };
        let misses: Vec<usize> = out.iter().enumerate().filter(|(_, o)| o.is_none()).map(|(i, _)| i).collect();
        if !misses.is_empty() {
            let Some(backend) = &self.backend else {
                return Err(ProviderError::CacheMiss { src: src.clone(), tgt: tgt.clone(), index: misses[0] });
            };
            let query: Vec<String> = misses.iter().map(|&i| batch[i].clone()).collect();
            let got = check_len(query.len(), backend.translate(&query, src, tgt)?)?;
            let mut cache = self.cache.write().expect("cache lock");
            for (&i, t) in misses.iter().zip(got) {
                cache.insert((src.clone(), tgt.clone(), batch[i].clone()), t.clone());
                out[i] = Some(t);
            }
        }
        Ok(out.into_iter().map(|o| o.expect("filled")).collect())
    }
}

/// Request body of the HTTP translation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub sentences: Vec<String>,
    pub src: LanguageCode,
    pub tgt: LanguageCode,
}

/// Response body of the HTTP translation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub translations: Vec<String>,
}

#[cfg(feature = "http")]
pub use http::HttpProvider;

#[cfg(feature = "http")]
mod http {
    use super::*;

    /// POSTs [`TranslateRequest`] JSON to `url`, expects [`TranslateResponse`].
    pub struct HttpProvider {
        url: String,
        agent: ureq::Agent,
        batch_size: usize,
    }

    impl HttpProvider {
        pub fn new(url: impl Into<String>) -> Self {
            HttpProvider { url: url.into(), agent: ureq::Agent::new_with_defaults(), batch_size: 64 }
        }

        pub fn with_batch_size(mut self, n: usize) -> Self {
            self.batch_size = n.max(1);
            self
        }
    }

    impl TranslationProvider for HttpProvider {
        fn translate(&self, batch: &[String], src: &LanguageCode, tgt: &LanguageCode) -> Result<Vec<String>, ProviderError> {
            let mut out = Vec::with_capacity(batch.len());
            for (chunk_no, chunk) in batch.chunks(self.batch_size).enumerate() {
                let req = TranslateRequest { sentences: chunk.to_vec(), src: src.clone(), tgt: tgt.clone() };
                let index = Some(chunk_no * self.batch_size);
                let resp: TranslateResponse = self
                    .agent
                    .post(&self.url)
                    .send_json(&req)
                    .map_err(|e| ProviderError::Backend { index, message: e.to_string() })?
                    .body_mut()
                    .read_json()
                    .map_err(|e| ProviderError::Backend { index, message: e.to_string() })?;
                out.extend(check_len(chunk.len(), resp.translations)?);
            }
            Ok(out)
        }
    }
}
