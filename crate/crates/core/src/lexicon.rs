//! Multilingual lexicon merged from bilingual dictionaries.
//!
//! Every dictionary entry `(w_s, w_t)` is recorded in both directions:
//! key `lower(w_s)_src` gains `w_t` under `tgt` and key `lower(w_t)_tgt`
//! gains `w_s` under `src`. Keys are lowercase; synonyms keep their case.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use indexmap::IndexSet;
use thiserror::Error;

use crate::ingest::{DictEntryPair, IngestError, LanguageCode};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("lexicon line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// `{word}_{lang}` lexicon key. The word is always lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexiconKey {
    pub word: String,
    pub lang: LanguageCode,
}

impl LexiconKey {
    pub fn new(word: &str, lang: LanguageCode) -> Self {
        LexiconKey { word: word.to_lowercase(), lang }
    }
}

impl fmt::Display for LexiconKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.word, self.lang)
    }
}

/// Synonyms of one key, grouped by language, each group in first-seen order.
pub type SynonymSets = BTreeMap<LanguageCode, IndexSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HopDepth {
    One = 1,
    Two = 2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    // lang -> lowercase word -> synonyms
    entries: HashMap<LanguageCode, HashMap<String, SynonymSets>>,
    supported: BTreeSet<LanguageCode>,
    hop_depth: HopDepth,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon { entries: HashMap::new(), supported: BTreeSet::new(), hop_depth: HopDepth::One }
    }
}

impl Lexicon {
    pub fn hop_depth(&self) -> HopDepth {
        self.hop_depth
    }

    pub fn supported_langs(&self) -> &BTreeSet<LanguageCode> {
        &self.supported
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(HashMap::is_empty)
    }

    /// Number of keys.
    pub fn len(&self) -> usize {
        self.entries.values().map(HashMap::len).sum()
    }

    /// Synonym sets for a key; `word` is case-folded.
    pub fn entry(&self, word: &str, lang: &LanguageCode) -> Option<&SynonymSets> {
        self.entry_lower(&word.to_lowercase(), lang)
    }

    /// Like [`Lexicon::entry`] for an already lowercase word.
    pub fn entry_lower(&self, word: &str, lang: &LanguageCode) -> Option<&SynonymSets> {
        self.entries.get(lang)?.get(word)
    }

    /// Synonyms of `word` (any case) from `src_lang` in `tgt_lang`.
    pub fn lookup(&self, word: &str, src_lang: &LanguageCode, tgt_lang: &LanguageCode) -> Vec<&str> {
        self.synonyms_lower(&word.to_lowercase(), src_lang, tgt_lang)
            .map(|s| s.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn synonyms_lower(
        &self,
        word: &str,
        src_lang: &LanguageCode,
        tgt_lang: &LanguageCode,
    ) -> Option<&IndexSet<String>> {
        self.entry_lower(word, src_lang)?.get(tgt_lang).filter(|s| !s.is_empty())
    }

    /// Iterate keys with their synonym sets, sorted by rendered key.
    pub fn iter_sorted(&self) -> Vec<(LexiconKey, &SynonymSets)> {
        let mut all: Vec<(LexiconKey, &SynonymSets)> = self
            .entries
            .iter()
            .flat_map(|(lang, words)| {
                words.iter().map(move |(w, sets)| (LexiconKey { word: w.clone(), lang: lang.clone() }, sets))
            })
            .collect();
        all.sort_by_cached_key(|(k, _)| k.to_string());
        all
    }

    /// Distinct words of `lang` anywhere in the lexicon, compared case-insensitively.
    pub fn entity_count(&self, lang: &LanguageCode) -> usize {
        let mut words: HashSet<String> = HashSet::new();
        if let Some(keys) = self.entries.get(lang) {
            words.extend(keys.keys().cloned());
        }
        for keys in self.entries.values() {
            for sets in keys.values() {
                if let Some(syns) = sets.get(lang) {
                    words.extend(syns.iter().map(|w| w.to_lowercase()));
                }
            }
        }
        words.len()
    }

    fn add(&mut self, key_word: &str, key_lang: &LanguageCode, syn: &str, syn_lang: &LanguageCode) {
        if key_lang == syn_lang {
            return;
        }
        self.entries
            .entry(key_lang.clone())
            .or_default()
            .entry(key_word.to_lowercase())
            .or_default()
            .entry(syn_lang.clone())
            .or_default()
            .insert(syn.to_string());
        self.supported.insert(key_lang.clone());
        self.supported.insert(syn_lang.clone());
    }

    /// Add one extra hop: every key also gets the synonyms of its synonyms,
    /// except those in the key's own language. Applied at most once.
    pub fn expand_two_hop(&self) -> Lexicon {
        if self.hop_depth == HopDepth::Two {
            return self.clone();
        }
        let mut out = self.clone();
        out.hop_depth = HopDepth::Two;
        for (lang, words) in &self.entries {
            for (word, sets) in words {
                let mut gained: Vec<(&LanguageCode, &String)> = Vec::new();
                for (syn_lang, syns) in sets {
                    for syn in syns {
                        let Some(next) = self.entry(syn, syn_lang) else { continue };
                        for (l2, syns2) in next {
                            if l2 == lang {
                                continue;
                            }
                            gained.extend(syns2.iter().map(|w| (l2, w)));
                        }
                    }
                }
                if gained.is_empty() {
                    continue;
                }
                let target = out.entries.get_mut(lang).and_then(|w| w.get_mut(word)).expect("key exists");
                for (l2, w) in gained {
                    target.entry(l2.clone()).or_default().insert(w.clone());
                }
            }
        }
        out
    }

    /// Write the sorted line format: `word_lang<TAB>l2:w,w|l3:w`.
    pub fn save<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# hop_depth={}", self.hop_depth as u8)?;
        for (key, sets) in self.iter_sorted() {
            let groups: Vec<String> = sets
                .iter()
                .filter(|(_, syns)| !syns.is_empty())
                .map(|(lang, syns)| {
                    let words: Vec<String> = syns.iter().map(|s| escape(s)).collect();
                    format!("{lang}:{}", words.join(","))
                })
                .collect();
            writeln!(w, "{key}\t{}", groups.join("|"))?;
        }
        w.flush()
    }

    pub fn load<R: BufRead>(r: R) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            let bad = |reason: String| LexiconError::Format { line: n, reason };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(d) = meta.trim().strip_prefix("hop_depth=") {
                    lex.hop_depth = match d.trim() {
                        "1" => HopDepth::One,
                        "2" => HopDepth::Two,
                        other => return Err(bad(format!("bad hop depth {other:?}"))),
                    };
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (key, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab".into()))?;
            let (word, lang) = key.rsplit_once('_').ok_or_else(|| bad(format!("key {key:?} lacks _lang")))?;
            let lang = LanguageCode::new(lang).map_err(|e: IngestError| bad(e.to_string()))?;
            if word.is_empty() {
                return Err(bad("empty key word".into()));
            }
            for group in split_unescaped(rest, '|') {
                let (l2, words) = group.split_once(':').ok_or_else(|| bad(format!("group {group:?} lacks lang:")))?;
                let l2 = LanguageCode::new(l2).map_err(|e| bad(e.to_string()))?;
                for syn in split_unescaped(words, ',') {
                    let syn = unescape(syn);
                    if syn.is_empty() {
                        return Err(bad("empty synonym".into()));
                    }
                    lex.add(word, &lang, &syn, &l2);
                }
            }
        }
        Ok(lex)
    }
}

/// Merge bilingual entries into one symmetric multilingual lexicon.
pub fn build_multilingual_lexicon<I, D>(entries: I) -> Lexicon
where
    I: IntoIterator<Item = D>,
    D: Borrow<DictEntryPair>,
{
    let mut lex = Lexicon::default();
    for e in entries {
        let e = e.borrow();
        lex.add(&e.src_word, &e.src_lang, &e.tgt_word, &e.tgt_lang);
        lex.add(&e.tgt_word, &e.tgt_lang, &e.src_word, &e.src_lang);
    }
    lex
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '\\' | ',' | '|') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn split_unescaped(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push(&s[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&s[start..]);
    parts
}
