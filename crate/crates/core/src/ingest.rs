//! Typed readers and writers for the external data sources.
//!
//! Formats:
//! * monolingual: one UTF-8 sentence per line;
//! * parallel: two-column TSV, `src_text<TAB>tgt_text`;
//! * bilingual dictionary: `src_word<whitespace>tgt_word` per line;
//! * embeddings: a `V D` header followed by `V` rows of `label v1 .. vD`;
//! * language labels: one language code per line, aligned to sentence index.
//!
//! Readers run in lenient mode by default (bad lines are skipped and
//! counted); strict mode turns the first bad line into an error.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use indexmap::IndexSet;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: invalid UTF-8")]
    Encoding { line: usize },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("invalid language code {0:?} (expected 2-8 lowercase ASCII letters)")]
    Language(String),
    #[error("{0}")]
    Invalid(String),
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }

    fn format(line: usize, reason: impl Into<String>) -> Self {
        IngestError::Format { line, reason: reason.into() }
    }
}

/// Lowercase ISO-639 style tag such as `en`, `ceb` or `zhtrad`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: &str) -> Result<Self, IngestError> {
        let ok = (2..=8).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if ok {
            Ok(LanguageCode(code.to_string()))
        } else {
            Err(IngestError::Language(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for LanguageCode {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageCode::new(s)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = IngestError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        LanguageCode::new(&s)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> String {
        code.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for LanguageCode {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Where a sentence pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    Natural,
    Replicated,
    Synthetic,
}

/// Orientation of a bitext pair inside a training record or prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// source then target
    Forward,
    /// target then source
    Backward,
}

/// A fixed orientation, or a fair coin per item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DirectionChoice {
    Forward,
    Backward,
    #[default]
    Random,
}

impl DirectionChoice {
    pub fn resolve<R: rand::Rng + ?Sized>(self, rng: &mut R) -> Direction {
        match self {
            DirectionChoice::Forward => Direction::Forward,
            DirectionChoice::Backward => Direction::Backward,
            DirectionChoice::Random => {
                if rng.random_bool(0.5) {
                    Direction::Forward
                } else {
                    Direction::Backward
                }
            }
        }
    }
}

impl FromStr for DirectionChoice {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(DirectionChoice::Forward),
            "backward" => Ok(DirectionChoice::Backward),
            "random" | "both" => Ok(DirectionChoice::Random),
            other => Err(IngestError::Invalid(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonolingualRecord {
    pub lang: LanguageCode,
    pub text: String,
    pub source_id: String,
}

impl MonolingualRecord {
    pub fn new(lang: LanguageCode, text: impl Into<String>, source_id: impl Into<String>) -> Result<Self, IngestError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(IngestError::Invalid("monolingual text is empty".into()));
        }
        if text.contains('\n') {
            return Err(IngestError::Invalid("monolingual text contains a newline".into()));
        }
        Ok(MonolingualRecord { lang, text, source_id: source_id.into() })
    }
}

/// One bitext unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub src_lang: LanguageCode,
    pub tgt_lang: LanguageCode,
    pub src_text: String,
    pub tgt_text: String,
    pub origin: Origin,
}

impl SentencePair {
    pub fn new(
        src_lang: LanguageCode,
        tgt_lang: LanguageCode,
        src_text: impl Into<String>,
        tgt_text: impl Into<String>,
    ) -> Result<Self, IngestError> {
        let (src_text, tgt_text) = (src_text.into(), tgt_text.into());
        if src_lang == tgt_lang {
            return Err(IngestError::Invalid(format!("pair languages must differ, got {src_lang} twice")));
        }
        if src_text.trim().is_empty() || tgt_text.trim().is_empty() {
            return Err(IngestError::Invalid("pair side is empty".into()));
        }
        Ok(SentencePair { src_lang, tgt_lang, src_text, tgt_text, origin: Origin::Natural })
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// The same pair with source and target exchanged.
    pub fn swapped(&self) -> Self {
        SentencePair {
            src_lang: self.tgt_lang.clone(),
            tgt_lang: self.src_lang.clone(),
            src_text: self.tgt_text.clone(),
            tgt_text: self.src_text.clone(),
            origin: self.origin,
        }
    }
}

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}+$").unwrap());

/// True when every character of `word` is in a Unicode `P*` category.
pub fn is_punctuation(word: &str) -> bool {
    PUNCTUATION.is_match(word)
}

/// A single bilingual dictionary entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DictEntryPair {
    pub src_lang: LanguageCode,
    pub tgt_lang: LanguageCode,
    pub src_word: String,
    pub tgt_word: String,
}

impl DictEntryPair {
    pub fn new(
        src_lang: LanguageCode,
        tgt_lang: LanguageCode,
        src_word: impl Into<String>,
        tgt_word: impl Into<String>,
    ) -> Result<Self, IngestError> {
        let (src_word, tgt_word) = (src_word.into(), tgt_word.into());
        if src_lang == tgt_lang {
            return Err(IngestError::Invalid(format!("dictionary languages must differ, got {src_lang} twice")));
        }
        for w in [&src_word, &tgt_word] {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(IngestError::Invalid(format!("dictionary word {w:?} is empty or has whitespace")));
            }
            if is_punctuation(w) {
                return Err(IngestError::Invalid(format!("dictionary word {w:?} is pure punctuation")));
            }
        }
        Ok(DictEntryPair { src_lang, tgt_lang, src_word, tgt_word })
    }
}

/// Dense row-major matrix of token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self, IngestError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(IngestError::Invalid(format!("row {i} has {} values, expected {dim}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data, labels)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self, IngestError> {
        if dim == 0 && !data.is_empty() {
            return Err(IngestError::Invalid("zero dimension with non-empty data".into()));
        }
        if dim > 0 && !data.len().is_multiple_of(dim) {
            return Err(IngestError::Invalid(format!("{} values do not fill rows of {dim}", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::Invalid(format!("non-finite value at flat index {pos}")));
        }
        let rows = data.len().checked_div(dim).unwrap_or(0);
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(IngestError::Invalid(format!("{} labels for {rows} rows", l.len())));
            }
        }
        Ok(EmbeddingMatrix { dim, data, labels })
    }

    pub fn vocab_size(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.vocab_size())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: Option<String>) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
        if let (Some(labels), Some(label)) = (self.labels.as_mut(), label) {
            labels.push(label);
        }
    }
}

/// Detector output: one predicted language per sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelFile {
    pub entries: Vec<(usize, LanguageCode)>,
}

impl LabelFile {
    pub fn from_labels(labels: impl IntoIterator<Item = LanguageCode>) -> Self {
        LabelFile { entries: labels.into_iter().enumerate().collect() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// ---------------------------------------------------------------------------
// line plumbing

/// Raw line reader that keeps 1-based line numbers and defers UTF-8 checks.
struct Lines<R> {
    inner: R,
    line: usize,
    buf: Vec<u8>,
}

enum RawLine {
    Text(String),
    BadUtf8,
}

impl<R: BufRead> Lines<R> {
    fn new(inner: R) -> Self {
        Lines { inner, line: 0, buf: Vec::new() }
    }

    fn next_line(&mut self) -> Option<io::Result<(usize, RawLine)>> {
        self.buf.clear();
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                if self.buf.last() == Some(&b'\n') {
                    self.buf.pop();
                    if self.buf.last() == Some(&b'\r') {
                        self.buf.pop();
                    }
                }
                let raw = match std::str::from_utf8(&self.buf) {
                    Ok(s) => RawLine::Text(s.to_string()),
                    Err(_) => RawLine::BadUtf8,
                };
                Some(Ok((self.line, raw)))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|e| IngestError::io(path, e))
}

/// Running counters shared by the streaming readers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadCounts {
    pub lines: usize,
    pub yielded: usize,
    pub skipped: usize,
}

// ---------------------------------------------------------------------------
// monolingual

pub struct MonolingualReader<R> {
    lines: Lines<R>,
    lang: LanguageCode,
    source: String,
    strict: bool,
    counts: ReadCounts,
    done: bool,
    path: PathBuf,
}

impl<R: BufRead> MonolingualReader<R> {
    pub fn new(inner: R, lang: LanguageCode, source: impl Into<String>, strict: bool) -> Self {
        MonolingualReader {
            lines: Lines::new(inner),
            lang,
            source: source.into(),
            strict,
            counts: ReadCounts::default(),
            done: false,
            path: PathBuf::new(),
        }
    }

    pub fn counts(&self) -> ReadCounts {
        self.counts
    }

    pub fn skipped(&self) -> usize {
        self.counts.skipped
    }
}

impl<R: BufRead> Iterator for MonolingualReader<R> {
    type Item = Result<MonolingualRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let (line, raw) = match self.lines.next_line()? {
                Ok(x) => x,
                Err(e) => {
                    self.done = true;
                    return Some(Err(IngestError::io(&self.path, e)));
                }
            };
            self.counts.lines += 1;
            let bad = match raw {
                RawLine::BadUtf8 => IngestError::Encoding { line },
                RawLine::Text(text) if text.trim().is_empty() => IngestError::format(line, "empty line"),
                RawLine::Text(text) => {
                    self.counts.yielded += 1;
                    return Some(Ok(MonolingualRecord {
                        lang: self.lang.clone(),
                        text,
                        source_id: format!("{}:{line}", self.source),
                    }));
                }
            };
            self.counts.skipped += 1;
            if self.strict {
                self.done = true;
                return Some(Err(bad));
            }
        }
        None
    }
}

fn source_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Stream monolingual records from `path`.
pub fn read_monolingual(
    path: &Path,
    lang: LanguageCode,
    strict: bool,
) -> Result<MonolingualReader<BufReader<File>>, IngestError> {
    let mut reader = MonolingualReader::new(open(path)?, lang, source_name(path), strict);
    reader.path = path.to_path_buf();
    Ok(reader)
}

pub fn write_monolingual<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a MonolingualRecord>,
) -> io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.text)?;
    }
    w.flush()
}

// ---------------------------------------------------------------------------
// parallel

pub struct ParallelReader<R> {
    lines: Lines<R>,
    src: LanguageCode,
    tgt: LanguageCode,
    strict: bool,
    counts: ReadCounts,
    done: bool,
    path: PathBuf,
}

impl<R: BufRead> ParallelReader<R> {
    pub fn new(inner: R, src: LanguageCode, tgt: LanguageCode, strict: bool) -> Result<Self, IngestError> {
        if src == tgt {
            return Err(IngestError::Invalid(format!("pair languages must differ, got {src} twice")));
        }
        Ok(ParallelReader {
            lines: Lines::new(inner),
            src,
            tgt,
            strict,
            counts: ReadCounts::default(),
            done: false,
            path: PathBuf::new(),
        })
    }

    pub fn counts(&self) -> ReadCounts {
        self.counts
    }

    pub fn skipped(&self) -> usize {
        self.counts.skipped
    }
}

impl<R: BufRead> Iterator for ParallelReader<R> {
    type Item = Result<SentencePair, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let (line, raw) = match self.lines.next_line()? {
                Ok(x) => x,
                Err(e) => {
                    self.done = true;
                    return Some(Err(IngestError::io(&self.path, e)));
                }
            };
            self.counts.lines += 1;
            let bad = match raw {
                RawLine::BadUtf8 => IngestError::Encoding { line },
                RawLine::Text(text) => {
                    let cols: Vec<&str> = text.split('\t').collect();
                    if cols.len() != 2 {
                        IngestError::format(line, format!("expected 2 tab-separated columns, found {}", cols.len()))
                    } else if cols[0].trim().is_empty() || cols[1].trim().is_empty() {
                        IngestError::format(line, "empty column")
                    } else {
                        self.counts.yielded += 1;
                        return Some(Ok(SentencePair {
                            src_lang: self.src.clone(),
                            tgt_lang: self.tgt.clone(),
                            src_text: cols[0].to_string(),
                            tgt_text: cols[1].to_string(),
                            origin: Origin::Natural,
                        }));
                    }
                }
            };
            self.counts.skipped += 1;
            if self.strict {
                self.done = true;
                return Some(Err(bad));
            }
        }
        None
    }
}

/// Stream sentence pairs from a two-column TSV.
pub fn read_parallel(
    path: &Path,
    src: LanguageCode,
    tgt: LanguageCode,
    strict: bool,
) -> Result<ParallelReader<BufReader<File>>, IngestError> {
    let mut reader = ParallelReader::new(open(path)?, src, tgt, strict)?;
    reader.path = path.to_path_buf();
    Ok(reader)
}

pub fn write_parallel<'a, W: Write>(mut w: W, pairs: impl IntoIterator<Item = &'a SentencePair>) -> io::Result<()> {
    for p in pairs {
        writeln!(w, "{}\t{}", p.src_text, p.tgt_text)?;
    }
    w.flush()
}

/// Parse `"{src}-{tgt}"` (the stem of a bitext file name).
pub fn parse_direction(stem: &str) -> Result<(LanguageCode, LanguageCode), IngestError> {
    let (a, b) = stem
        .split_once('-')
        .ok_or_else(|| IngestError::Invalid(format!("expected SRC-TGT, got {stem:?}")))?;
    Ok((LanguageCode::new(a)?, LanguageCode::new(b)?))
}

// ---------------------------------------------------------------------------
// dictionaries

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DictionaryLoad {
    pub entries: Vec<DictEntryPair>,
    pub punct_dropped: usize,
    pub duplicates: usize,
    pub skipped: usize,
}

pub fn parse_bilingual_dictionary<R: BufRead>(
    inner: R,
    src: &LanguageCode,
    tgt: &LanguageCode,
    strict: bool,
) -> Result<DictionaryLoad, IngestError> {
    if src == tgt {
        return Err(IngestError::Invalid(format!("dictionary languages must differ, got {src} twice")));
    }
    let mut lines = Lines::new(inner);
    let mut seen: IndexSet<(String, String)> = IndexSet::new();
    let mut load = DictionaryLoad::default();
    while let Some(next) = lines.next_line() {
        let (line, raw) = next.map_err(|e| IngestError::io(Path::new(""), e))?;
        let text = match raw {
            RawLine::Text(t) => t,
            RawLine::BadUtf8 => {
                if strict {
                    return Err(IngestError::Encoding { line });
                }
                load.skipped += 1;
                continue;
            }
        };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            if strict {
                return Err(IngestError::format(line, format!("expected 2 fields, found {}", fields.len())));
            }
            load.skipped += 1;
            continue;
        }
        if is_punctuation(fields[0]) || is_punctuation(fields[1]) {
            load.punct_dropped += 1;
            continue;
        }
        if !seen.insert((fields[0].to_string(), fields[1].to_string())) {
            load.duplicates += 1;
        }
    }
    load.entries = seen
        .into_iter()
        .map(|(s, t)| DictEntryPair { src_lang: src.clone(), tgt_lang: tgt.clone(), src_word: s, tgt_word: t })
        .collect();
    Ok(load)
}

/// Load a MUSE/PanLex style word-pair file.
pub fn read_bilingual_dictionary(
    path: &Path,
    src: &LanguageCode,
    tgt: &LanguageCode,
    strict: bool,
) -> Result<DictionaryLoad, IngestError> {
    parse_bilingual_dictionary(open(path)?, src, tgt, strict).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::io(path, source),
        other => other,
    })
}

pub fn write_dictionary<'a, W: Write>(mut w: W, entries: impl IntoIterator<Item = &'a DictEntryPair>) -> io::Result<()> {
    for e in entries {
        writeln!(w, "{} {}", e.src_word, e.tgt_word)?;
    }
    w.flush()
}

// ---------------------------------------------------------------------------
// embeddings

pub fn parse_embeddings<R: BufRead>(inner: R) -> Result<EmbeddingMatrix, IngestError> {
    let mut lines = Lines::new(inner);
    let mut next_text = || -> Result<Option<(usize, String)>, IngestError> {
        match lines.next_line() {
            None => Ok(None),
            Some(Err(e)) => Err(IngestError::io(Path::new(""), e)),
            Some(Ok((line, RawLine::BadUtf8))) => Err(IngestError::Encoding { line }),
            Some(Ok((line, RawLine::Text(t)))) => Ok(Some((line, t))),
        }
    };
    let (_, header) = next_text()?.ok_or_else(|| IngestError::format(1, "missing \"V D\" header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|_| IngestError::format(1, format!("bad header {header:?}")));
    if dims.len() != 2 {
        return Err(IngestError::format(1, format!("header must be \"V D\", got {header:?}")));
    }
    let (vocab, dim) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut data = Vec::with_capacity(vocab * dim);
    let mut labels = Vec::with_capacity(vocab);
    while let Some((line, text)) = next_text()? {
        if text.trim().is_empty() {
            continue;
        }
        if labels.len() == vocab {
            return Err(IngestError::format(line, format!("more than {vocab} rows")));
        }
        let mut fields = text.split_whitespace();
        let label = fields.next().unwrap_or_default().to_string();
        let before = data.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| IngestError::format(line, format!("row {label:?}: non-numeric value {f:?}")))?;
            if !v.is_finite() {
                return Err(IngestError::format(line, format!("row {label:?}: non-finite value {f:?}")));
            }
            data.push(v);
        }
        let got = data.len() - before;
        if got != dim {
            return Err(IngestError::format(line, format!("row {label:?} has {got} values, expected {dim}")));
        }
        labels.push(label);
    }
    if labels.len() != vocab {
        return Err(IngestError::format(0, format!("header promises {vocab} rows, found {}", labels.len())));
    }
    EmbeddingMatrix::from_flat(dim, data, Some(labels))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix, IngestError> {
    parse_embeddings(open(path)?)
}

pub fn write_embeddings<W: Write>(mut w: W, m: &EmbeddingMatrix) -> io::Result<()> {
    writeln!(w, "{} {}", m.vocab_size(), m.dim())?;
    for (i, row) in m.rows().enumerate() {
        match m.labels() {
            Some(l) => write!(w, "{}", l[i])?,
            None => write!(w, "{i}")?,
        }
        for v in row {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

// ---------------------------------------------------------------------------
// language labels

pub fn parse_labels<R: BufRead>(inner: R) -> Result<LabelFile, IngestError> {
    let mut lines = Lines::new(inner);
    let mut out = LabelFile::default();
    while let Some(next) = lines.next_line() {
        let (line, raw) = next.map_err(|e| IngestError::io(Path::new(""), e))?;
        let text = match raw {
            RawLine::Text(t) => t,
            RawLine::BadUtf8 => return Err(IngestError::Encoding { line }),
        };
        let code = LanguageCode::new(text.trim()).map_err(|e| IngestError::format(line, e.to_string()))?;
        out.entries.push((line - 1, code));
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<LabelFile, IngestError> {
    parse_labels(open(path)?)
}
