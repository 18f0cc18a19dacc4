use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AssembleError;
use crate::ingest::{parse_direction, read_monolingual, read_parallel, LanguageCode, MonolingualRecord, SentencePair};
use crate::vocab::TokenizerModel;

/// In-memory inputs of one epoch.
#[derive(Debug, Clone)]
pub struct EpochSources {
    pub languages: BTreeSet<LanguageCode>,
    pub monolingual: BTreeMap<LanguageCode, Vec<MonolingualRecord>>,
    /// keyed by file direction `(src, tgt)`
    pub parallel: BTreeMap<(LanguageCode, LanguageCode), Vec<SentencePair>>,
    /// pivot-language sentences reserved for synthesis
    pub english_pool: Vec<MonolingualRecord>,
    pub tokenizer: TokenizerModel,
}

impl Default for EpochSources {
    fn default() -> Self {
        EpochSources {
            languages: BTreeSet::new(),
            monolingual: BTreeMap::new(),
            parallel: BTreeMap::new(),
            english_pool: Vec::new(),
            tokenizer: TokenizerModel::byte_level(),
        }
    }
}

impl EpochSources {
    pub fn add_monolingual(&mut self, lang: LanguageCode, docs: Vec<MonolingualRecord>) {
        self.languages.insert(lang.clone());
        self.monolingual.entry(lang).or_default().extend(docs);
    }

    pub fn add_parallel(&mut self, src: LanguageCode, tgt: LanguageCode, pairs: Vec<SentencePair>) {
        self.languages.insert(src.clone());
        self.languages.insert(tgt.clone());
        self.parallel.entry((src, tgt)).or_default().extend(pairs);
    }
}

/// Input locations. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcePaths {
    /// `{lang}.txt`, one document per line
    pub monolingual_dir: Option<PathBuf>,
    /// `{src}-{tgt}.tsv`, two columns
    pub parallel_dir: Option<PathBuf>,
    pub english_pool: Option<PathBuf>,
    /// tokenizer JSON for block splitting; byte-level when absent
    pub tokenizer: Option<PathBuf>,
    /// saved lexicon file used for code-switching
    pub lexicon: Option<PathBuf>,
    /// fail on malformed lines instead of skipping them
    pub strict: bool,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AssembleError + '_ {
    move |source| AssembleError::Io { path: path.display().to_string(), source }
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, AssembleError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Load everything `paths` names. Returns the sources and every file read,
/// in a stable order, for checksumming.
pub fn load_sources(paths: &SourcePaths, base: &Path) -> Result<(EpochSources, Vec<PathBuf>), AssembleError> {
    let mut sources = EpochSources::default();
    let mut read = Vec::new();
    if let Some(dir) = &paths.monolingual_dir {
        for file in files_with_ext(&resolve(base, dir), "txt")? {
            let lang = LanguageCode::new(&stem(&file))?;
            let docs = read_monolingual(&file, lang.clone(), paths.strict)?.collect::<Result<Vec<_>, _>>()?;
            log::info!("{}: {} documents", file.display(), docs.len());
            sources.add_monolingual(lang, docs);
            read.push(file);
        }
    }
    if let Some(dir) = &paths.parallel_dir {
        for file in files_with_ext(&resolve(base, dir), "tsv")? {
            let (src, tgt) = parse_direction(&stem(&file))?;
            let pairs = read_parallel(&file, src.clone(), tgt.clone(), paths.strict)?.collect::<Result<Vec<_>, _>>()?;
            log::info!("{}: {} pairs", file.display(), pairs.len());
            sources.add_parallel(src, tgt, pairs);
            read.push(file);
        }
    }
    if let Some(p) = &paths.english_pool {
        let file = resolve(base, p);
        let en = LanguageCode::new("en")?;
        sources.english_pool = read_monolingual(&file, en, paths.strict)?.collect::<Result<Vec<_>, _>>()?;
        read.push(file);
    }
    if let Some(p) = &paths.tokenizer {
        let file = resolve(base, p);
        let json = fs::read_to_string(&file).map_err(io_err(&file))?;
        sources.tokenizer =
            TokenizerModel::from_json(&json).map_err(|e| AssembleError::Config(format!("{}: {e}", file.display())))?;
        read.push(file);
    }
    Ok((sources, read))
}
