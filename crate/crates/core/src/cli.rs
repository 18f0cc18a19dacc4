//! Command-line front end. [`dispatch`] parses arguments, runs exactly one
//! subcommand and maps the outcome to an exit status: 0 on success, 1 on a
//! domain error, 2 on a usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assemble::{
    build_epoch, load_sources, stage_sample, write_epoch, DirectionStats, EpochConfig, InputChecksum, SourcePaths,
    StageConfig,
};
use crate::augment::{
    augment_monolingual_batch, augment_parallel_batch, estimate_replacement_rate, AugmentConfig, AugmentedPair,
    SegmenterPolicy, DEFAULT_REPLACE_PROB,
};
use crate::fsutil::{sha256_file, write_atomic};
use crate::ingest::{
    parse_direction, read_bilingual_dictionary, read_embeddings, read_labels, read_monolingual, read_parallel,
    DirectionChoice, LanguageCode, MonolingualRecord, SentencePair,
};
use crate::lexicon::Lexicon;
use crate::metrics::{corpus_bleu, language_ratio, pivot_translate, spbleu, Smoothing};
use crate::par::{self, Exec};
use crate::prompts::{emit_sft_dataset, write_sft_jsonl, LanguageNames, PromptBank, SftOptions, TemplateChoice};
use crate::provider::{CachedProvider, DictionaryProvider, IdentityProvider, TranslationProvider};
use crate::vocab::{
    derive_candidates, extend_vocab, fertility, ks_lottery_with, retrieval_r_at_1_with, spearman, TokenizerModel,
};

#[derive(Debug, Parser)]
#[command(name = "mmcorpus", version, about = "Multilingual corpus construction and analysis")]
struct Cli {
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Write a machine-readable JSON summary here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or inspect multilingual lexicons.
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Code-switch bitext or monolingual text.
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Build one training epoch into sharded JSONL.
    Assemble(AssembleArgs),
    /// Tokenizer fertility and vocabulary extension.
    #[command(subcommand)]
    Vocab(VocabCmd),
    /// Embedding analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Translation scoring.
    #[command(subcommand)]
    Score(ScoreCmd),
    /// Instruction-tuning data.
    #[command(subcommand)]
    Prompts(PromptsCmd),
    /// Translate through a pivot language.
    Pivot(PivotArgs),
    /// Corpus counts.
    Stats(StatsArgs),
}

#[derive(Debug, Subcommand)]
enum LexiconCmd {
    /// Merge `{src}-{tgt}.txt` word-pair files into one lexicon.
    Build {
        #[arg(long)]
        dict_dir: PathBuf,
        /// Add translations reachable through one intermediate language.
        #[arg(long)]
        two_hop: bool,
        #[arg(long)]
        strict: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Distinct words per language.
    Stats {
        #[arg(long)]
        lexicon: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AugmentCommon {
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPLACE_PROB)]
    prob: f64,
    /// Replacement languages, comma separated (default: all lexicon languages).
    #[arg(long, value_delimiter = ',')]
    languages: Vec<String>,
    #[arg(long)]
    strict: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum AugmentCmd {
    /// Switch source-side words of a TSV bitext.
    Parallel {
        #[arg(long)]
        input: PathBuf,
        /// `src-tgt`; taken from the file name when omitted.
        #[arg(long)]
        pair: Option<String>,
        #[command(flatten)]
        common: AugmentCommon,
    },
    /// Switch words of monolingual text, one language per word.
    Mono {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lang: String,
        #[command(flatten)]
        common: AugmentCommon,
    },
}

#[derive(Debug, Args)]
struct AssembleArgs {
    /// TOML with [inputs], [epoch] and [provider] tables.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    factor: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    replace_prob: Option<f64>,
    #[arg(long)]
    shard_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum VocabCmd {
    /// Tokens per word (per character for zh/ja).
    Fertility {
        /// Tokenizer JSON; byte-level when omitted.
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lang: String,
        /// Extra tokens, one per line, to compare against the base vocabulary.
        #[arg(long)]
        add: Option<PathBuf>,
    },
    /// Append tokens and mean-initialized embedding rows.
    Extend {
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long)]
        embeddings: PathBuf,
        /// New tokens, one per line.
        #[arg(long, conflicts_with = "derive")]
        tokens: Option<PathBuf>,
        /// Derive this many candidates from --corpus instead.
        #[arg(long, requires = "corpus")]
        derive: Option<usize>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "en")]
        lang: String,
        #[arg(long)]
        out_tokenizer: PathBuf,
        #[arg(long)]
        out_embeddings: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyzeCmd {
    /// Per-row two-sample KS between embedding snapshots.
    Ks {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Include every row's statistic in the output.
        #[arg(long)]
        full: bool,
    },
    /// Mean gold cosine and nearest-neighbour R@1.
    Quality {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        /// Gold pool index per query, one per line (default: same row).
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Spearman rank correlation of two number columns.
    Spearman {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum ScoreCmd {
    /// Corpus BLEU; spBLEU when --sp is given.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        r#ref: PathBuf,
        /// Subword tokenizer JSON for spBLEU.
        #[arg(long)]
        sp: Option<PathBuf>,
        /// `none` (default) or `add-k:K`.
        #[arg(long, default_value = "none")]
        smoothing: Smoothing,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
    /// Share of sentences detected as --target and as --contrast.
    Ratio {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        contrast: String,
    },
}

#[derive(Debug, Subcommand)]
enum PromptsCmd {
    /// Sample bitext per language and render translation instructions.
    Emit {
        /// Directory of `{src}-{tgt}.tsv` files.
        #[arg(long)]
        bitext: PathBuf,
        #[arg(long, default_value_t = 1000)]
        quota: usize,
        #[arg(long)]
        seed: u64,
        /// Template index or `random`.
        #[arg(long, default_value = "random")]
        template: String,
        /// forward (pivot to X), backward (X to pivot) or both (coin per record).
        #[arg(long, default_value = "both")]
        direction: DirectionChoice,
        #[arg(long, default_value = "en")]
        pivot: String,
        /// Replacement prompt list, one template per line.
        #[arg(long)]
        prompts: Option<PathBuf>,
        /// Replacement `code<TAB>name` file.
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PivotArgs {
    #[arg(long)]
    src: String,
    #[arg(long)]
    pivot: String,
    #[arg(long)]
    tgt: String,
    /// Sentences, one per line.
    #[arg(long)]
    input: PathBuf,
    /// identity | dictionary:LEXICON | cache:FILE | http:URL
    #[arg(long)]
    provider: String,
    /// Persistent cache in front of the provider.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the intermediate pivot sentences here.
    #[arg(long)]
    pivot_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Directory of `{src}-{tgt}.tsv` files.
    #[arg(long)]
    parallel: PathBuf,
    /// Also print the sampling quotas of stage 1, 2 or 3.
    #[arg(long)]
    stage: Option<u8>,
    /// Underperforming pairs for stage 3, one `a-b` per line.
    #[arg(long)]
    underperforming: Option<PathBuf>,
}

/// Marks errors that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Parse `argv` (program name first), run one subcommand, return the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let workers = cli.workers;
    let report = cli.report.clone();
    let result = par::with_workers(workers, move || run(cli.cmd));
    match result.and_then(|summary| {
        if let Some(path) = &report {
            write_json(path, &summary)?;
        }
        Ok(())
    }) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn run(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Lexicon(c) => lexicon_cmd(c),
        Command::Augment(c) => augment_cmd(c),
        Command::Assemble(a) => assemble_cmd(a),
        Command::Vocab(c) => vocab_cmd(c),
        Command::Analyze(c) => analyze_cmd(c),
        Command::Score(c) => score_cmd(c),
        Command::Prompts(c) => prompts_cmd(c),
        Command::Pivot(a) => pivot_cmd(a),
        Command::Stats(a) => stats_cmd(a),
    }
}

// ---------------------------------------------------------------------------
// shared helpers

fn lang(code: &str) -> Result<LanguageCode> {
    LanguageCode::new(code).map_err(|e| usage(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    write_atomic(path, |w| {
        w.write_all(&bytes)?;
        w.write_all(b"\n")
    })
    .with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn checksums(paths: &[&Path]) -> Result<Vec<InputChecksum>> {
    paths.iter().map(|p| InputChecksum::of(p).map_err(Into::into)).collect()
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: Value,
    inputs: Vec<InputChecksum>,
    outputs: Vec<InputChecksum>,
}

/// `<output>.manifest.json` next to each artifact.
fn write_manifest(command: &str, config: Value, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let primary = outputs.first().ok_or_else(|| anyhow!("no outputs"))?;
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    let m = RunManifest { command, config, inputs: checksums(inputs)?, outputs: checksums(outputs)? };
    write_json(Path::new(&name), &m)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect())
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse::<f64>().with_context(|| format!("{}:{}: not a number", path.display(), i + 1)))
        .collect()
}

fn load_tokenizer(path: Option<&Path>) -> Result<TokenizerModel> {
    match path {
        None => Ok(TokenizerModel::byte_level()),
        Some(p) => {
            let json = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(TokenizerModel::from_json(&json).with_context(|| format!("loading {}", p.display()))?)
        }
    }
}

fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Lexicon::load(BufReader::new(f)).with_context(|| format!("loading {}", path.display()))
}

fn read_mono_file(path: &Path, lang: &LanguageCode, strict: bool) -> Result<Vec<MonolingualRecord>> {
    let docs = read_monolingual(path, lang.clone(), strict)?.collect::<Result<Vec<_>, _>>()?;
    Ok(docs)
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a String>) -> Result<()> {
    write_atomic(path, |w| {
        for l in lines {
            w.write_all(l.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// lexicon

fn lexicon_cmd(c: LexiconCmd) -> Result<Value> {
    match c {
        LexiconCmd::Build { dict_dir, two_hop, strict, output } => {
            let files = sorted_files(&dict_dir, "txt")?;
            let mut entries = Vec::new();
            let mut dropped = 0;
            for f in &files {
                let (s, t) = parse_direction(&file_stem(f))?;
                let load = read_bilingual_dictionary(f, &s, &t, strict)?;
                log::info!("{}: {} entries", f.display(), load.entries.len());
                dropped += load.punct_dropped + load.skipped;
                entries.extend(load.entries);
            }
            let mut lex = crate::lexicon::build_multilingual_lexicon(&entries);
            if two_hop {
                lex = lex.expand_two_hop();
            }
            let mut buf = Vec::new();
            lex.save(&mut buf)?;
            write_atomic(&output, |w| w.write_all(&buf))?;
            let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            write_manifest("lexicon build", json!({"two_hop": two_hop, "strict": strict}), &inputs, &[&output])?;
            let counts: BTreeMap<String, usize> =
                lex.supported_langs().iter().map(|l| (l.to_string(), lex.entity_count(l))).collect();
            let summary = json!({"entries": entries.len(), "dropped": dropped, "entity_count": counts});
            print_json(&summary)?;
            Ok(summary)
        }
        LexiconCmd::Stats { lexicon } => {
            let lex = load_lexicon(&lexicon)?;
            let counts: BTreeMap<String, usize> =
                lex.supported_langs().iter().map(|l| (l.to_string(), lex.entity_count(l))).collect();
            let summary = json!({"keys": lex.len(), "entity_count": counts});
            print_json(&summary)?;
            Ok(summary)
        }
    }
}

// ---------------------------------------------------------------------------
// augment

fn augment_config(common: &AugmentCommon, lex: &Lexicon, per_word: bool) -> Result<AugmentConfig> {
    let pool: Vec<LanguageCode> = if common.languages.is_empty() {
        lex.supported_langs().iter().cloned().collect()
    } else {
        common.languages.iter().map(|l| lang(l)).collect::<Result<_>>()?
    };
    if !(0.0..=1.0).contains(&common.prob) {
        return Err(usage(format!("--prob {} outside [0, 1]", common.prob)));
    }
    let cfg = if per_word {
        AugmentConfig::for_monolingual(pool, common.seed)
    } else {
        AugmentConfig::for_parallel(pool, common.seed)
    };
    Ok(cfg.with_prob(common.prob))
}

fn write_augmented(path: &Path, out: &[AugmentedPair]) -> Result<()> {
    write_atomic(path, |w| {
        for a in out {
            serde_json::to_writer(&mut *w, &a.to_record())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", path.display()))
}

fn augment_cmd(c: AugmentCmd) -> Result<Value> {
    let policy = SegmenterPolicy::default();
    let (out, common, input, config) = match c {
        AugmentCmd::Parallel { input, pair, common } => {
            let stem = pair.unwrap_or_else(|| file_stem(&input));
            let (s, t) = parse_direction(&stem).map_err(|e| usage(e.to_string()))?;
            let lex = load_lexicon(&common.lexicon)?;
            let cfg = augment_config(&common, &lex, false)?;
            let pairs: Vec<SentencePair> =
                read_parallel(&input, s, t, common.strict)?.collect::<Result<Vec<_>, _>>()?;
            let out = augment_parallel_batch(&pairs, &lex, &cfg, &policy, Exec::Parallel)?;
            (out, common, input, serde_json::to_value(&cfg)?)
        }
        AugmentCmd::Mono { input, lang: code, common } => {
            let l = lang(&code)?;
            let lex = load_lexicon(&common.lexicon)?;
            let cfg = augment_config(&common, &lex, true)?;
            let docs = read_mono_file(&input, &l, common.strict)?;
            let out = augment_monolingual_batch(&docs, &lex, &cfg, &policy, Exec::Parallel)?;
            (out, common, input, serde_json::to_value(&cfg)?)
        }
    };
    write_augmented(&common.output, &out)?;
    write_manifest("augment", config, &[&input, &common.lexicon], &[&common.output])?;
    let rate = estimate_replacement_rate(&out).ok();
    let summary = json!({
        "records": out.len(),
        "eligible": out.iter().map(|a| a.eligible).sum::<usize>(),
        "replaced": out.iter().map(|a| a.replacements.len()).sum::<usize>(),
        "rate": rate,
    });
    print_json(&summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// assemble

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum ProviderKind {
    #[default]
    Identity,
    MockDictionary,
    CacheOnly,
    Http,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
struct ProviderConfig {
    kind: ProviderKind,
    /// JSONL translation cache
    cache: Option<PathBuf>,
    url: Option<String>,
    /// lexicon for mock-dictionary; defaults to [inputs].lexicon
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
struct AssembleConfig {
    inputs: SourcePaths,
    epoch: EpochConfig,
    provider: ProviderConfig,
    shard_size: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        AssembleConfig {
            inputs: SourcePaths::default(),
            epoch: EpochConfig::default(),
            provider: ProviderConfig::default(),
            shard_size: 10_000,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn http_provider(url: &str) -> Result<Box<dyn TranslationProvider>> {
    #[cfg(feature = "http")]
    {
        Ok(Box::new(crate::provider::HttpProvider::new(url)))
    }
    #[cfg(not(feature = "http"))]
    {
        let _ = url;
        Err(usage("built without the `http` feature"))
    }
}

fn assemble_cmd(a: AssembleArgs) -> Result<Value> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg: AssembleConfig =
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    cfg.epoch.seed = a.seed;
    if let Some(v) = a.threshold {
        cfg.epoch.threshold = v;
    }
    if let Some(v) = a.factor {
        cfg.epoch.factor = v;
    }
    if let Some(v) = a.block_size {
        cfg.epoch.block_size = v;
    }
    if let Some(v) = a.replace_prob {
        cfg.epoch.replace_prob = v;
    }
    if let Some(v) = a.shard_size {
        cfg.shard_size = v;
    }
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();

    let (sources, mut read) = load_sources(&cfg.inputs, &base)?;
    let lex = match &cfg.inputs.lexicon {
        Some(p) => {
            let p = resolve(&base, p);
            let lex = load_lexicon(&p)?;
            read.push(p);
            lex
        }
        None => Lexicon::default(),
    };

    let backend: Option<Box<dyn TranslationProvider>> = match cfg.provider.kind {
        ProviderKind::Identity => Some(Box::new(IdentityProvider)),
        ProviderKind::MockDictionary => {
            let lex = match &cfg.provider.lexicon {
                Some(p) => {
                    let p = resolve(&base, p);
                    let l = load_lexicon(&p)?;
                    read.push(p);
                    l
                }
                None => lex.clone(),
            };
            Some(Box::new(DictionaryProvider::new(Arc::new(lex))))
        }
        ProviderKind::CacheOnly => None,
        ProviderKind::Http => {
            let url = cfg.provider.url.as_deref().ok_or_else(|| usage("provider kind http needs url"))?;
            Some(http_provider(url)?)
        }
    };
    let cache_path = cfg.provider.cache.as_ref().map(|p| resolve(&base, p));
    let out = match (&cache_path, backend) {
        (Some(p), backend) => {
            let cached = CachedProvider::open(p, backend)?;
            let out = build_epoch(&cfg.epoch, &sources, &cached, &lex, Exec::Parallel)?;
            cached.save()?;
            out
        }
        (None, Some(b)) => build_epoch(&cfg.epoch, &sources, b.as_ref(), &lex, Exec::Parallel)?,
        (None, None) => return Err(usage("provider kind cache-only needs a cache file")),
    };
    let inputs = read.iter().map(|p| InputChecksum::of(p)).collect::<Result<Vec<_>, _>>()?;
    let config = serde_json::to_value(&cfg)?;
    let manifest = write_epoch(&a.out_dir, &out, cfg.shard_size, config, inputs)?;
    log::info!("wrote {} records in {} shards", out.records.len(), manifest.shards.len());

    let summary = json!({
        "records": out.records.len(),
        "shards": manifest.shards,
        "stats": out.stats,
    });
    print_json(&json!({"records": out.records.len(), "shards": manifest.shards.len(), "out_dir": a.out_dir}))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// vocab

fn vocab_cmd(c: VocabCmd) -> Result<Value> {
    match c {
        VocabCmd::Fertility { tokenizer, corpus, lang: code, add } => {
            let l = lang(&code)?;
            let tok = load_tokenizer(tokenizer.as_deref())?;
            let docs = read_mono_file(&corpus, &l, false)?;
            let base = fertility(&tok, &docs, &l)?;
            let extended = match &add {
                Some(p) => {
                    let extra: Vec<String> = read_lines(p)?.into_iter().filter(|t| !t.is_empty()).collect();
                    let ext = tok.with_added_tokens(&extra)?;
                    Some(fertility(&ext, &docs, &l)?)
                }
                None => None,
            };
            let summary = json!({"base": base, "extended": extended});
            print_json(&summary)?;
            Ok(summary)
        }
        VocabCmd::Extend { tokenizer, embeddings, tokens, derive, corpus, lang: code, out_tokenizer, out_embeddings } => {
            let tok = load_tokenizer(tokenizer.as_deref())?;
            let emb = read_embeddings(&embeddings)?;
            let candidates: Vec<String> = match (tokens.as_ref(), derive) {
                (Some(p), _) => read_lines(p)?.into_iter().filter(|t| !t.is_empty()).collect(),
                (None, Some(n)) => {
                    let l = lang(&code)?;
                    let corpus = corpus.as_ref().ok_or_else(|| usage("--derive needs --corpus"))?;
                    let docs = read_mono_file(corpus, &l, false)?;
                    derive_candidates(&docs, &tok, n)?
                }
                (None, None) => return Err(usage("give --tokens or --derive")),
            };
            let (new_tok, new_emb) = extend_vocab(&tok, &candidates, &emb)?;
            let tok_json = new_tok.to_json();
            write_atomic(&out_tokenizer, |w| w.write_all(tok_json.as_bytes()))?;
            let mut buf = Vec::new();
            crate::ingest::write_embeddings(&mut buf, &new_emb)?;
            write_atomic(&out_embeddings, |w| w.write_all(&buf))?;
            let mut inputs: Vec<&Path> = vec![&embeddings];
            if let Some(p) = &tokenizer {
                inputs.push(p);
            }
            if let Some(p) = &tokens {
                inputs.push(p);
            }
            if let Some(p) = &corpus {
                inputs.push(p);
            }
            write_manifest(
                "vocab extend",
                json!({"candidates": candidates, "derive": derive}),
                &inputs,
                &[&out_tokenizer, &out_embeddings],
            )?;
            let summary = json!({"added": candidates.len(), "vocab_size": new_tok.len(), "rows": new_emb.vocab_size()});
            print_json(&summary)?;
            Ok(summary)
        }
    }
}

// ---------------------------------------------------------------------------
// analyze

fn analyze_cmd(c: AnalyzeCmd) -> Result<Value> {
    let summary = match c {
        AnalyzeCmd::Ks { before, after, alpha, full } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(usage(format!("--alpha {alpha} outside (0, 1)")));
            }
            let a = read_embeddings(&before)?;
            let b = read_embeddings(&after)?;
            let mut report = serde_json::to_value(ks_lottery_with(&a, &b, alpha, Exec::Parallel)?)?;
            if !full {
                report.as_object_mut().expect("object").remove("per_token");
            }
            report
        }
        AnalyzeCmd::Quality { queries, pool, gold } => {
            let q = read_embeddings(&queries)?;
            let p = read_embeddings(&pool)?;
            let gold: Vec<usize> = match gold {
                Some(g) => read_numbers(&g)?.into_iter().map(|x| x as usize).collect(),
                None => (0..q.vocab_size()).collect(),
            };
            serde_json::to_value(retrieval_r_at_1_with(&q, &p, &gold, Exec::Parallel)?)?
        }
        AnalyzeCmd::Spearman { x, y } => {
            let rho = spearman(&read_numbers(&x)?, &read_numbers(&y)?)?;
            json!({"rho": rho})
        }
    };
    print_json(&summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// score

fn score_cmd(c: ScoreCmd) -> Result<Value> {
    let summary = match c {
        ScoreCmd::Bleu { hyp, r#ref, sp, smoothing, max_n } => {
            let h = read_lines(&hyp)?;
            let r = read_lines(&r#ref)?;
            let score = match sp {
                Some(p) => {
                    if max_n != 4 {
                        return Err(usage("spBLEU uses max_n 4"));
                    }
                    spbleu(&h, &r, &load_tokenizer(Some(&p))?, smoothing, Exec::Parallel)?
                }
                None => corpus_bleu(&h, &r, max_n, smoothing)?,
            };
            serde_json::to_value(score)?
        }
        ScoreCmd::Ratio { labels, target, contrast } => {
            let labels = read_labels(&labels)?;
            serde_json::to_value(language_ratio(&labels, &lang(&target)?, &lang(&contrast)?)?)?
        }
    };
    print_json(&summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// prompts

fn prompts_cmd(c: PromptsCmd) -> Result<Value> {
    let PromptsCmd::Emit { bitext, quota, seed, template, direction, pivot, prompts, names, output } = c;
    let pivot = lang(&pivot)?;
    let bank = match &prompts {
        Some(p) => PromptBank::parse(&fs::read_to_string(p)?)?,
        None => PromptBank::builtin(),
    };
    let names_map = match &names {
        Some(p) => LanguageNames::parse(&fs::read_to_string(p)?)?,
        None => LanguageNames::builtin(),
    };
    let template = if template == "random" {
        TemplateChoice::Random
    } else {
        let i: usize = template.parse().map_err(|_| usage(format!("--template {template:?}: expected index or random")))?;
        bank.get(i).map_err(|e| usage(e.to_string()))?;
        TemplateChoice::Index(i)
    };

    // group by the non-pivot language; pairs are oriented pivot -> X
    let files = sorted_files(&bitext, "tsv")?;
    let mut sources: BTreeMap<LanguageCode, Vec<SentencePair>> = BTreeMap::new();
    for f in &files {
        let (s, t) = parse_direction(&file_stem(f))?;
        let pairs = read_parallel(f, s.clone(), t.clone(), false)?.collect::<Result<Vec<_>, _>>()?;
        let (key, flip) = if s == pivot { (t, false) } else if t == pivot { (s, true) } else { (t, false) };
        sources.entry(key).or_default().extend(pairs.into_iter().map(|p| if flip { p.swapped() } else { p }));
    }
    let opts = SftOptions { quota, template, direction, seed };
    let records = emit_sft_dataset(&sources, &bank, &names_map, &opts, Exec::Parallel)?;
    let mut buf = Vec::new();
    write_sft_jsonl(&mut buf, &records)?;
    write_atomic(&output, |w| w.write_all(&buf))?;
    let mut inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    inputs.extend(prompts.as_deref());
    inputs.extend(names.as_deref());
    let per_lang: BTreeMap<String, usize> = sources.iter().map(|(l, v)| (l.to_string(), v.len().min(quota))).collect();
    write_manifest(
        "prompts emit",
        json!({"quota": quota, "seed": seed, "template": format!("{template:?}"), "direction": direction, "pivot": pivot}),
        &inputs,
        &[&output],
    )?;
    let summary = json!({"records": records.len(), "per_language": per_lang});
    print_json(&summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// pivot

fn parse_provider(spec: &str, cache: Option<&Path>) -> Result<Box<dyn TranslationProvider>> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let backend: Option<Box<dyn TranslationProvider>> = match kind {
        "identity" => Some(Box::new(IdentityProvider)),
        "dictionary" if !arg.is_empty() => Some(Box::new(DictionaryProvider::new(Arc::new(load_lexicon(Path::new(arg))?)))),
        "cache" if !arg.is_empty() => return Ok(Box::new(CachedProvider::open(Path::new(arg), None)?)),
        "http" if !arg.is_empty() => Some(http_provider(arg)?),
        _ => return Err(usage(format!("--provider {spec:?}: expected identity, dictionary:FILE, cache:FILE or http:URL"))),
    };
    Ok(match (cache, backend) {
        (Some(p), b) => Box::new(CachedProvider::open(p, b)?),
        (None, Some(b)) => b,
        (None, None) => unreachable!(),
    })
}

fn pivot_cmd(a: PivotArgs) -> Result<Value> {
    let (src, piv, tgt) = (lang(&a.src)?, lang(&a.pivot)?, lang(&a.tgt)?);
    let sentences: Vec<String> = read_lines(&a.input)?;
    let cached = match &a.cache {
        Some(p) => Some(CachedProvider::open(p, Some(parse_provider(&a.provider, None)?))?),
        None => None,
    };
    let out = match &cached {
        Some(c) => pivot_translate(c, &sentences, &src, &piv, &tgt)?,
        None => pivot_translate(parse_provider(&a.provider, None)?.as_ref(), &sentences, &src, &piv, &tgt)?,
    };
    if let Some(c) = &cached {
        c.save()?;
    }
    write_lines(&a.output, &out.output)?;
    let mut outputs: Vec<&Path> = vec![&a.output];
    if let Some(p) = &a.pivot_output {
        write_lines(p, &out.pivot)?;
        outputs.push(p);
    }
    write_manifest(
        "pivot",
        json!({"src": src, "pivot": piv, "tgt": tgt, "provider": a.provider}),
        &[&a.input],
        &outputs,
    )?;
    let summary = json!({"sentences": out.output.len()});
    print_json(&summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// stats

#[derive(Serialize)]
struct DirectionCount {
    src: LanguageCode,
    tgt: LanguageCode,
    pairs: usize,
    lines: usize,
    skipped: usize,
    sha256: String,
}

fn stats_cmd(a: StatsArgs) -> Result<Value> {
    let files = sorted_files(&a.parallel, "tsv")?;
    let mut rows = Vec::new();
    let mut union: BTreeMap<(LanguageCode, LanguageCode), usize> = BTreeMap::new();
    for f in &files {
        let (s, t) = parse_direction(&file_stem(f))?;
        let mut reader = read_parallel(f, s.clone(), t.clone(), false)?;
        let pairs = reader.by_ref().filter(|r| r.is_ok()).count();
        let counts = reader.counts();
        let key = if s <= t { (s.clone(), t.clone()) } else { (t.clone(), s.clone()) };
        *union.entry(key).or_default() += pairs;
        rows.push(DirectionCount { src: s, tgt: t, pairs, lines: counts.lines, skipped: counts.skipped, sha256: sha256_file(f)? });
    }
    {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        writeln!(out, "src\ttgt\tpairs\tskipped")?;
        for r in &rows {
            writeln!(out, "{}\t{}\t{}\t{}", r.src, r.tgt, r.pairs, r.skipped)?;
        }
    }
    let mut summary = json!({"directions": rows});
    if let Some(stage) = a.stage {
        let under = match &a.underperforming {
            Some(p) => read_lines(p)?
                .iter()
                .filter(|l| !l.trim().is_empty())
                .map(|l| parse_direction(l.trim()).map_err(|e| usage(e.to_string())))
                .collect::<Result<Vec<_>>>()?,
            None => vec![],
        };
        let cfg = StageConfig::for_stage(stage, under).map_err(|e| usage(e.to_string()))?;
        let stats: Vec<DirectionStats> = union
            .into_iter()
            .map(|(pair, n)| DirectionStats { pair, natural_count: n, replicated_count: 0, synthetic_count: 0 })
            .collect();
        let quotas = stage_sample(&stats, &cfg)?;
        print_json(&quotas)?;
        summary["stage"] = serde_json::to_value(quotas)?;
    }
    Ok(summary)
}
