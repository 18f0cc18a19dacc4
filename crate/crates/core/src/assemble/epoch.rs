use std::collections::{BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{block_split, make_augmented_record, make_connected_record, replicate_low_resource, AssembleError, TrainingRecord};
use crate::augment::{code_switch_parallel, AugmentConfig, AugmentedPair, SegmenterPolicy, DEFAULT_REPLACE_PROB};
use crate::ingest::{Direction, DirectionChoice, LanguageCode, MonolingualRecord, Origin, SentencePair};
use crate::lexicon::Lexicon;
use crate::par::{self, Exec};
use crate::provider::{ProviderError, TranslationProvider};
use crate::rng;

use super::sources::EpochSources;

/// Knobs for one epoch. Defaults: threshold 25,000, factor 3, block 512,
/// replacement probability 0.90.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochConfig {
    pub seed: u64,
    /// restrict the epoch to these languages; all loaded languages otherwise
    pub languages: Option<Vec<LanguageCode>>,
    pub pivot: LanguageCode,
    pub threshold: usize,
    pub factor: usize,
    pub block_size: usize,
    pub replace_prob: f64,
    pub replicate: bool,
    pub fill: bool,
    /// also synthesize for pairs with no natural data at all
    pub fill_empty_pairs: bool,
    /// sample at most this many natural pairs per unordered pair
    pub pair_quota: Option<usize>,
    /// sample at most this many monolingual documents per language
    pub mono_quota: Option<usize>,
    pub provider_batch: usize,
    pub stage: Option<u8>,
}

impl Default for EpochConfig {
    fn default() -> Self {
        EpochConfig {
            seed: 0,
            languages: None,
            pivot: LanguageCode::new("en").expect("valid code"),
            threshold: 25_000,
            factor: 3,
            block_size: 512,
            replace_prob: DEFAULT_REPLACE_PROB,
            replicate: true,
            fill: true,
            fill_empty_pairs: false,
            pair_quota: None,
            mono_quota: None,
            provider_batch: 64,
            stage: None,
        }
    }
}

impl EpochConfig {
    pub fn validate(&self) -> Result<(), AssembleError> {
        if self.factor == 0 {
            return Err(AssembleError::Config("factor must be at least 1".into()));
        }
        if self.block_size == 0 {
            return Err(AssembleError::Config("block_size must be at least 1".into()));
        }
        if self.provider_batch == 0 {
            return Err(AssembleError::Config("provider_batch must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.replace_prob) {
            return Err(AssembleError::Config(format!("replace_prob {} outside [0, 1]", self.replace_prob)));
        }
        Ok(())
    }
}

/// Realized counts for one unordered language pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub pair: (LanguageCode, LanguageCode),
    pub natural_count: usize,
    pub replicated_count: usize,
    pub synthetic_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPlan {
    pub pair: (LanguageCode, LanguageCode),
    /// both directions before quota sampling
    pub available: usize,
    pub natural: usize,
    pub factor: usize,
    pub fill: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoPlan {
    pub lang: LanguageCode,
    pub available: usize,
    pub taken: usize,
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub threshold: usize,
    pub factor: usize,
    pub block_size: usize,
    pub languages: Vec<LanguageCode>,
    pub mono: Vec<MonoPlan>,
    pub pairs: Vec<PairPlan>,
    /// pool sentences dropped because they also occur in the pivot's monolingual data
    pub pool_overlap_dropped: usize,
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct EpochOutput {
    pub plan: EpochPlan,
    pub records: Vec<TrainingRecord>,
    pub stats: Vec<DirectionStats>,
}

pub fn pair_key(s: &LanguageCode, t: &LanguageCode) -> String {
    format!("{s}-{t}")
}

fn translate_batched<P: TranslationProvider + ?Sized>(
    provider: &P,
    texts: &[String],
    src: &LanguageCode,
    tgt: &LanguageCode,
    batch: usize,
) -> Result<Vec<String>, AssembleError> {
    let mut out = Vec::with_capacity(texts.len());
    for (k, chunk) in texts.chunks(batch).enumerate() {
        let offset = k * batch;
        let wrap = |source| AssembleError::Provider { src: src.clone(), tgt: tgt.clone(), source };
        let got = provider.translate(chunk, src, tgt).map_err(|e| match e {
            ProviderError::Backend { index, message } => {
                wrap(ProviderError::Backend { index: index.map(|i| i + offset).or(Some(offset)), message })
            }
            ProviderError::CacheMiss { src, tgt, index } => wrap(ProviderError::CacheMiss { src, tgt, index: index + offset }),
            other => wrap(other),
        })?;
        if got.len() != chunk.len() {
            return Err(wrap(ProviderError::LengthMismatch { expected: chunk.len(), got: got.len() }));
        }
        out.extend(got);
    }
    Ok(out)
}

/// Translate the first `n` pool sentences into `s` and `t`, pair the two
/// translations, orient each pair by a fair coin and code-switch its source.
/// A side equal to `pivot` keeps the pool sentence itself.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_pivot_pairs<P: TranslationProvider + ?Sized, R: Rng + ?Sized>(
    en_pool: &[MonolingualRecord],
    s: &LanguageCode,
    t: &LanguageCode,
    n: usize,
    pivot: &LanguageCode,
    provider: &P,
    lex: &Lexicon,
    cfg: &AugmentConfig,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<AugmentedPair>, AssembleError> {
    if n == 0 {
        return Ok(vec![]);
    }
    if en_pool.len() < n {
        return Err(AssembleError::InsufficientPool { needed: n, available: en_pool.len() });
    }
    let english: Vec<String> = en_pool[..n].iter().map(|r| r.text.clone()).collect();
    let into = |lang: &LanguageCode| {
        if lang == pivot {
            Ok(english.clone())
        } else {
            translate_batched(provider, &english, pivot, lang, batch.max(1))
        }
    };
    let side_s = into(s)?;
    let side_t = into(t)?;
    let policy = SegmenterPolicy::default();
    let mut out = Vec::with_capacity(n);
    for (a, b) in side_s.into_iter().zip(side_t) {
        let pair = SentencePair::new(s.clone(), t.clone(), a, b)?.with_origin(Origin::Synthetic);
        let oriented = match DirectionChoice::Random.resolve(rng) {
            Direction::Forward => pair,
            Direction::Backward => pair.swapped(),
        };
        out.push(code_switch_parallel(&oriented, lex, cfg, &policy, rng)?);
    }
    Ok(out)
}

struct PairOutput {
    plan: PairPlan,
    stats: DirectionStats,
    records: Vec<TrainingRecord>,
}

#[allow(clippy::too_many_arguments)]
fn assemble_pair<P: TranslationProvider + ?Sized>(
    cfg: &EpochConfig,
    s: &LanguageCode,
    t: &LanguageCode,
    natural_all: Vec<&SentencePair>,
    pool: &[&MonolingualRecord],
    provider: &P,
    lex: &Lexicon,
    aug_cfg: &AugmentConfig,
) -> Result<PairOutput, AssembleError> {
    let key = pair_key(s, t);
    let available = natural_all.len();
    let natural: Vec<SentencePair> = match cfg.pair_quota {
        Some(q) if q < available => {
            let mut r = rng::substream(cfg.seed, "quota", key.as_bytes());
            index::sample(&mut r, available, q).into_iter().map(|i| natural_all[i].clone()).collect()
        }
        _ => natural_all.into_iter().cloned().collect(),
    };
    let n = natural.len();
    let below = n < cfg.threshold;
    let factor = if cfg.replicate && below { cfg.factor } else { 1 };
    let listed = replicate_low_resource(&natural, cfg.threshold, factor);

    let mut dir_rng = rng::substream(cfg.seed, "direction", key.as_bytes());
    let mut records: Vec<TrainingRecord> =
        listed.iter().map(|p| make_connected_record(p, DirectionChoice::Random, &mut dir_rng)).collect();

    let fill = if cfg.fill && below && (n > 0 || cfg.fill_empty_pairs) { cfg.threshold - n } else { 0 };
    if fill > 0 {
        if pool.len() < fill {
            return Err(AssembleError::InsufficientPool { needed: fill, available: pool.len() });
        }
        let mut pool_rng = rng::substream(cfg.seed, "pivot-pool", key.as_bytes());
        let chosen: Vec<MonolingualRecord> =
            index::sample(&mut pool_rng, pool.len(), fill).into_iter().map(|i| pool[i].clone()).collect();
        let mut syn_rng = rng::substream(cfg.seed, "synthetic", key.as_bytes());
        let augmented = synthesize_pivot_pairs(
            &chosen,
            s,
            t,
            fill,
            &cfg.pivot,
            provider,
            lex,
            aug_cfg,
            cfg.provider_batch,
            &mut syn_rng,
        )?;
        records.extend(augmented.iter().map(|a| {
            let dir = if a.src_lang() == s { Direction::Forward } else { Direction::Backward };
            make_augmented_record(a, dir)
        }));
    }
    let pair = (s.clone(), t.clone());
    Ok(PairOutput {
        plan: PairPlan { pair: pair.clone(), available, natural: n, factor, fill },
        stats: DirectionStats {
            pair,
            natural_count: n,
            replicated_count: listed.len() - n,
            synthetic_count: fill,
        },
        records,
    })
}

/// One epoch: for every unordered pair `{s, t}` the union of both directions,
/// replication and pivot fill below the threshold; monolingual blocks per
/// language; then one seeded permutation of everything.
pub fn build_epoch<P: TranslationProvider + ?Sized>(
    cfg: &EpochConfig,
    sources: &EpochSources,
    provider: &P,
    lex: &Lexicon,
    exec: Exec,
) -> Result<EpochOutput, AssembleError> {
    cfg.validate()?;
    let universe: BTreeSet<LanguageCode> = match &cfg.languages {
        Some(ls) => ls.iter().cloned().collect(),
        None => sources.languages.clone(),
    };
    for lang in sources.languages.iter() {
        if !universe.contains(lang) {
            return Err(AssembleError::UnknownLanguage(lang.clone()));
        }
    }

    // pool sentences that also appear in the pivot's monolingual data are unusable
    let pivot_mono: HashSet<&str> = sources
        .monolingual
        .get(&cfg.pivot)
        .map(|v| v.iter().map(|r| r.text.as_str()).collect())
        .unwrap_or_default();
    let pool: Vec<&MonolingualRecord> =
        sources.english_pool.iter().filter(|r| !pivot_mono.contains(r.text.as_str())).collect();
    let pool_overlap_dropped = sources.english_pool.len() - pool.len();

    let aug_cfg = AugmentConfig::for_parallel(universe.iter().cloned(), cfg.seed).with_prob(cfg.replace_prob);
    let langs: Vec<&LanguageCode> = universe.iter().collect();
    let mut tasks = Vec::new();
    for (i, s) in langs.iter().enumerate() {
        for t in &langs[i + 1..] {
            let mut natural: Vec<&SentencePair> = Vec::new();
            for key in [((*s).clone(), (*t).clone()), ((*t).clone(), (*s).clone())] {
                if let Some(v) = sources.parallel.get(&key) {
                    natural.extend(v.iter());
                }
            }
            if natural.is_empty() && !(cfg.fill && cfg.fill_empty_pairs) {
                continue;
            }
            tasks.push((*s, *t, natural));
        }
    }
    log::info!("assembling {} language pairs", tasks.len());

    let pair_outputs = par::try_map(exec, &tasks, |(s, t, natural)| {
        let out = assemble_pair(cfg, s, t, natural.clone(), &pool, provider, lex, &aug_cfg)
            .map_err(|e| AssembleError::InPair { s: (*s).clone(), t: (*t).clone(), source: Box::new(e) })?;
        log::debug!("pair {}: {} records", pair_key(s, t), out.records.len());
        Ok::<_, AssembleError>(out)
    })?;

    let tok = &sources.tokenizer;
    let mono_langs: Vec<(&LanguageCode, &Vec<MonolingualRecord>)> =
        langs.iter().filter_map(|l| sources.monolingual.get(*l).map(|v| (*l, v))).collect();
    let mono_outputs = par::map(exec, &mono_langs, |(lang, docs)| {
        let picked: Vec<&MonolingualRecord> = match cfg.mono_quota {
            Some(q) if q < docs.len() => {
                let mut r = rng::substream(cfg.seed, "mono", lang.as_str().as_bytes());
                index::sample(&mut r, docs.len(), q).into_iter().map(|i| &docs[i]).collect()
            }
            _ => docs.iter().collect(),
        };
        let blocks: Vec<TrainingRecord> = picked.iter().flat_map(|d| block_split(d, tok, cfg.block_size)).collect();
        (MonoPlan { lang: (*lang).clone(), available: docs.len(), taken: picked.len(), blocks: blocks.len() }, blocks)
    });

    let mut plan = EpochPlan {
        threshold: cfg.threshold,
        factor: cfg.factor,
        block_size: cfg.block_size,
        languages: universe.iter().cloned().collect(),
        mono: Vec::new(),
        pairs: Vec::new(),
        pool_overlap_dropped,
        records: 0,
    };
    let mut stats = Vec::new();
    let mut ordered = Vec::new();
    for p in pair_outputs {
        plan.pairs.push(p.plan);
        stats.push(p.stats);
        ordered.extend(p.records);
    }
    for (m, blocks) in mono_outputs {
        plan.mono.push(m);
        ordered.extend(blocks);
    }
    if let Some(stage) = cfg.stage {
        for r in &mut ordered {
            r.meta.stage = Some(stage);
        }
    }

    let mut perm: Vec<usize> = (0..ordered.len()).collect();
    perm.shuffle(&mut rng::substream(cfg.seed, "shuffle", b""));
    let mut slots: Vec<Option<TrainingRecord>> = ordered.into_iter().map(Some).collect();
    let records: Vec<TrainingRecord> = perm.iter().map(|&i| slots[i].take().expect("permutation")).collect();
    plan.records = records.len();
    Ok(EpochOutput { plan, records, stats })
}
