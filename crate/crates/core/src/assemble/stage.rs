use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::epoch::{pair_key, DirectionStats};
use super::AssembleError;
use crate::ingest::LanguageCode;

/// Sampling quotas of one pretraining stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: u8,
    pub pair_quota: usize,
    pub pair_quota_underperforming: usize,
    pub mono_quota: usize,
    pub mono_quota_underperforming: usize,
    /// copies of a pair's data when it has fewer than `pair_quota` entries
    pub copies: usize,
    /// synthetic entries per sampled natural entry for such pairs
    pub synthetic_ratio: f64,
    pub underperforming: BTreeSet<(LanguageCode, LanguageCode)>,
    pub pivot: LanguageCode,
}

fn ordered(a: LanguageCode, b: LanguageCode) -> (LanguageCode, LanguageCode) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl StageConfig {
    fn base(stage: u8) -> Self {
        StageConfig {
            stage,
            pair_quota: 50_000,
            pair_quota_underperforming: 50_000,
            mono_quota: 400_000,
            mono_quota_underperforming: 400_000,
            copies: 1,
            synthetic_ratio: 0.0,
            underperforming: BTreeSet::new(),
            pivot: LanguageCode::new("en").expect("valid code"),
        }
    }

    /// 50,000 per pair, three copies below that, 400,000 monolingual.
    pub fn stage1() -> Self {
        StageConfig { copies: 3, ..Self::base(1) }
    }

    /// 50,000 per pair; below that the data twice plus synthetic at 1:1; 200,000 monolingual.
    pub fn stage2() -> Self {
        StageConfig { copies: 2, synthetic_ratio: 1.0, mono_quota: 200_000, mono_quota_underperforming: 200_000, ..Self::base(2) }
    }

    /// 700,000 per underperforming pair, 350,000 otherwise; monolingual
    /// 30,000 per language, 15,000 for languages of underperforming pairs.
    pub fn stage3(underperforming: impl IntoIterator<Item = (LanguageCode, LanguageCode)>) -> Self {
        StageConfig {
            pair_quota: 350_000,
            pair_quota_underperforming: 700_000,
            mono_quota: 30_000,
            mono_quota_underperforming: 15_000,
            underperforming: underperforming.into_iter().map(|(a, b)| ordered(a, b)).collect(),
            ..Self::base(3)
        }
    }

    pub fn for_stage(stage: u8, underperforming: Vec<(LanguageCode, LanguageCode)>) -> Result<Self, AssembleError> {
        match stage {
            1 => Ok(Self::stage1()),
            2 => Ok(Self::stage2()),
            3 => Ok(Self::stage3(underperforming)),
            n => Err(AssembleError::Config(format!("unknown stage {n}"))),
        }
    }

    fn underperforming_langs(&self) -> BTreeSet<&LanguageCode> {
        self.underperforming.iter().flat_map(|(a, b)| [a, b]).filter(|l| **l != self.pivot).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairQuota {
    pub pair: (LanguageCode, LanguageCode),
    pub underperforming: bool,
    /// natural entries sampled
    pub natural: usize,
    pub copies: usize,
    /// extra entries from copying
    pub replicated: usize,
    pub synthetic: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageQuotas {
    pub stage: u8,
    pub pairs: Vec<PairQuota>,
    pub mono: BTreeMap<LanguageCode, usize>,
}

/// Per-pair and per-language quotas of `stage` given realized pair counts.
pub fn stage_sample(stats: &[DirectionStats], stage: &StageConfig) -> Result<StageQuotas, AssembleError> {
    let known: BTreeSet<(LanguageCode, LanguageCode)> =
        stats.iter().map(|s| ordered(s.pair.0.clone(), s.pair.1.clone())).collect();
    if let Some((a, b)) = stage.underperforming.iter().find(|p| !known.contains(p)) {
        return Err(AssembleError::UnknownPair(pair_key(a, b)));
    }
    let weak_langs = stage.underperforming_langs();
    let mut pairs = Vec::with_capacity(stats.len());
    let mut mono = BTreeMap::new();
    for s in stats {
        let pair = ordered(s.pair.0.clone(), s.pair.1.clone());
        let underperforming = stage.underperforming.contains(&pair);
        let quota = if underperforming { stage.pair_quota_underperforming } else { stage.pair_quota };
        let natural = s.natural_count.min(quota);
        let short = s.natural_count < quota;
        let copies = if short { stage.copies.max(1) } else { 1 };
        let synthetic = if short { (natural as f64 * stage.synthetic_ratio).round() as usize } else { 0 };
        for lang in [&pair.0, &pair.1] {
            let q = if weak_langs.contains(lang) { stage.mono_quota_underperforming } else { stage.mono_quota };
            mono.insert(lang.clone(), q);
        }
        pairs.push(PairQuota { pair, underperforming, natural, copies, replicated: natural * (copies - 1), synthetic });
    }
    Ok(StageQuotas { stage: stage.stage, pairs, mono })
}
