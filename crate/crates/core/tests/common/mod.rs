#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use mmcorpus::assemble::{EpochConfig, EpochSources, TrainingRecord};
use mmcorpus::augment::{code_switch_parallel, AugmentConfig, SegmenterPolicy};
use mmcorpus::ingest::{DictEntryPair, LanguageCode, MonolingualRecord, Origin, SentencePair};
use mmcorpus::lexicon::{build_multilingual_lexicon, Lexicon};
use mmcorpus::provider::TranslationProvider;
use mmcorpus::rng;
use mmcorpus::vocab::TokenizerModel;
use rand::seq::{index, IndexedRandom};
use rand::Rng;

pub fn l(s: &str) -> LanguageCode {
    LanguageCode::new(s).unwrap()
}

pub fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn pairs(s: &str, t: &str, n: usize) -> Vec<SentencePair> {
    (0..n)
        .map(|i| SentencePair::new(l(s), l(t), format!("{s} word {i}"), format!("{t} word {i}")).unwrap())
        .collect()
}

pub fn english_pool(n: usize) -> Vec<MonolingualRecord> {
    (0..n)
        .map(|i| MonolingualRecord::new(l("en"), format!("the dog sees house {i}"), format!("pool:{i}")).unwrap())
        .collect()
}

/// en-de / en-fr / en-sw word lists sharing English keys.
pub fn toy_lexicon() -> Lexicon {
    let rows = [
        ("the", "der", "le", "ya"),
        ("dog", "Hund", "chien", "mbwa"),
        ("sees", "sieht", "voit", "anaona"),
        ("house", "Haus", "maison", "nyumba"),
        ("word", "Wort", "mot", "neno"),
    ];
    let mut entries = Vec::new();
    for (en, de, fr, sw) in rows {
        entries.push(DictEntryPair::new(l("en"), l("de"), en, de).unwrap());
        entries.push(DictEntryPair::new(l("en"), l("fr"), en, fr).unwrap());
        entries.push(DictEntryPair::new(l("en"), l("sw"), en, sw).unwrap());
    }
    build_multilingual_lexicon(entries)
}

/// Four languages; per-direction counts 1, 3, threshold-1 and threshold for threshold 4.
pub fn acceptance_universe() -> EpochSources {
    let mut src = EpochSources::default();
    src.add_parallel(l("en"), l("de"), pairs("en", "de", 1));
    src.add_parallel(l("fr"), l("en"), pairs("fr", "en", 3));
    src.add_parallel(l("de"), l("fr"), pairs("de", "fr", 3));
    src.add_parallel(l("sw"), l("en"), pairs("sw", "en", 4));
    src.add_monolingual(
        l("en"),
        vec![
            MonolingualRecord::new(l("en"), "the dog sees house 0", "en:1").unwrap(),
            MonolingualRecord::new(l("en"), "a much longer english document that spans blocks", "en:2").unwrap(),
        ],
    );
    src.add_monolingual(l("sw"), vec![MonolingualRecord::new(l("sw"), "mbwa anaona nyumba", "sw:1").unwrap()]);
    src.english_pool = english_pool(40);
    src
}

// ---------------------------------------------------------------------------
// straight-line reference of the epoch algorithm

fn rec(text: String, span: (usize, usize), src: &LanguageCode, tgt: Option<&LanguageCode>, fwd: Option<bool>, origin: &str) -> String {
    // serialized independently of the library's record type
    let mut m = serde_json::Map::new();
    m.insert("src_lang".into(), src.as_str().into());
    if let Some(t) = tgt {
        m.insert("tgt_lang".into(), t.as_str().into());
    }
    if let Some(f) = fwd {
        m.insert("direction".into(), if f { "forward" } else { "backward" }.into());
    }
    m.insert("origin".into(), origin.into());
    serde_json::json!({"text": text, "span": [span.0, span.1], "meta": m}).to_string()
}

/// Canonical form of a library record for multiset comparison with [`reference_epoch`].
pub fn canonical(r: &TrainingRecord) -> String {
    assert_eq!(r.loss_spans.len(), 1, "reference records carry one span");
    rec(
        r.text.clone(),
        r.loss_spans[0],
        &r.meta.src_lang,
        r.meta.tgt_lang.as_ref(),
        r.meta.direction.map(|d| d == mmcorpus::ingest::Direction::Forward),
        &r.meta.origin.to_string(),
    )
}

/// (pair key, natural, replicated, synthetic)
pub type RefStat = (String, usize, usize, usize);

/// Walk every language s and every other language t, build the union of
/// both directions once per unordered pair, replicate and fill below the
/// threshold, and split monolingual documents into blocks. Uses the same
/// seeded substreams as the library so outputs are comparable record by record.
pub fn reference_epoch<P: TranslationProvider + ?Sized>(
    cfg: &EpochConfig,
    src: &EpochSources,
    provider: &P,
    lex: &Lexicon,
) -> (Vec<String>, Vec<RefStat>) {
    let mut langs: Vec<LanguageCode> = match &cfg.languages {
        Some(v) => v.clone(),
        None => src.languages.iter().cloned().collect(),
    };
    langs.sort();
    langs.dedup();
    let pivot_texts: HashSet<String> =
        src.monolingual.get(&cfg.pivot).map(|v| v.iter().map(|r| r.text.clone()).collect()).unwrap_or_default();
    let pool: Vec<&MonolingualRecord> = src.english_pool.iter().filter(|r| !pivot_texts.contains(&r.text)).collect();
    let aug_cfg = AugmentConfig::for_parallel(langs.clone(), cfg.seed).with_prob(cfg.replace_prob);
    let policy = SegmenterPolicy::default();

    let mut out = Vec::new();
    let mut stats = Vec::new();
    let mut visited: HashSet<(LanguageCode, LanguageCode)> = HashSet::new();
    for s in &langs {
        if let Some(docs) = src.monolingual.get(s) {
            let chosen: Vec<&MonolingualRecord> = match cfg.mono_quota {
                Some(q) if q < docs.len() => {
                    let mut r = rng::substream(cfg.seed, "mono", s.as_str().as_bytes());
                    index::sample(&mut r, docs.len(), q).into_iter().map(|i| &docs[i]).collect()
                }
                _ => docs.iter().collect(),
            };
            for d in chosen {
                let ids = src.tokenizer.encode(&d.text);
                let mut start = 0;
                while start < ids.len() {
                    let end = (start + cfg.block_size).min(ids.len());
                    let text = src.tokenizer.decode_lossy(&ids[start..end]);
                    let n = text.len();
                    out.push(rec(text, (0, n), s, None, None, "monolingual"));
                    start = end;
                }
            }
        }
        for t in &langs {
            if t == s {
                continue;
            }
            let (a, b) = if s < t { (s.clone(), t.clone()) } else { (t.clone(), s.clone()) };
            if !visited.insert((a.clone(), b.clone())) {
                continue;
            }
            let key = format!("{a}-{b}");
            let mut para: Vec<SentencePair> = Vec::new();
            para.extend(src.parallel.get(&(a.clone(), b.clone())).into_iter().flatten().cloned());
            para.extend(src.parallel.get(&(b.clone(), a.clone())).into_iter().flatten().cloned());
            if para.is_empty() && !(cfg.fill && cfg.fill_empty_pairs) {
                continue;
            }
            if let Some(q) = cfg.pair_quota {
                if q < para.len() {
                    let mut r = rng::substream(cfg.seed, "quota", key.as_bytes());
                    let idx = index::sample(&mut r, para.len(), q).into_vec();
                    para = idx.into_iter().map(|i| para[i].clone()).collect();
                }
            }
            let n = para.len();
            let mut listed = para.clone();
            if cfg.replicate && n < cfg.threshold {
                for _ in 1..cfg.factor {
                    for p in &para {
                        let mut c = p.clone();
                        c.origin = Origin::Replicated;
                        listed.push(c);
                    }
                }
            }
            let mut dir = rng::substream(cfg.seed, "direction", key.as_bytes());
            for p in &listed {
                let fwd = dir.random_bool(0.5);
                let (x, y, xl, yl) = if fwd {
                    (&p.src_text, &p.tgt_text, &p.src_lang, &p.tgt_lang)
                } else {
                    (&p.tgt_text, &p.src_text, &p.tgt_lang, &p.src_lang)
                };
                let text = format!("{x} {y}");
                let len = text.len();
                let origin = if p.origin == Origin::Replicated { "replicated" } else { "natural" };
                out.push(rec(text, (0, len), xl, Some(yl), Some(fwd), origin));
            }
            let mut synthetic = 0;
            if cfg.fill && n < cfg.threshold && (n > 0 || cfg.fill_empty_pairs) {
                let m = cfg.threshold - n;
                let mut pr = rng::substream(cfg.seed, "pivot-pool", key.as_bytes());
                let picked: Vec<String> =
                    index::sample(&mut pr, pool.len(), m).into_iter().map(|i| pool[i].text.clone()).collect();
                // one sentence per provider call
                let tr = |lang: &LanguageCode, e: &String| -> String {
                    if *lang == cfg.pivot {
                        e.clone()
                    } else {
                        provider.translate(std::slice::from_ref(e), &cfg.pivot, lang).unwrap().remove(0)
                    }
                };
                let mut sr = rng::substream(cfg.seed, "synthetic", key.as_bytes());
                for e in &picked {
                    let pa = SentencePair::new(a.clone(), b.clone(), tr(&a, e), tr(&b, e)).unwrap();
                    let fwd = sr.random_bool(0.5);
                    let oriented = if fwd { pa.clone() } else { pa.swapped() };
                    let aug = code_switch_parallel(&oriented, lex, &aug_cfg, &policy, &mut sr).unwrap();
                    let text = format!("{} {}", aug.switched_text, oriented.tgt_text);
                    let span = (aug.switched_text.len() + 1, text.len());
                    out.push(rec(text, span, &oriented.src_lang, Some(&oriented.tgt_lang), Some(fwd), "synthetic"));
                    synthetic += 1;
                }
            }
            stats.push((key, n, listed.len() - n, synthetic));
        }
    }
    stats.sort();
    (out, stats)
}

// ---------------------------------------------------------------------------
// BPE oracle

/// Greedy frequency-based merge learning over raw bytes.
pub fn train_merges(corpus: &[Vec<u8>], k: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut seqs: Vec<Vec<Vec<u8>>> = corpus.iter().map(|s| s.iter().map(|&b| vec![b]).collect()).collect();
    let mut merges = Vec::new();
    for _ in 0..k {
        let mut counts: BTreeMap<(Vec<u8>, Vec<u8>), usize> = BTreeMap::new();
        for s in &seqs {
            for w in s.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_default() += 1;
            }
        }
        let Some(best) = counts.iter().max_by(|x, y| x.1.cmp(y.1).then_with(|| y.0.cmp(x.0))).map(|(p, _)| p.clone())
        else {
            break;
        };
        if merges.contains(&best) {
            break;
        }
        for s in &mut seqs {
            let mut i = 0;
            let mut next = Vec::with_capacity(s.len());
            while i < s.len() {
                if i + 1 < s.len() && s[i] == best.0 && s[i + 1] == best.1 {
                    next.push([best.0.clone(), best.1.clone()].concat());
                    i += 2;
                } else {
                    next.push(s[i].clone());
                    i += 1;
                }
            }
            *s = next;
        }
        merges.push(best);
    }
    merges
}

/// Repeatedly merge the adjacent pair with the lowest rank, leftmost first.
pub fn naive_bpe(bytes: &[u8], merges: &[(Vec<u8>, Vec<u8>)]) -> Vec<Vec<u8>> {
    let rank: HashMap<(&[u8], &[u8]), usize> =
        merges.iter().enumerate().map(|(i, (a, b))| ((a.as_slice(), b.as_slice()), i)).collect();
    let mut parts: Vec<Vec<u8>> = bytes.iter().map(|&b| vec![b]).collect();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..parts.len().saturating_sub(1) {
            if let Some(&r) = rank.get(&(parts[i].as_slice(), parts[i + 1].as_slice())) {
                if best.is_none_or(|(br, _)| r < br) {
                    best = Some((r, i));
                }
            }
        }
        let Some((_, i)) = best else { break };
        let right = parts.remove(i + 1);
        parts[i].extend(right);
    }
    parts
}

pub fn token_strings(tok: &TokenizerModel, ids: &[u32]) -> Vec<Vec<u8>> {
    ids.iter().map(|&i| tok.token_bytes(i).unwrap().to_vec()).collect()
}

pub fn random_bytes<R: Rng>(rng: &mut R, max_len: usize) -> Vec<u8> {
    let alphabet = b"abcde ";
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| if rng.random_bool(0.85) { *alphabet.choose(rng).unwrap() } else { rng.random::<u8>() })
        .collect()
}

// ---------------------------------------------------------------------------
// KS oracle

/// max over sample points of |F_a(x) - F_b(x)|, evaluated directly.
pub fn ks_exhaustive(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
}

/// All non-decreasing sequences of length `k` over `0..m`.
pub fn multisets(m: u32, k: usize) -> Vec<Vec<f64>> {
    fn go(m: u32, k: usize, from: u32, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in from..m {
            cur.push(v as f64);
            go(m, k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, k, 0, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// on-disk toy corpus for CLI runs

pub fn write_toy_corpus(dir: &Path) {
    fs::create_dir_all(dir.join("para")).unwrap();
    fs::create_dir_all(dir.join("mono")).unwrap();
    fs::create_dir_all(dir.join("dict")).unwrap();
    fs::write(dir.join("para/en-fr.tsv"), "hello\tbonjour\nthe dog\tle chien\nthe house\tla maison\n").unwrap();
    fs::write(dir.join("para/de-en.tsv"), "Hund\tdog\n").unwrap();
    fs::write(dir.join("para/en-sw.tsv"), "dog\tmbwa\nhouse\tnyumba\nthe dog sees\tmbwa anaona\nword\tneno\n").unwrap();
    fs::write(dir.join("mono/en.txt"), "Some English text for blocks.\nAnother line of English.\n").unwrap();
    fs::write(dir.join("mono/fr.txt"), "Le chien voit la maison.\n").unwrap();
    let pool: String = (0..60).map(|i| format!("the dog sees the house {i}\n")).collect();
    fs::write(dir.join("pool.txt"), pool).unwrap();
    fs::write(dir.join("dict/en-fr.txt"), "the le\ndog chien\nhouse maison\nsees voit\n").unwrap();
    fs::write(dir.join("dict/en-de.txt"), "the der\ndog Hund\nhouse Haus\nsees sieht\n").unwrap();
    fs::write(dir.join("dict/en-sw.txt"), "dog mbwa\nhouse nyumba\nsees anaona\n").unwrap();
    fs::write(
        dir.join("epoch.toml"),
        r#"shard_size = 7

[inputs]
monolingual_dir = "mono"
parallel_dir = "para"
english_pool = "pool.txt"
lexicon = "lex.tsv"

[epoch]
threshold = 5
block_size = 8

[provider]
kind = "mock-dictionary"
"#,
    )
    .unwrap();
}
