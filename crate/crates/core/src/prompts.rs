//! Supervised fine-tuning data: Alpaca rendering, the translation prompt
//! bank, and per-language SFT sampling.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Direction, DirectionChoice, LanguageCode, SentencePair};
use crate::par::{self, Exec};
use crate::rng;

const BUILTIN_PROMPTS: &str = include_str!("../resources/translation_prompts.txt");
const BUILTIN_NAMES: &str = include_str!("../resources/language_names.tsv");

pub const PREAMBLE_WITH_INPUT: &str = "Below is an instruction that describes a task, paired with an input that provides further context. Write a response that appropriately completes the request.";
pub const PREAMBLE_NO_INPUT: &str =
    "Below is an instruction that describes a task. Write a response that appropriately completes the request.";

const INSTRUCTION_HEADER: &str = "\n\n### Instruction:\n";
const INPUT_HEADER: &str = "\n\n### Input:\n";
const RESPONSE_HEADER: &str = "\n\n### Response:\n";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("no display name for language {0}")]
    UnknownLanguageName(LanguageCode),
    #[error("template index {index} out of range (bank has {len})")]
    TemplateIndex { index: usize, len: usize },
    #[error("template {index} lacks the [TGT] placeholder")]
    BadTemplate { index: usize },
    #[error("not an Alpaca prompt: {0}")]
    Parse(&'static str),
    #[error("language names line {line}: {reason}")]
    Names { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftMeta {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub template_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub src_lang: Option<LanguageCode>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tgt_lang: Option<LanguageCode>,
}

/// One instruction example. Serialized as `{instruction, input, output, meta}`;
/// `rendered` is rebuilt from the fields and not stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub instruction: String,
    pub input: String,
    #[serde(rename = "output")]
    pub response: String,
    #[serde(skip)]
    pub rendered: String,
    pub meta: SftMeta,
}

fn render(instruction: &str, input: &str, response: &str) -> String {
    if input.is_empty() {
        format!("{PREAMBLE_NO_INPUT}{INSTRUCTION_HEADER}{instruction}{RESPONSE_HEADER}{response}")
    } else {
        format!("{PREAMBLE_WITH_INPUT}{INSTRUCTION_HEADER}{instruction}{INPUT_HEADER}{input}{RESPONSE_HEADER}{response}")
    }
}

pub fn render_alpaca(instruction: &str, input: &str, response: &str) -> Result<SftRecord, PromptError> {
    if instruction.is_empty() {
        return Err(PromptError::EmptyInstruction);
    }
    Ok(SftRecord {
        instruction: instruction.to_string(),
        input: input.to_string(),
        response: response.to_string(),
        rendered: render(instruction, input, response),
        meta: SftMeta { template_id: None, src_lang: None, tgt_lang: None },
    })
}

/// Inverse of [`render_alpaca`]: recovers `(instruction, input, response)`.
/// Fields that themselves contain a section header are not recoverable.
pub fn parse_alpaca(rendered: &str) -> Result<(String, String, String), PromptError> {
    let (with_input, rest) = if let Some(r) = rendered.strip_prefix(PREAMBLE_WITH_INPUT) {
        (true, r)
    } else if let Some(r) = rendered.strip_prefix(PREAMBLE_NO_INPUT) {
        (false, r)
    } else {
        return Err(PromptError::Parse("unknown preamble"));
    };
    let rest = rest.strip_prefix(INSTRUCTION_HEADER).ok_or(PromptError::Parse("missing instruction header"))?;
    let (instruction, input, rest) = if with_input {
        let (ins, r) = rest.split_once(INPUT_HEADER).ok_or(PromptError::Parse("missing input header"))?;
        let (inp, r) = r.split_once(RESPONSE_HEADER).ok_or(PromptError::Parse("missing response header"))?;
        if inp.is_empty() {
            return Err(PromptError::Parse("input template with empty input"));
        }
        (ins, inp, r)
    } else {
        let (ins, r) = rest.split_once(RESPONSE_HEADER).ok_or(PromptError::Parse("missing response header"))?;
        (ins, "", r)
    };
    if instruction.is_empty() {
        return Err(PromptError::Parse("empty instruction"));
    }
    Ok((instruction.to_string(), input.to_string(), rest.to_string()))
}

/// Ordered translation instruction templates with `[SRC]`/`[TGT]` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBank {
    templates: Vec<String>,
}

impl PromptBank {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_PROMPTS).expect("builtin prompt bank is valid")
    }

    /// One template per non-empty line.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let templates: Vec<String> =
            text.lines().map(str::trim_end).filter(|l| !l.is_empty()).map(String::from).collect();
        for (index, t) in templates.iter().enumerate() {
            if !t.contains("[TGT]") {
                return Err(PromptError::BadTemplate { index });
            }
        }
        Ok(PromptBank { templates })
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&str, PromptError> {
        self.templates
            .get(index)
            .map(String::as_str)
            .ok_or(PromptError::TemplateIndex { index, len: self.templates.len() })
    }

    pub fn templates(&self) -> &[String] {
        &self.templates
    }
}

/// ISO code to display name, e.g. `zh` to `Chinese Simpl`.
#[derive(Debug, Clone, Default)]
pub struct LanguageNames {
    names: HashMap<LanguageCode, String>,
}

impl LanguageNames {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_NAMES).expect("builtin language names are valid")
    }

    /// Tab-separated `code\tName` lines.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut names = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (code, name) = line
                .split_once('\t')
                .ok_or_else(|| PromptError::Names { line: i + 1, reason: "expected code<TAB>name".into() })?;
            let code = LanguageCode::new(code.trim())
                .map_err(|e| PromptError::Names { line: i + 1, reason: e.to_string() })?;
            names.insert(code, name.trim().to_string());
        }
        Ok(LanguageNames { names })
    }

    pub fn insert(&mut self, code: LanguageCode, name: impl Into<String>) {
        self.names.insert(code, name.into());
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, code: &LanguageCode) -> Result<&str, PromptError> {
        self.names.get(code).map(String::as_str).ok_or_else(|| PromptError::UnknownLanguageName(code.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateChoice {
    Index(usize),
    /// uniform over the bank
    Random,
}

pub fn render_translation_instruction<R: Rng + ?Sized>(
    pair: &SentencePair,
    direction: Direction,
    template: TemplateChoice,
    bank: &PromptBank,
    names: &LanguageNames,
    rng: &mut R,
) -> Result<SftRecord, PromptError> {
    let (src_lang, tgt_lang, input, response) = match direction {
        Direction::Forward => (&pair.src_lang, &pair.tgt_lang, &pair.src_text, &pair.tgt_text),
        Direction::Backward => (&pair.tgt_lang, &pair.src_lang, &pair.tgt_text, &pair.src_text),
    };
    let src_name = names.name(src_lang)?;
    let tgt_name = names.name(tgt_lang)?;
    let id = match template {
        TemplateChoice::Index(i) => i,
        TemplateChoice::Random => {
            if bank.is_empty() {
                return Err(PromptError::TemplateIndex { index: 0, len: 0 });
            }
            rng.random_range(0..bank.len())
        }
    };
    let instruction = bank.get(id)?.replace("[SRC]", src_name).replace("[TGT]", tgt_name);
    let mut rec = render_alpaca(&instruction, input, response)?;
    rec.meta = SftMeta { template_id: Some(id), src_lang: Some(src_lang.clone()), tgt_lang: Some(tgt_lang.clone()) };
    Ok(rec)
}

#[derive(Debug, Clone)]
pub struct SftOptions {
    pub quota: usize,
    pub template: TemplateChoice,
    pub direction: DirectionChoice,
    pub seed: u64,
}

impl SftOptions {
    pub fn new(seed: u64) -> Self {
        SftOptions { quota: 1000, template: TemplateChoice::Random, direction: DirectionChoice::Random, seed }
    }
}

/// Sample up to `quota` pairs per language without replacement and render
/// each. Languages come out in key order; each uses its own substream.
pub fn emit_sft_dataset(
    sources: &BTreeMap<LanguageCode, Vec<SentencePair>>,
    bank: &PromptBank,
    names: &LanguageNames,
    opts: &SftOptions,
    exec: Exec,
) -> Result<Vec<SftRecord>, PromptError> {
    let langs: Vec<(&LanguageCode, &Vec<SentencePair>)> = sources.iter().collect();
    let per_lang = par::try_map(exec, &langs, |(lang, pairs)| {
        let mut rng = rng::substream(opts.seed, "sft", lang.as_str().as_bytes());
        let take = opts.quota.min(pairs.len());
        let picked = index::sample(&mut rng, pairs.len(), take).into_vec();
        picked
            .into_iter()
            .map(|i| {
                let dir = opts.direction.resolve(&mut rng);
                render_translation_instruction(&pairs[i], dir, opts.template, bank, names, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(per_lang.into_iter().flatten().collect())
}

pub fn write_sft_jsonl<'a, W: Write>(mut w: W, records: impl IntoIterator<Item = &'a SftRecord>) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
