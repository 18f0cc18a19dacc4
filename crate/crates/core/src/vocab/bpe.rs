//! Byte-level BPE with an added-token overlay.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::LazyLock;

use aho_corasick::{AhoCorasick, MatchKind};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::VocabError;
use crate::par::{self, Exec};

/// GPT-2 style printable rendering of each byte, used for token strings in
/// tokenizer files.
pub fn byte_to_unicode(b: u8) -> char {
    BYTE_TABLE.0[b as usize]
}

struct ByteTable([char; 256], HashMap<char, u8>);

static BYTE_TABLE: LazyLock<ByteTable> = LazyLock::new(|| {
    let mut table = ['\0'; 256];
    let mut extra = 0u32;
    for b in 0..=255u8 {
        let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        table[b as usize] = if printable {
            char::from(b)
        } else {
            extra += 1;
            char::from_u32(255 + extra).unwrap()
        };
    }
    let rev = table.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
    ByteTable(table, rev)
});

fn render(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_unicode(b)).collect()
}

fn unrender(s: &str) -> Result<Vec<u8>, VocabError> {
    s.chars()
        .map(|c| {
            BYTE_TABLE.1.get(&c).copied().ok_or_else(|| VocabError::Tokenizer(format!("{c:?} is not a byte symbol")))
        })
        .collect()
}

/// On-disk tokenizer: `{vocab: {token: id}, merges: ["a b", ...], added: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizerFile {
    pub vocab: IndexMap<String, u32>,
    pub merges: Vec<String>,
    #[serde(default)]
    pub added: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TokenizerModel {
    tokens: Vec<Vec<u8>>,
    ids: HashMap<Vec<u8>, u32>,
    byte_ids: [u32; 256],
    merges: Vec<(u32, u32)>,
    // (left, right) -> (rank, merged id)
    merge_lookup: HashMap<(u32, u32), (u32, u32)>,
    added: Vec<String>,
    matcher: Option<AhoCorasick>,
}

impl TokenizerModel {
    /// 256 single-byte tokens, id == byte value, no merges.
    pub fn byte_level() -> Self {
        let tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        Self::build(tokens, Vec::new(), Vec::new()).expect("byte vocabulary is valid")
    }

    /// Byte-level base plus `merges` in rank order; merged tokens are
    /// appended to the vocabulary as needed.
    pub fn from_merges(merges: &[(Vec<u8>, Vec<u8>)]) -> Result<Self, VocabError> {
        let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut ids: HashMap<Vec<u8>, u32> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut ranked = Vec::with_capacity(merges.len());
        for (a, b) in merges {
            let (Some(&ia), Some(&ib)) = (ids.get(a), ids.get(b)) else {
                return Err(VocabError::Tokenizer(format!("merge {a:?} + {b:?} uses unknown tokens")));
            };
            let merged = [a.as_slice(), b.as_slice()].concat();
            if !ids.contains_key(&merged) {
                ids.insert(merged.clone(), tokens.len() as u32);
                tokens.push(merged);
            }
            ranked.push((ia, ib));
        }
        Self::build(tokens, ranked, Vec::new())
    }

    fn build(tokens: Vec<Vec<u8>>, merges: Vec<(u32, u32)>, added: Vec<String>) -> Result<Self, VocabError> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(VocabError::Tokenizer(format!("token {i} is empty")));
            }
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(VocabError::DuplicateToken(render(t)));
            }
        }
        let mut byte_ids = [0u32; 256];
        for b in 0..=255u8 {
            byte_ids[b as usize] = *ids
                .get(&vec![b])
                .ok_or_else(|| VocabError::Tokenizer(format!("byte {b:#04x} has no token")))?;
        }
        let mut merge_lookup = HashMap::with_capacity(merges.len());
        for (rank, &(a, b)) in merges.iter().enumerate() {
            let merged = [tokens[a as usize].as_slice(), tokens[b as usize].as_slice()].concat();
            let &m = ids
                .get(&merged)
                .ok_or_else(|| VocabError::Tokenizer(format!("merge result {:?} not in vocabulary", render(&merged))))?;
            if merge_lookup.insert((a, b), (rank as u32, m)).is_some() {
                return Err(VocabError::Tokenizer(format!("merge {rank} repeats an earlier pair")));
            }
        }
        let mut model = TokenizerModel { tokens, ids, byte_ids, merges, merge_lookup, added: Vec::new(), matcher: None };
        model.set_added(added)?;
        Ok(model)
    }

    fn set_added(&mut self, added: Vec<String>) -> Result<(), VocabError> {
        let mut seen = std::collections::HashSet::new();
        for t in &added {
            if t.is_empty() {
                return Err(VocabError::Tokenizer("empty added token".into()));
            }
            if !seen.insert(t.as_str()) {
                return Err(VocabError::DuplicateToken(t.clone()));
            }
        }
        self.matcher = if added.is_empty() {
            None
        } else {
            Some(
                AhoCorasick::builder()
                    .match_kind(MatchKind::LeftmostLongest)
                    .build(&added)
                    .map_err(|e| VocabError::Tokenizer(e.to_string()))?,
            )
        };
        self.added = added;
        Ok(())
    }

    /// Copy of this model with `extra` appended to the added tokens.
    pub fn with_added_tokens(&self, extra: &[String]) -> Result<Self, VocabError> {
        let mut added = self.added.clone();
        for t in extra {
            if added.contains(t) {
                return Err(VocabError::DuplicateToken(t.clone()));
            }
            added.push(t.clone());
        }
        let mut out = self.clone();
        out.set_added(added)?;
        Ok(out)
    }

    pub fn from_file(file: &TokenizerFile) -> Result<Self, VocabError> {
        let n = file.vocab.len();
        let mut tokens = vec![Vec::new(); n];
        for (tok, &id) in &file.vocab {
            let slot = tokens
                .get_mut(id as usize)
                .ok_or_else(|| VocabError::Tokenizer(format!("id {id} out of dense range 0..{n}")))?;
            if !slot.is_empty() {
                return Err(VocabError::Tokenizer(format!("id {id} assigned twice")));
            }
            *slot = unrender(tok)?;
        }
        let lookup: HashMap<&str, u32> = file.vocab.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        let mut merges = Vec::with_capacity(file.merges.len());
        for m in &file.merges {
            let (a, b) = m
                .split_once(' ')
                .ok_or_else(|| VocabError::Tokenizer(format!("merge {m:?} is not \"a b\"")))?;
            let get = |t: &str| {
                lookup.get(t).copied().ok_or_else(|| VocabError::Tokenizer(format!("merge token {t:?} not in vocabulary")))
            };
            merges.push((get(a)?, get(b)?));
        }
        Self::build(tokens, merges, file.added.clone())
    }

    pub fn to_file(&self) -> TokenizerFile {
        TokenizerFile {
            vocab: self.tokens.iter().enumerate().map(|(i, t)| (render(t), i as u32)).collect(),
            merges: self
                .merges
                .iter()
                .map(|&(a, b)| format!("{} {}", render(&self.tokens[a as usize]), render(&self.tokens[b as usize])))
                .collect(),
            added: self.added.clone(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, VocabError> {
        let file: TokenizerFile = serde_json::from_str(s).map_err(|e| VocabError::Tokenizer(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("tokenizer file serializes")
    }

    /// Base vocabulary size (without added tokens).
    pub fn base_len(&self) -> usize {
        self.tokens.len()
    }

    /// Base vocabulary plus added tokens.
    pub fn len(&self) -> usize {
        self.tokens.len() + self.added.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn added_tokens(&self) -> &[String] {
        &self.added
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    pub fn token_id(&self, bytes: &[u8]) -> Option<u32> {
        self.ids.get(bytes).copied()
    }

    /// Ranked merges as byte strings.
    pub fn merges(&self) -> Vec<(Vec<u8>, Vec<u8>)> {
        self.merges
            .iter()
            .map(|&(a, b)| (self.tokens[a as usize].clone(), self.tokens[b as usize].clone()))
            .collect()
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        let id = id as usize;
        if id < self.tokens.len() {
            Some(&self.tokens[id])
        } else {
            self.added.get(id - self.tokens.len()).map(String::as_bytes)
        }
    }

    /// Added tokens first (leftmost-longest), then byte-level BPE on the gaps.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::with_capacity(text.len() / 2 + 1);
        match &self.matcher {
            None => self.encode_bytes(text.as_bytes(), &mut out),
            Some(ac) => {
                let mut cursor = 0;
                for m in ac.find_iter(text) {
                    self.encode_bytes(&text.as_bytes()[cursor..m.start()], &mut out);
                    out.push((self.tokens.len() + m.pattern().as_usize()) as u32);
                    cursor = m.end();
                }
                self.encode_bytes(&text.as_bytes()[cursor..], &mut out);
            }
        }
        out
    }

    /// Pure byte-level BPE without the added-token pass.
    pub fn encode_raw(&self, bytes: &[u8]) -> Vec<u32> {
        let mut out = Vec::with_capacity(bytes.len());
        self.encode_bytes(bytes, &mut out);
        out
    }

    pub fn encode_batch(&self, texts: &[String], exec: Exec) -> Vec<Vec<u32>> {
        par::map(exec, texts, |t| self.encode(t))
    }

    // Repeatedly merge the lowest-rank adjacent pair, leftmost first.
    fn encode_bytes(&self, bytes: &[u8], out: &mut Vec<u32>) {
        let n = bytes.len();
        if n == 0 {
            return;
        }
        let mut ids: Vec<u32> = bytes.iter().map(|&b| self.byte_ids[b as usize]).collect();
        if self.merges.is_empty() || n == 1 {
            out.extend_from_slice(&ids);
            return;
        }
        const NONE: usize = usize::MAX;
        let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
        let mut next: Vec<usize> = (0..n).map(|i| if i + 1 == n { NONE } else { i + 1 }).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(&(rank, _)) = self.merge_lookup.get(&(ids[i], ids[i + 1])) {
                heap.push(Reverse((rank, i)));
            }
        }
        while let Some(Reverse((rank, i))) = heap.pop() {
            if !alive[i] || next[i] == NONE {
                continue;
            }
            let j = next[i];
            let Some(&(r, merged)) = self.merge_lookup.get(&(ids[i], ids[j])) else { continue };
            if r != rank {
                continue;
            }
            ids[i] = merged;
            alive[j] = false;
            next[i] = next[j];
            if next[j] != NONE {
                prev[next[j]] = i;
            }
            if prev[i] != NONE {
                let p = prev[i];
                if let Some(&(r, _)) = self.merge_lookup.get(&(ids[p], ids[i])) {
                    heap.push(Reverse((r, p)));
                }
            }
            if next[i] != NONE {
                if let Some(&(r, _)) = self.merge_lookup.get(&(ids[i], ids[next[i]])) {
                    heap.push(Reverse((r, i)));
                }
            }
        }
        let mut i = 0;
        while i != NONE {
            out.push(ids[i]);
            i = next[i];
        }
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<u8> {
        let mut out = Vec::new();
        for &id in ids {
            if let Some(b) = self.token_bytes(id) {
                out.extend_from_slice(b);
            }
        }
        out
    }

    pub fn decode_lossy(&self, ids: &[u32]) -> String {
        String::from_utf8_lossy(&self.decode(ids)).into_owned()
    }
}
