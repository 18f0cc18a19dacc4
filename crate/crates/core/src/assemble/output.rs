use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::epoch::{DirectionStats, EpochOutput, EpochPlan};
use super::AssembleError;
use crate::fsutil::{sha256_file, sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// file name relative to the output directory
    pub path: String,
    pub sha256: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub sha256: String,
}

impl InputChecksum {
    pub fn of(path: &Path) -> Result<Self, AssembleError> {
        let sha256 = sha256_file(path).map_err(|source| AssembleError::Io { path: path.display().to_string(), source })?;
        Ok(InputChecksum { path: path.display().to_string(), sha256 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub shards: Vec<ShardEntry>,
    pub plan: EpochPlan,
    pub stats: Vec<DirectionStats>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputChecksum>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Write `out.records` as JSONL shards of `shard_size` records plus
/// `manifest.json`. Every file goes through a temp file and a rename; the
/// manifest is written last.
pub fn write_epoch(
    dir: &Path,
    out: &EpochOutput,
    shard_size: usize,
    config: serde_json::Value,
    inputs: Vec<InputChecksum>,
) -> Result<Manifest, AssembleError> {
    if shard_size == 0 {
        return Err(AssembleError::Config("shard_size must be at least 1".into()));
    }
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |source| AssembleError::Io { path: p, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut shards = Vec::new();
    for (i, chunk) in out.records.chunks(shard_size).enumerate() {
        let name = format!("shard-{i:05}.jsonl");
        let path: PathBuf = dir.join(&name);
        let mut buf = Vec::new();
        for r in chunk {
            serde_json::to_writer(&mut buf, r).expect("record serializes");
            buf.push(b'\n');
        }
        write_atomic(&path, |w| w.write_all(&buf)).map_err(io(&path))?;
        shards.push(ShardEntry { path: name, sha256: sha256_hex(&buf), records: chunk.len() });
    }
    let manifest = Manifest { shards, plan: out.plan.clone(), stats: out.stats.clone(), config, inputs };
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&path, |w| {
        w.write_all(&json)?;
        w.write_all(b"\n")
    })
    .map_err(io(&path))?;
    Ok(manifest)
}
