//! Line-delimited JSON manifests.
//!
//! The first line is a header naming the schema and the SHA-256 of every
//! input the producing stage read; each following line is one record.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use dirspeech_core::cdda::Provenance;
use dirspeech_core::spatial::Direction;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::{read_to_string, sha256_file, write_atomic};

pub const SOURCES: &str = "dirspeech.sources/1";
pub const SCENES: &str = "dirspeech.scenes/1";
pub const BEAMS: &str = "dirspeech.beams/1";
pub const PREDICTIONS: &str = "dirspeech.eval/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub stage: String,
    /// Input path (relative to the manifest's directory) to SHA-256.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
}

impl Header {
    pub fn new(schema: &str, stage: &str) -> Self {
        Header { schema: schema.to_string(), stage: stage.to_string(), inputs: BTreeMap::new() }
    }

    /// Records the hash of `path`, keyed relative to `manifest_dir`.
    pub fn with_input(mut self, manifest_dir: &Path, path: &Path) -> Result<Self> {
        let key = relative(manifest_dir, path);
        self.inputs.insert(key, sha256_file(path)?);
        Ok(self)
    }
}

pub trait Record: Serialize + DeserializeOwned {
    fn id(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest<R> {
    pub header: Header,
    pub records: Vec<R>,
}

impl<R: Record> Manifest<R> {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    pub fn read(path: &Path, schema: &str) -> Result<Self> {
        let (header, lines) = read_lines(path, schema)?;
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (line, text) in lines {
            let r: R = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), line, source })?;
            if !seen.insert(r.id().to_string()) {
                return Err(Error::DuplicateId { path: path.into(), id: r.id().to_string() });
            }
            records.push(r);
        }
        let stale = stale_inputs(&header, path.parent().unwrap_or(Path::new(".")));
        for s in &stale {
            log::warn!("stale provenance: {} changed since {} was written", s, path.display());
        }
        Ok(Manifest { header, records })
    }
}

/// Header plus the raw, numbered record lines.
pub fn read_lines(path: &Path, schema: &str) -> Result<(Header, Vec<(usize, String)>)> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::BadFormat { path: path.into(), reason: "empty manifest".into() })?;
    let header: Header =
        serde_json::from_str(first).map_err(|source| Error::Json { path: path.into(), line: 1, source })?;
    if header.schema != schema {
        return Err(Error::SchemaMismatch { path: path.into(), expected: schema.into(), found: header.schema });
    }
    Ok((header, lines.map(|(i, l)| (i + 1, l.to_string())).collect()))
}

/// Inputs whose current hash differs from the recorded one.
pub fn stale_inputs(header: &Header, base: &Path) -> Vec<String> {
    header
        .inputs
        .iter()
        .filter(|(p, h)| sha256_file(&base.join(p)).map_or(true, |now| &now != *h))
        .map(|(p, _)| p.clone())
        .collect()
}

/// `path` relative to the directory `base`, climbing with `..` as needed.
/// Falls back to `path` itself when the two share no prefix.
pub fn relative(base: &Path, path: &Path) -> String {
    let b: Vec<_> = base.components().collect();
    let p: Vec<_> = path.components().collect();
    let common = b.iter().zip(&p).take_while(|(x, y)| x == y).count();
    if common == 0 {
        return path.to_string_lossy().into_owned();
    }
    let mut parts: Vec<String> = vec!["..".to_string(); b.len() - common];
    parts.extend(p[common..].iter().map(|c| c.as_os_str().to_string_lossy().into_owned()));
    parts.join("/")
}

pub fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub id: String,
    pub wav_path: String,
    pub transcript: Vec<String>,
}

impl Record for SourceRecord {
    fn id(&self) -> &str {
        &self.id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSourceRecord {
    pub utt_id: String,
    pub degrees: Direction,
    pub start_sample: usize,
    pub num_samples: usize,
    pub gain: f64,
    pub transcript: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rir_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub wav_path: String,
    pub sources: Vec<SceneSourceRecord>,
    pub room_id: String,
    pub overlap_ratio: f64,
    /// Requested direction of a multi-talker scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_degrees: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta3: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Record for SceneRecord {
    fn id(&self) -> &str {
        &self.scene_id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub reference: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_degrees: Option<Direction>,
    #[serde(default)]
    pub direction_seen: bool,
}

impl Record for EvalRecord {
    fn id(&self) -> &str {
        &self.id
    }
}
