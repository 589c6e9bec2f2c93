//! Per-role emotion database: each of a role's past utterances indexed by
//! the embedding of its emotion caption, queried by cosine similarity.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{AudioSource, Backend, BackendError, Embedding};
use crate::corpus::Utterance;

pub const DB_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum EmoDbError {
    #[error("empty input")]
    EmptyInput,
    #[error("empty database")]
    EmptyDatabase,
    #[error("utterance `{utterance_id}` belongs to `{actual}`, not `{expected}`")]
    RoleMismatch {
        utterance_id: String,
        expected: String,
        actual: String,
    },
    #[error("duplicate utterance id `{0}`")]
    DuplicateUtterance(String),
    #[error("empty caption for utterance `{0}`")]
    EmptyCaption(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported database version {0}")]
    VersionMismatch(u64),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl EmoDbError {
    pub fn code(&self) -> &str {
        match self {
            EmoDbError::EmptyInput => "EmptyInput",
            EmoDbError::EmptyDatabase => "EmptyDatabase",
            EmoDbError::RoleMismatch { .. } => "RoleMismatch",
            EmoDbError::DuplicateUtterance(_) => "DuplicateUtterance",
            EmoDbError::EmptyCaption(_) => "EmptyCaption",
            EmoDbError::DimMismatch { .. } => "DimMismatch",
            EmoDbError::ZeroVector => "ZeroVector",
            EmoDbError::Parse { .. } => "ParseError",
            EmoDbError::VersionMismatch(_) => "VersionMismatch",
            EmoDbError::Io { .. } => "IoError",
            EmoDbError::Backend(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionEntry {
    pub utterance_id: String,
    pub role: String,
    pub caption: String,
    pub embedding: Embedding,
    /// Asset reference of the performed speech.
    pub audio: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionDatabase {
    pub role: String,
    pub dim: usize,
    pub entries: Vec<EmotionEntry>,
}

/// `dot(u, v) / (|u| |v|)`, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmoDbError> {
    if u.len() != v.len() {
        return Err(EmoDbError::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmoDbError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Caption and embed every utterance of `role`. `resolve` maps an asset
/// reference to the file the backend should read.
pub fn build_database(
    role: &str,
    utterances: &[&Utterance],
    resolve: impl Fn(&str) -> PathBuf,
    backend: &dyn Backend,
) -> Result<EmotionDatabase, EmoDbError> {
    if utterances.is_empty() {
        return Err(EmoDbError::EmptyInput);
    }
    let mut seen = HashSet::new();
    for u in utterances {
        if u.role != role {
            return Err(EmoDbError::RoleMismatch {
                utterance_id: u.id.clone(),
                expected: role.to_string(),
                actual: u.role.clone(),
            });
        }
        if !seen.insert(u.id.as_str()) {
            return Err(EmoDbError::DuplicateUtterance(u.id.clone()));
        }
    }

    let mut captions = Vec::with_capacity(utterances.len());
    for u in utterances {
        let caption = backend.caption_emotion(&AudioSource::Asset(resolve(&u.audio)))?;
        let caption = caption.trim().to_string();
        if caption.is_empty() {
            return Err(EmoDbError::EmptyCaption(u.id.clone()));
        }
        captions.push(caption);
    }
    let embeddings = backend.embed(&captions)?;
    if embeddings.len() != captions.len() {
        return Err(BackendError::Protocol("embedding count mismatch".into()).into());
    }
    let dim = embeddings[0].dim();

    let entries = utterances
        .iter()
        .zip(captions)
        .zip(embeddings)
        .map(|((u, caption), embedding)| {
            if embedding.dim() != dim {
                return Err(EmoDbError::DimMismatch {
                    left: dim,
                    right: embedding.dim(),
                });
            }
            Ok(EmotionEntry {
                utterance_id: u.id.clone(),
                role: role.to_string(),
                caption,
                embedding,
                audio: u.audio.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmotionDatabase {
        role: role.to_string(),
        dim,
        entries,
    })
}

impl EmotionDatabase {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best entry for an already-embedded query. Ties on similarity go to the
    /// lexicographically smallest utterance id.
    pub fn nearest(&self, query: &[f64]) -> Result<(&EmotionEntry, f64), EmoDbError> {
        let mut best: Option<(&EmotionEntry, f64)> = None;
        for entry in &self.entries {
            let sim = cosine(query, entry.embedding.as_slice())?;
            best = match best {
                Some((b, bs)) if bs > sim || (bs == sim && b.utterance_id <= entry.utterance_id) => Some((b, bs)),
                _ => Some((entry, sim)),
            };
        }
        best.ok_or(EmoDbError::EmptyDatabase)
    }

    /// Embed `state` and return the closest entry.
    pub fn query_top1(&self, state: &str, backend: &dyn Backend) -> Result<(&EmotionEntry, f64), EmoDbError> {
        if self.entries.is_empty() {
            return Err(EmoDbError::EmptyDatabase);
        }
        let query = backend
            .embed(&[state.to_string()])?
            .pop()
            .ok_or_else(|| BackendError::Protocol("no embedding returned".into()))?;
        self.nearest(query.as_slice())
    }

    pub fn get(&self, utterance_id: &str) -> Option<&EmotionEntry> {
        self.entries.iter().find(|e| e.utterance_id == utterance_id)
    }

    /// JSON-lines text: header line, then one entry per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        let header = Header {
            version: DB_VERSION,
            role: self.role.clone(),
            dim: self.dim,
            count: self.entries.len(),
        };
        serde_json::to_writer(&mut out, &header).expect("header serialization");
        out.push(b'\n');
        for e in &self.entries {
            let line = EntryLine {
                utterance_id: e.utterance_id.clone(),
                caption: e.caption.clone(),
                embedding: e.embedding.0.clone(),
                audio: e.audio.clone(),
            };
            serde_json::to_writer(&mut out, &line).expect("entry serialization");
            writeln!(out).expect("write to vec");
        }
        String::from_utf8(out).expect("json is utf-8")
    }

    pub fn from_jsonl(text: &str) -> Result<Self, EmoDbError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(EmoDbError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let probe: serde_json::Value = serde_json::from_str(first).map_err(|e| EmoDbError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(DB_VERSION) => {}
            Some(v) => return Err(EmoDbError::VersionMismatch(v)),
            None => {
                return Err(EmoDbError::Parse {
                    line: 1,
                    message: "header lacks a version".into(),
                })
            }
        }
        let header: Header = serde_json::from_value(probe).map_err(|e| EmoDbError::Parse {
            line: 1,
            message: e.to_string(),
        })?;

        let mut entries = Vec::with_capacity(header.count);
        let mut seen = HashSet::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let e: EntryLine = serde_json::from_str(raw).map_err(|err| EmoDbError::Parse {
                line,
                message: err.to_string(),
            })?;
            if e.embedding.len() != header.dim {
                return Err(EmoDbError::Parse {
                    line,
                    message: format!("embedding has dim {}, header says {}", e.embedding.len(), header.dim),
                });
            }
            if e.caption.is_empty() {
                return Err(EmoDbError::Parse {
                    line,
                    message: "empty caption".into(),
                });
            }
            if !seen.insert(e.utterance_id.clone()) {
                return Err(EmoDbError::Parse {
                    line,
                    message: format!("duplicate utterance id `{}`", e.utterance_id),
                });
            }
            entries.push(EmotionEntry {
                utterance_id: e.utterance_id,
                role: header.role.clone(),
                caption: e.caption,
                embedding: Embedding(e.embedding),
                audio: e.audio,
            });
        }
        if entries.len() != header.count {
            return Err(EmoDbError::Parse {
                line: 1,
                message: format!("header count {} but {} entries", header.count, entries.len()),
            });
        }
        Ok(Self {
            role: header.role,
            dim: header.dim,
            entries,
        })
    }

    pub fn persist(&self, path: &Path) -> Result<(), EmoDbError> {
        fs::write(path, self.to_jsonl()).map_err(|source| EmoDbError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EmoDbError> {
        let text = fs::read_to_string(path).map_err(|source| EmoDbError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_jsonl(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u64,
    role: String,
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct EntryLine {
    utterance_id: String,
    caption: String,
    embedding: Vec<f64>,
    audio: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockBackend;

    fn entry(id: &str, caption: &str) -> EmotionEntry {
        EmotionEntry {
            utterance_id: id.into(),
            role: "Phoebe".into(),
            caption: caption.into(),
            embedding: MockBackend::embed_one(caption),
            audio: format!("audio/{id}.wav"),
        }
    }

    fn db(entries: Vec<EmotionEntry>) -> EmotionDatabase {
        EmotionDatabase {
            role: "Phoebe".into(),
            dim: 64,
            entries,
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[0.6, 0.8], &[0.6, 0.8]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cosine(&[r, r, 0.0], &[1.0, 0.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(EmoDbError::DimMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(EmoDbError::ZeroVector)));
    }

    #[test]
    fn exact_caption_wins() {
        let mock = MockBackend::new(0);
        let d = db(vec![
            entry("u1", "calm warm tone"),
            entry("u2", "furious shouting"),
            entry("u3", "anxious concern"),
        ]);
        let (hit, sim) = d.query_top1("furious shouting", &mock).unwrap();
        assert_eq!(hit.utterance_id, "u2");
        assert!((sim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_entry_always_returned() {
        let mock = MockBackend::new(0);
        let d = db(vec![entry("only", "giddy excitement")]);
        assert_eq!(d.query_top1("deep sorrow", &mock).unwrap().0.utterance_id, "only");
        assert!(matches!(
            db(vec![]).query_top1("x", &mock),
            Err(EmoDbError::EmptyDatabase)
        ));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let d = db(vec![entry("u9", "same"), entry("u10", "same"), entry("u2", "same")]);
        let (hit, _) = d.nearest(MockBackend::embed_one("same").as_slice()).unwrap();
        assert_eq!(hit.utterance_id, "u10");
    }

    #[test]
    fn jsonl_round_trip() {
        let d = db(vec![
            entry("u1", "calm warm tone"),
            entry("u2", "wistful flirtation"),
            entry("u3", "joy"),
        ]);
        let text = d.to_jsonl();
        assert!(text.starts_with(r#"{"version":1,"role":"Phoebe","dim":64,"count":3}"#));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(EmotionDatabase::from_jsonl(&text).unwrap(), d);
    }

    #[test]
    fn jsonl_dim_mismatch_names_line() {
        let mut d = db(vec![entry("u1", "calm"), entry("u2", "tense")]);
        d.entries[1].embedding.0.truncate(32);
        let err = EmotionDatabase::from_jsonl(&d.to_jsonl()).unwrap_err();
        assert!(matches!(err, EmoDbError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn jsonl_version_and_garbage() {
        let text = "{\"version\":2,\"role\":\"Ross\",\"dim\":64,\"count\":0}\n";
        assert!(matches!(
            EmotionDatabase::from_jsonl(text),
            Err(EmoDbError::VersionMismatch(2))
        ));
        assert!(matches!(
            EmotionDatabase::from_jsonl(""),
            Err(EmoDbError::Parse { line: 1, .. })
        ));
        let text = "{\"version\":1,\"role\":\"Ross\",\"dim\":64,\"count\":1}\nnot json\n";
        assert!(matches!(
            EmotionDatabase::from_jsonl(text),
            Err(EmoDbError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn build_rejects_wrong_role() {
        let u = |id: &str, role: &str| Utterance {
            id: id.into(),
            episode_id: "E".into(),
            role: role.into(),
            text: "x".into(),
            audio: format!("{id}.wav"),
            start_s: 0.0,
            end_s: 1.0,
        };
        let (a, b) = (u("p1", "Phoebe"), u("r1", "Ross"));
        let err = build_database("Phoebe", &[&a, &b], |r: &str| PathBuf::from(r), &MockBackend::new(0)).unwrap_err();
        assert!(matches!(err, EmoDbError::RoleMismatch { ref utterance_id, .. } if utterance_id == "r1"));
        assert!(matches!(
            build_database("Phoebe", &[], |r: &str| PathBuf::from(r), &MockBackend::new(0)),
            Err(EmoDbError::EmptyInput)
        ));
    }
}
