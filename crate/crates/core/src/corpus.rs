//! Utterance / scene / role data model and the JSON manifest format.
//!
//! A manifest is loaded without checking invariants; run
//! [`validate_corpus`] to get the list of violations. Scenes are stored as
//! inclusive utterance index spans into their episode.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

/// Role name used for every speaker outside the main cast.
pub const OTHERS: &str = "OTHERS";

pub const MANIFEST_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown episode `{0}`")]
    UnknownEpisode(String),
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("scene `{scene}` spans {start}..={end} but its episode has {len} utterances")]
    SceneOutOfRange {
        scene: String,
        start: usize,
        end: usize,
        len: usize,
    },
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::Io { .. } => "IoError",
            CorpusError::Parse { .. } => "ParseError",
            CorpusError::MissingField(_) => "MissingField",
            CorpusError::UnknownEpisode(_) => "UnknownEpisode",
            CorpusError::UnknownScene(_) => "UnknownScene",
            CorpusError::SceneOutOfRange { .. } => "SceneOutOfRange",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utterance {
    pub id: String,
    #[serde(skip)]
    pub episode_id: String,
    pub role: String,
    pub text: String,
    /// Asset reference, relative to the manifest directory.
    pub audio: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl Utterance {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    pub id: String,
    #[serde(skip)]
    pub episode_id: String,
    pub start_index: usize,
    /// Inclusive.
    pub end_index: usize,
    pub description: String,
}

impl Scene {
    pub fn len(&self) -> usize {
        if self.start_index > self.end_index {
            0
        } else {
            self.end_index - self.start_index + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoleProfile {
    pub name: String,
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub scenes: Vec<Scene>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub episodes: Vec<Episode>,
    pub roles: Vec<RoleProfile>,
    /// Directory that relative asset references resolve against.
    pub root: PathBuf,
}

#[derive(Serialize)]
struct ManifestOut<'a> {
    version: u64,
    roles: &'a [RoleProfile],
    episodes: &'a [Episode],
}

impl Corpus {
    pub fn new(episodes: Vec<Episode>, roles: Vec<RoleProfile>) -> Self {
        Self {
            episodes,
            roles,
            root: PathBuf::from("."),
        }
    }

    pub fn episode(&self, id: &str) -> Option<&Episode> {
        self.episodes.iter().find(|e| e.id == id)
    }

    pub fn role(&self, name: &str) -> Option<&RoleProfile> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn find_scene(&self, scene_id: &str) -> Option<(&Episode, &Scene)> {
        self.episodes
            .iter()
            .find_map(|e| e.scenes.iter().find(|s| s.id == scene_id).map(|s| (e, s)))
    }

    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.episodes.iter().flat_map(|e| e.utterances.iter())
    }

    pub fn utterance_count(&self) -> usize {
        self.episodes.iter().map(|e| e.utterances.len()).sum()
    }

    pub fn scene_count(&self) -> usize {
        self.episodes.iter().map(|e| e.scenes.len()).sum()
    }

    pub fn resolve_asset(&self, reference: &str) -> PathBuf {
        self.root.join(reference)
    }

    /// Canonical manifest text: fixed key order, two-space indent, LF, trailing newline.
    pub fn to_manifest_string(&self) -> String {
        let out = ManifestOut {
            version: MANIFEST_VERSION,
            roles: &self.roles,
            episodes: &self.episodes,
        };
        let mut text = serde_json::to_string_pretty(&out).expect("manifest serialization is infallible");
        text.push('\n');
        text
    }

    pub fn save_manifest(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_manifest_string()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn load_manifest(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut corpus = parse_manifest(&text)?;
    corpus.root = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(corpus)
}

pub fn parse_manifest(text: &str) -> Result<Corpus, CorpusError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        path: "$".into(),
        message: e.to_string(),
    })?;
    let top = as_object(&doc, "$")?;
    let version = field(top, "", "version")?;
    match version.as_u64() {
        Some(MANIFEST_VERSION) => {}
        _ => {
            return Err(CorpusError::Parse {
                path: "version".into(),
                message: format!("unsupported manifest version {version}"),
            })
        }
    }

    let roles = as_array(field(top, "", "roles")?, "roles")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("roles[{i}]");
            let obj = as_object(v, &path)?;
            Ok(RoleProfile {
                name: string_field(obj, &path, "name")?,
                profile: string_field(obj, &path, "profile")?,
            })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;

    let mut episodes = Vec::new();
    for (ei, ev) in as_array(field(top, "", "episodes")?, "episodes")?.iter().enumerate() {
        let epath = format!("episodes[{ei}]");
        let eobj = as_object(ev, &epath)?;
        let id = string_field(eobj, &epath, "id")?;

        let upath = format!("{epath}.utterances");
        let mut utterances = Vec::new();
        for (ui, uv) in as_array(field(eobj, &epath, "utterances")?, &upath)?.iter().enumerate() {
            let path = format!("{upath}[{ui}]");
            let obj = as_object(uv, &path)?;
            utterances.push(Utterance {
                id: string_field(obj, &path, "id")?,
                episode_id: id.clone(),
                role: string_field(obj, &path, "role")?,
                text: string_field(obj, &path, "text")?,
                audio: string_field(obj, &path, "audio")?,
                start_s: number_field(obj, &path, "start_s")?,
                end_s: number_field(obj, &path, "end_s")?,
            });
        }

        let spath = format!("{epath}.scenes");
        let mut scenes = Vec::new();
        for (si, sv) in as_array(field(eobj, &epath, "scenes")?, &spath)?.iter().enumerate() {
            let path = format!("{spath}[{si}]");
            let obj = as_object(sv, &path)?;
            scenes.push(Scene {
                id: string_field(obj, &path, "id")?,
                episode_id: id.clone(),
                start_index: index_field(obj, &path, "start_index")?,
                end_index: index_field(obj, &path, "end_index")?,
                description: string_field(obj, &path, "description")?,
            });
        }
        episodes.push(Episode { id, utterances, scenes });
    }

    Ok(Corpus::new(episodes, roles))
}

/// Parse a bare JSON array of utterance objects (manifest utterance shape).
pub fn parse_utterance_list(text: &str, episode_id: &str) -> Result<Vec<Utterance>, CorpusError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        path: "$".into(),
        message: e.to_string(),
    })?;
    as_array(&doc, "$")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("[{i}]");
            let obj = as_object(v, &path)?;
            Ok(Utterance {
                id: string_field(obj, &path, "id")?,
                episode_id: episode_id.to_string(),
                role: string_field(obj, &path, "role")?,
                text: string_field(obj, &path, "text")?,
                audio: string_field(obj, &path, "audio")?,
                start_s: number_field(obj, &path, "start_s")?,
                end_s: number_field(obj, &path, "end_s")?,
            })
        })
        .collect()
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn field<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Value, CorpusError> {
    obj.get(key).ok_or_else(|| CorpusError::MissingField(join(parent, key)))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CorpusError> {
    v.as_object().ok_or_else(|| CorpusError::Parse {
        path: path.into(),
        message: "expected an object".into(),
    })
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CorpusError> {
    v.as_array().ok_or_else(|| CorpusError::Parse {
        path: path.into(),
        message: "expected an array".into(),
    })
}

fn string_field(obj: &Map<String, Value>, parent: &str, key: &str) -> Result<String, CorpusError> {
    field(obj, parent, key)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| CorpusError::Parse {
            path: join(parent, key),
            message: "expected a string".into(),
        })
}

fn number_field(obj: &Map<String, Value>, parent: &str, key: &str) -> Result<f64, CorpusError> {
    field(obj, parent, key)?.as_f64().ok_or_else(|| CorpusError::Parse {
        path: join(parent, key),
        message: "expected a number".into(),
    })
}

fn index_field(obj: &Map<String, Value>, parent: &str, key: &str) -> Result<usize, CorpusError> {
    field(obj, parent, key)?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| CorpusError::Parse {
            path: join(parent, key),
            message: "expected a non-negative integer".into(),
        })
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ItemKind {
    Utterance,
    Scene,
    Role,
    Episode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ItemKind,
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ItemKind, id: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            id: id.to_string(),
            message: message.into(),
        });
    }
}

pub fn validate_corpus(c: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut role_names = HashSet::new();
    for role in &c.roles {
        if role.name.is_empty() {
            report.push(ItemKind::Role, &role.name, "empty role name");
        } else if role.name == OTHERS {
            report.push(ItemKind::Role, &role.name, "reserved role name");
        } else if !role_names.insert(role.name.as_str()) {
            report.push(ItemKind::Role, &role.name, "duplicate role name");
        }
    }

    let mut episode_ids = HashSet::new();
    let mut utterance_ids = HashSet::new();
    let mut scene_ids = HashSet::new();
    for episode in &c.episodes {
        if !episode_ids.insert(episode.id.as_str()) {
            report.push(ItemKind::Episode, &episode.id, "duplicate episode id");
        }

        for u in &episode.utterances {
            if !utterance_ids.insert(u.id.as_str()) {
                report.push(ItemKind::Utterance, &u.id, "duplicate utterance id");
            }
            if u.episode_id != episode.id {
                report.push(
                    ItemKind::Utterance,
                    &u.id,
                    "episode id does not match containing episode",
                );
            }
            if u.start_s.is_nan() || u.start_s < 0.0 {
                report.push(ItemKind::Utterance, &u.id, "negative start time");
            }
            if u.end_s.is_nan() || u.end_s <= u.start_s {
                report.push(ItemKind::Utterance, &u.id, "end time not after start time");
            }
            if u.role != OTHERS && !role_names.contains(u.role.as_str()) {
                report.push(ItemKind::Utterance, &u.id, format!("unknown role `{}`", u.role));
            }
        }

        check_scenes(episode, &mut scene_ids, &mut report);
    }
    report
}

fn check_scenes<'a>(episode: &'a Episode, scene_ids: &mut HashSet<&'a str>, report: &mut ValidationReport) {
    let n = episode.utterances.len();
    if n > 0 && episode.scenes.is_empty() {
        report.push(ItemKind::Episode, &episode.id, "episode has utterances but no scenes");
        return;
    }

    // Next index the following scene must start at; None once a span is unusable.
    let mut expected_start = Some(0usize);
    for scene in &episode.scenes {
        if !scene_ids.insert(scene.id.as_str()) {
            report.push(ItemKind::Scene, &scene.id, "duplicate scene id");
        }
        if scene.episode_id != episode.id {
            report.push(
                ItemKind::Scene,
                &scene.id,
                "episode id does not match containing episode",
            );
        }
        if scene.start_index > scene.end_index {
            report.push(ItemKind::Scene, &scene.id, "scene start after scene end");
            expected_start = None;
            continue;
        }
        if scene.end_index >= n {
            report.push(ItemKind::Scene, &scene.id, "scene span out of range");
            expected_start = None;
            continue;
        }
        if let Some(expected) = expected_start {
            if scene.start_index < expected {
                report.push(ItemKind::Scene, &scene.id, "overlapping scenes");
            } else if scene.start_index > expected {
                report.push(
                    ItemKind::Scene,
                    &scene.id,
                    format!(
                        "gap before scene: utterances {expected}..{} uncovered",
                        scene.start_index
                    ),
                );
            }
        }
        expected_start = Some(scene.end_index + 1);
    }
    if let (Some(expected), Some(last)) = (expected_start, episode.scenes.last()) {
        if expected < n {
            report.push(
                ItemKind::Scene,
                &last.id,
                format!("utterances {expected}..{n} after the last scene are uncovered"),
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Splits and lookups

/// Partition episodes into (train, test) by id, preserving order. Roles are
/// copied into both halves.
pub fn split_episodes(c: &Corpus, test_ids: &BTreeSet<String>) -> Result<(Corpus, Corpus), CorpusError> {
    let known: HashSet<&str> = c.episodes.iter().map(|e| e.id.as_str()).collect();
    if let Some(missing) = test_ids.iter().find(|id| !known.contains(id.as_str())) {
        return Err(CorpusError::UnknownEpisode(missing.clone()));
    }
    let (test, train): (Vec<Episode>, Vec<Episode>) =
        c.episodes.iter().cloned().partition(|e| test_ids.contains(&e.id));
    let half = |episodes| Corpus {
        episodes,
        roles: c.roles.clone(),
        root: c.root.clone(),
    };
    Ok((half(train), half(test)))
}

/// The utterances inside a scene's span, in order.
pub fn scene_dialogue<'a>(c: &'a Corpus, scene_id: &str) -> Result<&'a [Utterance], CorpusError> {
    let (episode, scene) = c
        .find_scene(scene_id)
        .ok_or_else(|| CorpusError::UnknownScene(scene_id.to_string()))?;
    let n = episode.utterances.len();
    if scene.start_index > scene.end_index || scene.end_index >= n {
        return Err(CorpusError::SceneOutOfRange {
            scene: scene.id.clone(),
            start: scene.start_index,
            end: scene.end_index,
            len: n,
        });
    }
    Ok(&episode.utterances[scene.start_index..=scene.end_index])
}

/// Group a corpus' utterances by role name, in corpus order.
pub fn utterances_by_role(c: &Corpus) -> HashMap<&str, Vec<&Utterance>> {
    let mut map: HashMap<&str, Vec<&Utterance>> = HashMap::new();
    for u in c.utterances() {
        map.entry(u.role.as_str()).or_default().push(u);
    }
    map
}
