//! The four-stage performance pipeline.
//!
//! - **Eye** ([`eye_prepare`]) gathers the role profile, the scene
//!   description and the dialogue preceding the target line.
//! - **Ear** ([`ear_annotate`]) captions the tone of each preceding turn.
//! - **Brain** ([`render_prompt`] + [`brain_infer`]) asks a reasoner for the
//!   emotional state the target line should carry.
//! - **Mouth** ([`mouth_deliver`]) retrieves the role's closest past
//!   performance of that state and synthesizes the line prompted by it.
//!
//! [`perform_line`] runs the stages in order under an [`AblationConfig`].

pub mod prompt;

use std::fmt;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioClip, AudioError};
use crate::backends::{AudioSource, Backend, BackendError};
use crate::corpus::{Corpus, CorpusError, RoleProfile, Utterance};
use crate::emodb::{EmoDbError, EmotionDatabase};
use crate::hashing::{fnv1a64, MmixLcg};

pub use prompt::{PromptTemplate, PromptValues, TemplateError, DEFAULT_TEMPLATE};

pub const MAX_STATE_CHARS: usize = 256;

#[derive(Debug, Error)]
pub enum ActorError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("no profile for role `{0}`")]
    NoProfile(String),
    #[error("utterance `{utterance_id}` is spoken by `{actual}`, not `{expected}`")]
    RoleMismatch {
        utterance_id: String,
        expected: String,
        actual: String,
    },
    #[error("position {position} is outside scene `{scene}` of {len} utterances")]
    PositionOutOfRange { scene: String, position: usize, len: usize },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("reasoner returned an empty completion")]
    EmptyCompletion,
    #[error("invalid emotion state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    EmoDb(#[from] EmoDbError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("invalid ablation config: {0}")]
    InvalidConfig(String),
    #[error("empty target text for utterance `{0}`")]
    EmptyTarget(String),
    #[error("retrieval requested without an emotion state")]
    MissingState,
}

impl ActorError {
    pub fn code(&self) -> &str {
        match self {
            ActorError::Corpus(e) => e.code(),
            ActorError::NoProfile(_) => "NoProfile",
            ActorError::RoleMismatch { .. } => "RoleMismatch",
            ActorError::PositionOutOfRange { .. } => "PositionOutOfRange",
            ActorError::Template(_) => "TemplateError",
            ActorError::Backend(e) => e.code(),
            ActorError::EmptyCompletion => "EmptyCompletion",
            ActorError::InvalidState(_) => "InvalidState",
            ActorError::EmoDb(e) => e.code(),
            ActorError::Audio(_) => "AudioError",
            ActorError::InvalidConfig(_) => "InvalidConfig",
            ActorError::EmptyTarget(_) => "EmptyText",
            ActorError::MissingState => "MissingState",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Eye,
    Ear,
    Brain,
    Mouth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Eye => "eye",
            Stage::Ear => "ear",
            Stage::Brain => "brain",
            Stage::Mouth => "mouth",
        })
    }
}

/// An [`ActorError`] tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: ActorError,
}

impl PipelineError {
    pub fn code(&self) -> &str {
        self.source.code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<ActorError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

// ---------------------------------------------------------------------------
// Domain types

/// How many preceding turns the Eye keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    All,
    Last(NonZeroUsize),
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Window::All);
        }
        s.parse::<NonZeroUsize>()
            .map(Window::Last)
            .map_err(|_| format!("window must be `all` or a positive integer, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Turn {
    pub utterance: Utterance,
    pub caption: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneContext {
    pub role_profile: RoleProfile,
    pub scene_id: String,
    pub scene_description: String,
    pub turns: Vec<Turn>,
    pub target: Utterance,
    /// Directory the utterances' asset references resolve against.
    pub audio_root: PathBuf,
}

/// The inferred delivery for the target line: trimmed, unquoted, one line,
/// at most [`MAX_STATE_CHARS`] characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EmotionState(String);

impl EmotionState {
    pub fn new(text: impl Into<String>) -> Result<Self, ActorError> {
        let text = text.into();
        let invalid = |why: &str| Err(ActorError::InvalidState(format!("{why}: {text:?}")));
        if text.is_empty() {
            return invalid("empty");
        }
        if text.trim() != text {
            return invalid("surrounding whitespace");
        }
        if text.chars().count() > MAX_STATE_CHARS {
            return invalid("too long");
        }
        if text.contains('\n') {
            return invalid("multiple lines");
        }
        if unwrap_quotes(&text).is_some() {
            return invalid("wrapped in quotes");
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EmotionState {
    type Error = ActorError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<EmotionState> for String {
    fn from(s: EmotionState) -> String {
        s.0
    }
}

impl fmt::Display for EmotionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub use_role_profile: bool,
    pub use_scene: bool,
    pub use_context: bool,
    pub use_ear: bool,
    pub use_brain: bool,
    pub seed: u64,
}

impl AblationConfig {
    pub fn full(seed: u64) -> Self {
        Self {
            use_role_profile: true,
            use_scene: true,
            use_context: true,
            use_ear: true,
            use_brain: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ActorError> {
        if !self.use_context && self.use_ear {
            return Err(ActorError::InvalidConfig("use_ear requires use_context".into()));
        }
        Ok(())
    }
}

/// The named configurations of the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ablation {
    Full,
    NoRoleProfile,
    NoScene,
    NoContext,
    NoEar,
    NoBrain,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::Full,
        Ablation::NoRoleProfile,
        Ablation::NoScene,
        Ablation::NoContext,
        Ablation::NoEar,
        Ablation::NoBrain,
    ];

    /// The five removals, without the full reference.
    pub const REMOVALS: [Ablation; 5] = [
        Ablation::NoRoleProfile,
        Ablation::NoScene,
        Ablation::NoContext,
        Ablation::NoEar,
        Ablation::NoBrain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoRoleProfile => "wo-role-profile",
            Ablation::NoScene => "wo-scene",
            Ablation::NoContext => "wo-context",
            Ablation::NoEar => "wo-ear",
            Ablation::NoBrain => "wo-brain",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::Full => "Full",
            Ablation::NoRoleProfile => "w/o Role Profile (w/o Eye)",
            Ablation::NoScene => "w/o Scene (w/o Eye)",
            Ablation::NoContext => "w/o Context (w/o Eye, w/o Ear)",
            Ablation::NoEar => "w/o Ear",
            Ablation::NoBrain => "w/o Brain (w/o All)",
        }
    }

    pub fn config(self, seed: u64) -> AblationConfig {
        let full = AblationConfig::full(seed);
        match self {
            Ablation::Full => full,
            Ablation::NoRoleProfile => AblationConfig {
                use_role_profile: false,
                ..full
            },
            Ablation::NoScene => AblationConfig {
                use_scene: false,
                ..full
            },
            Ablation::NoContext => AblationConfig {
                use_context: false,
                use_ear: false,
                ..full
            },
            Ablation::NoEar => AblationConfig { use_ear: false, ..full },
            Ablation::NoBrain => AblationConfig {
                use_role_profile: false,
                use_scene: false,
                use_context: false,
                use_ear: false,
                use_brain: false,
                seed,
            },
        }
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Ablation::ALL.iter().map(|a| a.name()).collect();
            format!("unknown ablation `{s}`; expected one of {}", names.join(", "))
        })
    }
}

// ---------------------------------------------------------------------------
// Eye

/// Collect what the actor reads before performing: the role profile, the
/// scene description and up to `window` turns right before the target.
/// `position` is 0-based within the scene.
pub fn eye_prepare(
    corpus: &Corpus,
    role_name: &str,
    scene_id: &str,
    position: usize,
    window: Window,
) -> Result<SceneContext, ActorError> {
    let (_, scene) = corpus
        .find_scene(scene_id)
        .ok_or_else(|| CorpusError::UnknownScene(scene_id.to_string()))?;
    let dialogue = crate::corpus::scene_dialogue(corpus, scene_id)?;
    let target = dialogue.get(position).ok_or_else(|| ActorError::PositionOutOfRange {
        scene: scene_id.to_string(),
        position,
        len: dialogue.len(),
    })?;
    if target.role != role_name {
        return Err(ActorError::RoleMismatch {
            utterance_id: target.id.clone(),
            expected: role_name.to_string(),
            actual: target.role.clone(),
        });
    }
    let profile = corpus
        .role(role_name)
        .ok_or_else(|| ActorError::NoProfile(role_name.to_string()))?;

    let first = match window {
        Window::All => 0,
        Window::Last(n) => position.saturating_sub(n.get()),
    };
    let turns = dialogue[first..position]
        .iter()
        .map(|u| Turn {
            utterance: u.clone(),
            caption: None,
        })
        .collect();
    Ok(SceneContext {
        role_profile: profile.clone(),
        scene_id: scene.id.clone(),
        scene_description: scene.description.clone(),
        turns,
        target: target.clone(),
        audio_root: corpus.root.clone(),
    })
}

// ---------------------------------------------------------------------------
// Ear

/// Caption every turn that has no caption yet, fanning out up to the
/// backend's `max_parallel`. Turn order is preserved.
pub fn ear_annotate(mut ctx: SceneContext, backend: &dyn Backend) -> Result<SceneContext, ActorError> {
    let pending: Vec<usize> = (0..ctx.turns.len())
        .filter(|&i| ctx.turns[i].caption.is_none())
        .collect();
    if pending.is_empty() {
        return Ok(ctx);
    }
    let sources: Vec<AudioSource> = pending
        .iter()
        .map(|&i| AudioSource::Asset(ctx.audio_root.join(&ctx.turns[i].utterance.audio)))
        .collect();
    let caption = |src: &AudioSource| backend.caption_emotion(src).map(|c| c.trim().to_string());

    let parallel = backend.max_parallel().min(sources.len());
    let captions: Vec<String> = if parallel <= 1 {
        sources.iter().map(caption).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| BackendError::Unavailable(format!("cannot start caption workers: {e}")))?;
        pool.install(|| sources.par_iter().map(caption).collect::<Result<_, _>>())?
    };
    for (i, c) in pending.into_iter().zip(captions) {
        ctx.turns[i].caption = Some(c);
    }
    Ok(ctx)
}

// ---------------------------------------------------------------------------
// Brain

fn dialogue_line(turn: &Turn, with_tone: bool) -> String {
    let u = &turn.utterance;
    match (&turn.caption, with_tone) {
        (Some(caption), true) => format!("{}: \"{}\" [tone: {}]", u.role, u.text, caption),
        _ => format!("{}: \"{}\"", u.role, u.text),
    }
}

/// Fill the Brain template, blanking whatever the config removes.
pub fn render_prompt(ctx: &SceneContext, tpl: &PromptTemplate, cfg: &AblationConfig) -> Result<String, ActorError> {
    cfg.validate()?;
    let dialogue_block = if cfg.use_context {
        ctx.turns
            .iter()
            .map(|t| dialogue_line(t, cfg.use_ear))
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        String::new()
    };
    let last_caption = ctx
        .turns
        .last()
        .filter(|_| cfg.use_context && cfg.use_ear)
        .and_then(|t| t.caption.clone())
        .unwrap_or_else(|| "none".to_string());
    Ok(tpl.render(&PromptValues {
        role_profile: if cfg.use_role_profile {
            ctx.role_profile.profile.clone()
        } else {
            String::new()
        },
        scene_description: if cfg.use_scene {
            ctx.scene_description.clone()
        } else {
            String::new()
        },
        dialogue_block,
        target_line: ctx.target.text.clone(),
        role_name: ctx.role_profile.name.clone(),
        last_caption,
    }))
}

fn unwrap_quotes(s: &str) -> Option<&str> {
    const PAIRS: [(char, char); 5] = [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’'), ('`', '`')];
    let mut chars = s.chars();
    let (first, last) = (chars.next()?, chars.next_back()?);
    PAIRS
        .iter()
        .any(|&(open, close)| first == open && last == close)
        .then(|| &s[first.len_utf8()..s.len() - last.len_utf8()])
}

/// Normalize a raw completion into an [`EmotionState`]: trim, strip
/// wrapping quotes, join lines with `"; "`, cap at 256 characters.
pub fn clean_completion(raw: &str) -> Result<EmotionState, ActorError> {
    let mut text = raw.trim();
    while let Some(inner) = unwrap_quotes(text) {
        text = inner.trim();
    }
    let joined = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("; ");
    let capped: String = joined.chars().take(MAX_STATE_CHARS).collect();
    let mut cleaned = capped.trim_end().to_string();
    // A cut can leave a lone quote pair behind; unwrap once more.
    while let Some(inner) = unwrap_quotes(&cleaned) {
        cleaned = inner.trim().to_string();
    }
    if cleaned.is_empty() {
        return Err(ActorError::EmptyCompletion);
    }
    EmotionState::new(cleaned)
}

/// Ask the reasoner how the target line should be delivered.
pub fn brain_infer(prompt: &str, backend: &dyn Backend) -> Result<EmotionState, ActorError> {
    if prompt.trim().is_empty() {
        return Err(BackendError::EmptyPrompt.into());
    }
    clean_completion(&backend.reason(prompt)?)
}

// ---------------------------------------------------------------------------
// Mouth

/// The Mouth's share of a [`PerformanceBundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub retrieved_id: String,
    pub retrieved_caption: String,
    pub similarity: Option<f64>,
    pub retrieval_bypassed: bool,
    pub audio: AudioClip,
}

/// Index of the fallback prompt used when retrieval is bypassed.
pub fn fallback_index(seed: u64, target_utterance_id: &str, n: usize) -> usize {
    MmixLcg::new(seed ^ fnv1a64(target_utterance_id.as_bytes())).next_index(n)
}

/// Pick a prompt recording from the role database and synthesize the target
/// line with it. With the Brain enabled the pick is the entry closest to
/// `state`; otherwise it is a seeded uniform draw.
pub fn mouth_deliver(
    state: Option<&EmotionState>,
    db: &EmotionDatabase,
    target: &Utterance,
    audio_root: &Path,
    cfg: &AblationConfig,
    backend: &dyn Backend,
) -> Result<Delivery, ActorError> {
    if db.is_empty() {
        return Err(EmoDbError::EmptyDatabase.into());
    }
    if target.text.trim().is_empty() {
        return Err(ActorError::EmptyTarget(target.id.clone()));
    }
    let (entry, similarity) = if cfg.use_brain {
        let state = state.ok_or(ActorError::MissingState)?;
        let (entry, sim) = db.query_top1(state.as_str(), backend)?;
        (entry, Some(sim))
    } else {
        (&db.entries[fallback_index(cfg.seed, &target.id, db.len())], None)
    };
    let prompt = AudioClip::read_wav(&audio_root.join(&entry.audio))?;
    let audio = backend.synthesize(&target.text, &prompt)?;
    if audio.is_empty() {
        return Err(BackendError::Protocol("synthesizer returned an empty clip".into()).into());
    }
    Ok(Delivery {
        retrieved_id: entry.utterance_id.clone(),
        retrieved_caption: entry.caption.clone(),
        similarity,
        retrieval_bypassed: !cfg.use_brain,
        audio,
    })
}

// ---------------------------------------------------------------------------
// Full pipeline

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TurnCaption {
    pub utterance_id: String,
    pub role: String,
    pub caption: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub scene_id: String,
    pub window: Window,
    pub captions: Vec<TurnCaption>,
    pub prompt_text: Option<String>,
    pub retrieved_caption: String,
    pub config: AblationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceBundle {
    pub target_utterance_id: String,
    pub role: String,
    pub emotion_state: Option<EmotionState>,
    pub retrieved_id: Option<String>,
    pub similarity: Option<f64>,
    pub retrieval_bypassed: bool,
    pub audio: AudioClip,
    pub trace: Trace,
}

#[derive(Serialize)]
struct BundleJson<'a> {
    target_utterance_id: &'a str,
    role: &'a str,
    emotion_state: Option<&'a str>,
    retrieved_id: Option<&'a str>,
    similarity: Option<f64>,
    retrieval_bypassed: bool,
    audio: String,
    trace: &'a Trace,
}

impl PerformanceBundle {
    /// Bundle JSON with the audio referenced as `audio_ref`.
    pub fn to_json(&self, audio_ref: &str) -> String {
        let doc = BundleJson {
            target_utterance_id: &self.target_utterance_id,
            role: &self.role,
            emotion_state: self.emotion_state.as_ref().map(EmotionState::as_str),
            retrieved_id: self.retrieved_id.as_deref(),
            similarity: self.similarity,
            retrieval_bypassed: self.retrieval_bypassed,
            audio: audio_ref.to_string(),
            trace: &self.trace,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("bundle serialization");
        text.push('\n');
        text
    }

    /// Write `<stem>.json` and `<stem>.wav` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), std::io::Error> {
        fs::create_dir_all(dir)?;
        let wav_name = format!("{stem}.wav");
        let json_path = dir.join(format!("{stem}.json"));
        let wav_path = dir.join(&wav_name);
        fs::write(&wav_path, self.audio.to_wav_bytes())?;
        fs::write(&json_path, self.to_json(&wav_name))?;
        Ok((json_path, wav_path))
    }
}

/// Which line to perform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineRequest {
    pub role: String,
    pub scene_id: String,
    /// 0-based position of the target within the scene.
    pub position: usize,
    pub window: Window,
}

/// Eye → Ear → Brain → Mouth for one line.
pub fn perform_line(
    corpus: &Corpus,
    request: &LineRequest,
    db: &EmotionDatabase,
    tpl: &PromptTemplate,
    cfg: &AblationConfig,
    backend: &dyn Backend,
) -> Result<PerformanceBundle, PipelineError> {
    cfg.validate().at(Stage::Eye)?;
    let mut ctx = eye_prepare(
        corpus,
        &request.role,
        &request.scene_id,
        request.position,
        request.window,
    )
    .at(Stage::Eye)?;

    if cfg.use_ear {
        ctx = ear_annotate(ctx, backend).at(Stage::Ear)?;
    }

    let (prompt_text, state) = if cfg.use_brain {
        let prompt = render_prompt(&ctx, tpl, cfg).at(Stage::Brain)?;
        let state = brain_infer(&prompt, backend).at(Stage::Brain)?;
        (Some(prompt), Some(state))
    } else {
        (None, None)
    };

    let delivery = mouth_deliver(state.as_ref(), db, &ctx.target, &ctx.audio_root, cfg, backend).at(Stage::Mouth)?;

    let captions = ctx
        .turns
        .iter()
        .map(|t| TurnCaption {
            utterance_id: t.utterance.id.clone(),
            role: t.utterance.role.clone(),
            caption: t.caption.clone(),
        })
        .collect();
    Ok(PerformanceBundle {
        target_utterance_id: ctx.target.id.clone(),
        role: ctx.role_profile.name.clone(),
        emotion_state: state,
        retrieved_id: Some(delivery.retrieved_id),
        similarity: delivery.similarity,
        retrieval_bypassed: delivery.retrieval_bypassed,
        audio: delivery.audio,
        trace: Trace {
            scene_id: ctx.scene_id,
            window: request.window,
            captions,
            prompt_text,
            retrieved_caption: delivery.retrieved_caption,
            config: *cfg,
        },
    })
}
