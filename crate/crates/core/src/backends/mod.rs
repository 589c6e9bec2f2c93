//! Model inference behind one trait.
//!
//! Five capabilities are needed by the pipeline and the corpus tooling:
//! transcription, emotion captioning, single-turn reasoning, text embedding
//! and prompted speech synthesis. [`MockBackend`] implements all of them as
//! pure functions for hermetic runs; [`RemoteBackend`] speaks the JSON wire
//! protocol in [`wire`] to an external model server.

mod mock;
mod remote;
pub mod wire;

use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioClip, AudioError};

pub use mock::{MockBackend, DEFAULT_CAPTION, MOCK_EMBED_DIM, NEUTRAL_DELIVERY};
pub use remote::RemoteBackend;

/// Environment variable that overrides the remote base URL.
pub const BACKEND_URL_ENV: &str = "AMB_BACKEND_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("no transcript sidecar at {0}")]
    MissingSidecar(PathBuf),
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("empty text")]
    EmptyText,
    #[error("empty input")]
    EmptyInput,
    #[error("remote error {code}: {message}")]
    Remote { code: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl BackendError {
    /// Stable error code; remote errors keep the code the server sent.
    pub fn code(&self) -> &str {
        match self {
            BackendError::Unavailable(_) => "BackendUnavailable",
            BackendError::MissingSidecar(_) => "MissingSidecar",
            BackendError::EmptyPrompt => "EmptyPrompt",
            BackendError::EmptyText => "EmptyText",
            BackendError::EmptyInput => "EmptyInput",
            BackendError::Remote { code, .. } => code,
            BackendError::Protocol(_) => "ProtocolError",
            BackendError::InvalidConfig(_) => "InvalidConfig",
            BackendError::Audio(_) => "AudioError",
        }
    }
}

/// Audio handed to a backend: either decoded samples or a file on disk.
///
/// The mock uses the path of an asset to find its text sidecars; the remote
/// client uploads the file's bytes.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioSource {
    Clip(AudioClip),
    Asset(PathBuf),
}

impl AudioSource {
    pub fn to_clip(&self) -> Result<AudioClip, AudioError> {
        match self {
            AudioSource::Clip(c) => Ok(c.clone()),
            AudioSource::Asset(p) => AudioClip::read_wav(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub trait Backend: Send + Sync {
    fn transcribe(&self, audio: &AudioSource) -> Result<String, BackendError>;
    fn caption_emotion(&self, audio: &AudioSource) -> Result<String, BackendError>;
    fn reason(&self, prompt: &str) -> Result<String, BackendError>;
    /// One vector per input, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError>;
    fn synthesize(&self, text: &str, prompt: &AudioClip) -> Result<AudioClip, BackendError>;

    /// How many calls may be in flight at once.
    fn max_parallel(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub base_url: Option<String>,
    pub timeout_ms: u64,
    pub max_parallel: usize,
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            mode: BackendMode::Mock,
            base_url: None,
            timeout_ms: 30_000,
            max_parallel: 1,
            seed: 42,
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn remote(base_url: impl Into<String>) -> Self {
        Self {
            mode: BackendMode::Remote,
            base_url: Some(base_url.into()),
            ..Self::default()
        }
    }

    /// Parse `mock`, `remote` or `remote:URL`. A bare `remote` needs the
    /// URL from [`BACKEND_URL_ENV`].
    pub fn from_spec(spec: &str) -> Result<Self, BackendError> {
        match spec {
            "mock" => Ok(Self::mock()),
            "remote" => Ok(Self {
                mode: BackendMode::Remote,
                ..Self::default()
            }),
            other => match other.strip_prefix("remote:") {
                Some(url) if !url.is_empty() => Ok(Self::remote(url)),
                _ => Err(BackendError::InvalidConfig(format!(
                    "backend must be `mock` or `remote:URL`, got `{other}`"
                ))),
            },
        }
    }

    /// Apply the URL override from the environment, if set.
    pub fn with_env_override(mut self) -> Self {
        if self.mode == BackendMode::Remote {
            if let Ok(url) = std::env::var(BACKEND_URL_ENV) {
                if !url.is_empty() {
                    self.base_url = Some(url);
                }
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_parallel == 0 {
            return Err(BackendError::InvalidConfig("max_parallel must be at least 1".into()));
        }
        if self.timeout_ms == 0 {
            return Err(BackendError::InvalidConfig("timeout_ms must be positive".into()));
        }
        if self.mode == BackendMode::Remote && self.base_url.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::InvalidConfig("remote mode requires a base URL".into()));
        }
        Ok(())
    }

    pub fn connect(&self) -> Result<Arc<dyn Backend>, BackendError> {
        self.validate()?;
        Ok(match self.mode {
            BackendMode::Mock => Arc::new(MockBackend::new(self.seed).with_max_parallel(self.max_parallel)),
            BackendMode::Remote => Arc::new(RemoteBackend::new(self)?),
        })
    }
}

/// Counting limiter bounding concurrent calls.
#[derive(Debug)]
pub(crate) struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

pub(crate) struct Permit<'a>(&'a Limiter);

impl Limiter {
    pub(crate) fn new(max: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max: max.max(1),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}
