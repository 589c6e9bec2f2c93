use std::fs;
use std::path::{Path, PathBuf};

use super::{AudioSource, Backend, BackendError, Embedding};
use crate::audio::{sine_tone, AudioClip, AudioError};
use crate::hashing::fnv1a64;

pub const MOCK_EMBED_DIM: usize = 64;
pub const DEFAULT_CAPTION: &str = "neutral, steady tone";
pub const NEUTRAL_DELIVERY: &str = "neutral delivery";

const ROLE_MARKER: &str = "#ROLE:";
const TONE_MARKER: &str = "#LAST_TONE:";

const SYNTH_RATE_HZ: u32 = 16_000;
const SYNTH_AMPLITUDE: f64 = 8_000.0;
const MIN_SYNTH_MS: usize = 200;
const MS_PER_CHAR: usize = 60;
const PROMPT_HASH_SAMPLES: usize = 64;

/// Deterministic stand-in for every model.
///
/// - transcribe: contents of `<audio>.txt`
/// - caption: contents of `<audio>.emotion.txt`, else [`DEFAULT_CAPTION`]
/// - reason: `"<ROLE> responds with <LAST_TONE>"` read from the marker lines
/// - embed: FNV-1a bag of words into 64 buckets, L2-normalized
/// - synthesize: 16 kHz sine, 60 ms per character (200 ms minimum), pitch
///   keyed on the prompt clip's first 64 samples
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    max_parallel: usize,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed, max_parallel: 1 }
    }

    pub fn with_max_parallel(mut self, n: usize) -> Self {
        self.max_parallel = n.max(1);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mock embedding of a single text.
    pub fn embed_one(text: &str) -> Embedding {
        let mut v = vec![0.0f64; MOCK_EMBED_DIM];
        let lower = text.to_lowercase();
        let mut any = false;
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            v[(fnv1a64(token.as_bytes()) % MOCK_EMBED_DIM as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            v[0] = 1.0;
            return Embedding(v);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Embedding(v)
    }

    /// Pitch the mock synthesizer uses for a prompt clip.
    pub fn synth_frequency(prompt: &AudioClip) -> u64 {
        150 + fnv1a64(&prompt.sample_bytes(PROMPT_HASH_SAMPLES)) % 200
    }

    pub fn synth_samples(text: &str) -> usize {
        let ms = (MS_PER_CHAR * text.chars().count()).max(MIN_SYNTH_MS);
        ms * SYNTH_RATE_HZ as usize / 1000
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn marker_value<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|line| line.trim_start().strip_prefix(marker))
        .map(str::trim)
}

/// A real backend would fail to read a missing asset; so does the mock.
fn require_asset(path: &Path) -> Result<(), BackendError> {
    fs::metadata(path).map(|_| ()).map_err(|source| {
        BackendError::Audio(AudioError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

impl Backend for MockBackend {
    fn transcribe(&self, audio: &AudioSource) -> Result<String, BackendError> {
        match audio {
            AudioSource::Asset(path) => {
                require_asset(path)?;
                let side = sidecar(path, ".txt");
                fs::read_to_string(&side).map_err(|_| BackendError::MissingSidecar(side))
            }
            AudioSource::Clip(_) => Err(BackendError::MissingSidecar(PathBuf::from("<in-memory clip>"))),
        }
    }

    fn caption_emotion(&self, audio: &AudioSource) -> Result<String, BackendError> {
        if let AudioSource::Asset(path) = audio {
            require_asset(path)?;
            if let Ok(text) = fs::read_to_string(sidecar(path, ".emotion.txt")) {
                return Ok(text);
            }
        }
        Ok(DEFAULT_CAPTION.to_string())
    }

    fn reason(&self, prompt: &str) -> Result<String, BackendError> {
        if prompt.trim().is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        Ok(
            match (marker_value(prompt, ROLE_MARKER), marker_value(prompt, TONE_MARKER)) {
                (Some(role), Some(tone)) => format!("{role} responds with {tone}"),
                _ => NEUTRAL_DELIVERY.to_string(),
            },
        )
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }

    fn synthesize(&self, text: &str, prompt: &AudioClip) -> Result<AudioClip, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::EmptyText);
        }
        let freq = Self::synth_frequency(prompt) as f64;
        let samples = sine_tone(SYNTH_RATE_HZ, freq, Self::synth_samples(text), SYNTH_AMPLITUDE);
        Ok(AudioClip::new(SYNTH_RATE_HZ, samples)?)
    }

    fn max_parallel(&self) -> usize {
        self.max_parallel
    }
}
