use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{self, ErrorResponse};
use super::{AudioSource, Backend, BackendConfig, BackendError, Embedding, Limiter};
use crate::audio::AudioClip;

/// HTTP client for the wire protocol. At most `max_parallel` requests are
/// in flight; each has the configured timeout.
#[derive(Debug)]
pub struct RemoteBackend {
    base_url: String,
    agent: ureq::Agent,
    limiter: Limiter,
    max_parallel: usize,
}

impl RemoteBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let base_url = cfg
            .base_url
            .clone()
            .ok_or_else(|| BackendError::InvalidConfig("remote mode requires a base URL".into()))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build();
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent,
            limiter: Limiter::new(cfg.max_parallel),
            max_parallel: cfg.max_parallel,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// `GET /v1/health`.
    pub fn health(&self) -> Result<(), BackendError> {
        let _permit = self.limiter.acquire();
        let resp = self
            .agent
            .get(&format!("{}{}", self.base_url, wire::HEALTH))
            .call()
            .map_err(map_error)?;
        let body: wire::HealthResponse = read_json(resp)?;
        if body.status == "ok" {
            Ok(())
        } else {
            Err(BackendError::Unavailable(format!("health status `{}`", body.status)))
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, route: &str, req: &Req) -> Result<Resp, BackendError> {
        let _permit = self.limiter.acquire();
        let resp = self
            .agent
            .post(&format!("{}{}", self.base_url, route))
            .send_json(req)
            .map_err(map_error)?;
        read_json(resp)
    }

    fn audio_b64(audio: &AudioSource) -> Result<String, BackendError> {
        let bytes = match audio {
            AudioSource::Clip(clip) => clip.to_wav_bytes(),
            AudioSource::Asset(path) => std::fs::read(path).map_err(|source| {
                BackendError::Audio(crate::audio::AudioError::Io {
                    path: path.clone(),
                    source,
                })
            })?,
        };
        Ok(wire::encode_audio(&bytes))
    }
}

fn read_json<T: DeserializeOwned>(resp: ureq::Response) -> Result<T, BackendError> {
    resp.into_json::<T>()
        .map_err(|e| BackendError::Protocol(format!("malformed response body: {e}")))
}

fn map_error(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Status(status, resp) => match resp.into_json::<ErrorResponse>() {
            Ok(body) => BackendError::Remote {
                code: body.error.code,
                message: body.error.message,
            },
            Err(_) => BackendError::Protocol(format!("HTTP {status} without an error body")),
        },
        ureq::Error::Transport(t) => BackendError::Unavailable(t.to_string()),
    }
}

impl Backend for RemoteBackend {
    fn transcribe(&self, audio: &AudioSource) -> Result<String, BackendError> {
        let req = wire::AudioRequest {
            audio_b64: Self::audio_b64(audio)?,
        };
        self.post::<_, wire::TextResponse>(wire::TRANSCRIBE, &req)
            .map(|r| r.text)
    }

    fn caption_emotion(&self, audio: &AudioSource) -> Result<String, BackendError> {
        let req = wire::AudioRequest {
            audio_b64: Self::audio_b64(audio)?,
        };
        self.post::<_, wire::CaptionResponse>(wire::EMOTION_CAPTION, &req)
            .map(|r| r.caption)
    }

    fn reason(&self, prompt: &str) -> Result<String, BackendError> {
        if prompt.trim().is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let req = wire::ReasonRequest {
            prompt: prompt.to_string(),
        };
        self.post::<_, wire::TextResponse>(wire::REASON, &req).map(|r| r.text)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let req = wire::EmbedRequest { texts: texts.to_vec() };
        let resp: wire::EmbedResponse = self.post(wire::EMBED, &req)?;
        if resp.vectors.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        if resp.dim == 0 || resp.vectors.iter().any(|v| v.len() != resp.dim) {
            return Err(BackendError::Protocol(format!(
                "vectors do not all have dim {}",
                resp.dim
            )));
        }
        Ok(resp.vectors.into_iter().map(Embedding).collect())
    }

    fn synthesize(&self, text: &str, prompt: &AudioClip) -> Result<AudioClip, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::EmptyText);
        }
        let req = wire::SynthesizeRequest {
            text: text.to_string(),
            prompt_audio_b64: wire::encode_audio(&prompt.to_wav_bytes()),
        };
        let resp: wire::SynthesizeResponse = self.post(wire::SYNTHESIZE, &req)?;
        let clip = wire::decode_audio(&resp.audio_b64)?;
        if clip.sample_rate_hz != resp.sample_rate_hz {
            return Err(BackendError::Protocol(format!(
                "declared {} Hz but the WAV says {} Hz",
                resp.sample_rate_hz, clip.sample_rate_hz
            )));
        }
        if clip.is_empty() {
            return Err(BackendError::Protocol("synthesized clip is empty".into()));
        }
        Ok(clip)
    }

    fn max_parallel(&self) -> usize {
        self.max_parallel
    }
}
