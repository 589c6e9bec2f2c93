//! JSON-over-HTTP protocol spoken between [`RemoteBackend`](super::RemoteBackend)
//! and a model server.
//!
//! | route                   | request                          | response                          |
//! |-------------------------|----------------------------------|-----------------------------------|
//! | `POST /v1/transcribe`   | `{"audio_b64"}`                  | `{"text"}`                        |
//! | `POST /v1/emotion_caption` | `{"audio_b64"}`               | `{"caption"}`                     |
//! | `POST /v1/reason`       | `{"prompt"}`                     | `{"text"}`                        |
//! | `POST /v1/embed`        | `{"texts":[..]}`                 | `{"vectors":[[..]],"dim"}`        |
//! | `POST /v1/synthesize`   | `{"text","prompt_audio_b64"}`    | `{"audio_b64","sample_rate_hz"}`  |
//! | `GET /v1/health`        |                                  | `{"status":"ok"}`                 |
//!
//! Audio is a mono PCM16 WAV file, base64 encoded. Failures use a non-2xx
//! status with `{"error":{"code","message"}}`.
//!
//! [`dispatch`] serves the protocol on top of any [`Backend`], which is how
//! test servers and in-process bridges are built.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{AudioSource, Backend, BackendError};
use crate::audio::AudioClip;

pub const HEALTH: &str = "/v1/health";
pub const TRANSCRIBE: &str = "/v1/transcribe";
pub const EMOTION_CAPTION: &str = "/v1/emotion_caption";
pub const REASON: &str = "/v1/reason";
pub const EMBED: &str = "/v1/embed";
pub const SYNTHESIZE: &str = "/v1/synthesize";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioRequest {
    pub audio_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionResponse {
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub text: String,
    pub prompt_audio_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub audio_b64: String,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
}

pub fn encode_audio(wav_bytes: &[u8]) -> String {
    STANDARD.encode(wav_bytes)
}

pub fn decode_audio(b64: &str) -> Result<AudioClip, BackendError> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| BackendError::Protocol(format!("invalid base64 audio: {e}")))?;
    Ok(AudioClip::from_wav_bytes(&bytes)?)
}

/// A response produced by [`dispatch`]: HTTP status and JSON body.
#[derive(Debug, Clone, PartialEq)]
pub struct WireResponse {
    pub status: u16,
    pub body: String,
}

impl WireResponse {
    fn ok<T: Serialize>(value: &T) -> Self {
        Self {
            status: 200,
            body: serde_json::to_string(value).expect("wire response serialization"),
        }
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self::ok(&ErrorResponse {
            error: ErrorBody {
                code: code.to_string(),
                message: message.into(),
            },
        })
        .with_status(status)
    }

    fn with_status(mut self, status: u16) -> Self {
        self.status = status;
        self
    }
}

fn status_for(err: &BackendError) -> u16 {
    match err {
        BackendError::EmptyPrompt | BackendError::EmptyText | BackendError::EmptyInput | BackendError::Protocol(_) => {
            400
        }
        BackendError::MissingSidecar(_) => 404,
        BackendError::Unavailable(_) => 503,
        _ => 500,
    }
}

fn from_backend<T: Serialize>(result: Result<T, BackendError>) -> WireResponse {
    match result {
        Ok(v) => WireResponse::ok(&v),
        Err(e) => WireResponse::error(status_for(&e), e.code(), e.to_string()),
    }
}

fn parse<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, WireResponse> {
    serde_json::from_slice(body).map_err(|e| WireResponse::error(400, "BadRequest", e.to_string()))
}

/// Serve one wire request against `backend`.
pub fn dispatch(backend: &dyn Backend, method: &str, path: &str, body: &[u8]) -> WireResponse {
    let result = match (method, path) {
        ("GET", HEALTH) => return WireResponse::ok(&HealthResponse { status: "ok".into() }),
        ("POST", TRANSCRIBE) => parse::<AudioRequest>(body).map(|req| {
            from_backend(
                decode_audio(&req.audio_b64)
                    .and_then(|clip| backend.transcribe(&AudioSource::Clip(clip)))
                    .map(|text| TextResponse { text }),
            )
        }),
        ("POST", EMOTION_CAPTION) => parse::<AudioRequest>(body).map(|req| {
            from_backend(
                decode_audio(&req.audio_b64)
                    .and_then(|clip| backend.caption_emotion(&AudioSource::Clip(clip)))
                    .map(|caption| CaptionResponse { caption }),
            )
        }),
        ("POST", REASON) => parse::<ReasonRequest>(body)
            .map(|req| from_backend(backend.reason(&req.prompt).map(|text| TextResponse { text }))),
        ("POST", EMBED) => parse::<EmbedRequest>(body).map(|req| {
            from_backend(backend.embed(&req.texts).map(|vs| EmbedResponse {
                dim: vs.first().map_or(0, |v| v.dim()),
                vectors: vs.into_iter().map(|v| v.0).collect(),
            }))
        }),
        ("POST", SYNTHESIZE) => parse::<SynthesizeRequest>(body).map(|req| {
            from_backend(
                decode_audio(&req.prompt_audio_b64)
                    .and_then(|prompt| backend.synthesize(&req.text, &prompt))
                    .map(|clip| SynthesizeResponse {
                        audio_b64: encode_audio(&clip.to_wav_bytes()),
                        sample_rate_hz: clip.sample_rate_hz,
                    }),
            )
        }),
        (_, p) if [HEALTH, TRANSCRIBE, EMOTION_CAPTION, REASON, EMBED, SYNTHESIZE].contains(&p) => Ok(
            WireResponse::error(405, "MethodNotAllowed", format!("{method} not allowed on {p}")),
        ),
        (_, p) => Ok(WireResponse::error(404, "NotFound", format!("no route {p}"))),
    };
    result.unwrap_or_else(|e| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockBackend;

    #[test]
    fn health_and_routing() {
        let mock = MockBackend::new(0);
        let r = dispatch(&mock, "GET", HEALTH, b"");
        assert_eq!((r.status, r.body.as_str()), (200, r#"{"status":"ok"}"#));
        assert_eq!(dispatch(&mock, "GET", "/v2/nope", b"").status, 404);
        assert_eq!(dispatch(&mock, "GET", REASON, b"").status, 405);
    }

    #[test]
    fn error_shape() {
        let mock = MockBackend::new(0);
        let r = dispatch(&mock, "POST", REASON, br#"{"prompt":""}"#);
        assert_eq!(r.status, 400);
        let err: ErrorResponse = serde_json::from_str(&r.body).unwrap();
        assert_eq!(err.error.code, "EmptyPrompt");

        let r = dispatch(&mock, "POST", EMBED, b"{");
        assert_eq!(r.status, 400);
        let err: ErrorResponse = serde_json::from_str(&r.body).unwrap();
        assert_eq!(err.error.code, "BadRequest");
    }

    #[test]
    fn reason_over_dispatch() {
        let mock = MockBackend::new(0);
        let body = serde_json::to_vec(&ReasonRequest {
            prompt: "#ROLE: Phoebe\n#LAST_TONE: anxious concern".into(),
        })
        .unwrap();
        let r = dispatch(&mock, "POST", REASON, &body);
        assert_eq!(r.body, r#"{"text":"Phoebe responds with anxious concern"}"#);
    }
}
