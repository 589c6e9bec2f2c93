//! Speech role-playing orchestration.
//!
//! The crate covers the full path from an annotated dialogue corpus to a
//! delivered line of speech:
//!
//! - [`corpus`]: utterance / scene / role data model, manifest I/O, validation
//!   and episode splits.
//! - [`scenealign`]: projecting scene boundaries from crawled scripts onto
//!   recognized utterances, plus per-episode statistics tables.
//! - [`backends`]: one trait over transcription, emotion captioning,
//!   reasoning, embedding and synthesis, with deterministic mocks and an
//!   HTTP client for remote model servers.
//! - [`emodb`]: per-role emotion-caption index with cosine top-1 retrieval.
//! - [`actor`]: the Eye / Ear / Brain / Mouth pipeline and its ablations.
//! - [`eval`]: gated mean-opinion-score aggregation and report rendering.
//! - [`cli`]: the `amb` command line front end.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod actor;
pub mod audio;
pub mod backends;
pub mod cli;
pub mod corpus;
pub mod emodb;
pub mod eval;
pub mod fixtures;
pub mod hashing;
pub mod numfmt;
pub mod scenealign;

pub use actor::{AblationConfig, EmotionState, PerformanceBundle, PromptTemplate, SceneContext};
pub use audio::AudioClip;
pub use backends::{Backend, BackendConfig, BackendError};
pub use corpus::{Corpus, RoleProfile, Scene, Utterance};
pub use emodb::{EmotionDatabase, EmotionEntry};
