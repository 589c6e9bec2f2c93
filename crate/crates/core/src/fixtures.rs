//! A small synthetic sitcom corpus for demos, tests and offline runs.
//!
//! Everything is derived from a seed: dialogue text, speakers, timings,
//! scene layout and each utterance's tone. [`write_demo`] also lays down
//! the audio assets together with the `.txt` / `.emotion.txt` sidecars the
//! mock backend reads, so the whole pipeline runs without any model.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{sine_tone, AudioClip};
use crate::corpus::{Corpus, Episode, RoleProfile, Scene, Utterance};
use crate::scenealign::SCENE_HEADER_PREFIX;

/// Main cast in statistics-column order.
pub const MAIN_ROLES: [&str; 6] = ["Rachel", "Monica", "Phoebe", "Joey", "Chandler", "Ross"];
pub const OTHERS: &str = "OTHERS";

pub const TONES: [&str; 10] = [
    "anxious concern",
    "joyful relief",
    "dry sarcastic tone",
    "excited and loud",
    "calm soft voice",
    "frustrated raised voice",
    "warm affection",
    "nervous laughter",
    "flat disappointment",
    "playful teasing",
];

const WORDS: [&str; 48] = [
    "coffee",
    "apartment",
    "couch",
    "dinosaur",
    "museum",
    "guitar",
    "smelly",
    "cat",
    "sandwich",
    "turkey",
    "break",
    "wedding",
    "dress",
    "job",
    "interview",
    "audition",
    "soap",
    "opera",
    "monkey",
    "marcel",
    "chef",
    "restaurant",
    "kitchen",
    "sister",
    "brother",
    "mother",
    "date",
    "tonight",
    "tomorrow",
    "really",
    "never",
    "always",
    "maybe",
    "okay",
    "fine",
    "seriously",
    "honestly",
    "wait",
    "listen",
    "look",
    "party",
    "birthday",
    "ugly",
    "naked",
    "guy",
    "window",
    "laundry",
    "thanksgiving",
];

const PLACES: [&str; 6] = [
    "Central Perk",
    "Monica and Rachel's apartment",
    "Chandler and Joey's apartment",
    "the museum",
    "a restaurant",
    "the laundromat",
];

const AUDIO_RATE_HZ: u32 = 16_000;
const AUDIO_SAMPLES: usize = 1_600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemoSpec {
    pub episodes: usize,
    pub scenes_per_episode: usize,
    pub utterances_per_scene: usize,
    pub seed: u64,
}

impl Default for DemoSpec {
    fn default() -> Self {
        Self {
            episodes: 24,
            scenes_per_episode: 2,
            utterances_per_scene: 6,
            seed: 42,
        }
    }
}

pub fn episode_id(n: usize) -> String {
    format!("SE01_{n:02}")
}

pub fn role_profiles() -> Vec<RoleProfile> {
    let blurbs = [
        "Spoiled but warm-hearted, works in fashion, quick to panic and quicker to forgive.",
        "Competitive chef and perfectionist host, fiercely loyal, cleans when stressed.",
        "Eccentric masseuse and folk singer, blunt, spiritual, unexpectedly wise.",
        "Struggling actor with a big appetite, sweet, easily confused, loyal to friends.",
        "Office worker who hides insecurity behind relentless sarcasm and jokes.",
        "Paleontologist, earnest and nerdy, prone to lectures and romantic mishaps.",
    ];
    MAIN_ROLES
        .iter()
        .zip(blurbs)
        .map(|(name, blurb)| RoleProfile {
            name: name.to_string(),
            profile: format!("{name}. {blurb}"),
        })
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(4..=9);
    let mut words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    let mut s = String::new();
    let first = words.remove(0);
    let mut chars = first.chars();
    if let Some(c) = chars.next() {
        s.extend(c.to_uppercase());
        s.push_str(chars.as_str());
    }
    for w in words {
        s.push(' ');
        s.push_str(w);
    }
    s.push(*['.', '!', '?'].choose(rng).expect("non-empty"));
    s
}

/// Tone assigned to an utterance in the demo corpus.
pub fn demo_tone(spec: &DemoSpec, utterance_id: &str) -> &'static str {
    let h = crate::hashing::fnv1a64(format!("{}:{utterance_id}", spec.seed).as_bytes());
    TONES[(h % TONES.len() as u64) as usize]
}

/// Build the demo corpus in memory. Asset paths are `audio/<id>.wav`
/// relative to `root`.
pub fn demo_corpus(spec: &DemoSpec, root: &Path) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut episodes = Vec::with_capacity(spec.episodes);
    for e in 1..=spec.episodes {
        let eid = episode_id(e);
        let mut utterances = Vec::new();
        let mut scenes = Vec::new();
        let mut clock_ds: u64 = 0;
        for s in 0..spec.scenes_per_episode {
            let start_index = utterances.len();
            for _ in 0..spec.utterances_per_scene {
                let role = if rng.gen_bool(0.1) {
                    OTHERS
                } else {
                    *MAIN_ROLES.choose(&mut rng).expect("non-empty")
                };
                let id = format!("{eid}_U{:03}", utterances.len() + 1);
                let len_ds = rng.gen_range(8..=40u64);
                let gap_ds = rng.gen_range(1..=6u64);
                utterances.push(Utterance {
                    audio: format!("audio/{id}.wav"),
                    id,
                    episode_id: eid.clone(),
                    role: role.to_string(),
                    text: sentence(&mut rng),
                    start_s: clock_ds as f64 / 10.0,
                    end_s: (clock_ds + len_ds) as f64 / 10.0,
                });
                clock_ds += len_ds + gap_ds;
            }
            if utterances.len() > start_index {
                scenes.push(Scene {
                    id: format!("{eid}_S{:02}", s + 1),
                    episode_id: eid.clone(),
                    start_index,
                    end_index: utterances.len() - 1,
                    description: format!("Scene {} at {}.", s + 1, PLACES.choose(&mut rng).expect("non-empty")),
                });
            }
        }
        episodes.push(Episode {
            id: eid,
            utterances,
            scenes,
        });
    }
    let mut corpus = Corpus::new(episodes, role_profiles());
    corpus.root = root.to_path_buf();
    corpus
}

/// Audio for one demo utterance: a short tone whose pitch depends on the
/// speaker and the tone label.
pub fn demo_clip(role: &str, tone: &str) -> AudioClip {
    let key = crate::hashing::fnv1a64(format!("{role}|{tone}").as_bytes());
    let freq = 120.0 + (key % 280) as f64;
    AudioClip::new(AUDIO_RATE_HZ, sine_tone(AUDIO_RATE_HZ, freq, AUDIO_SAMPLES, 6_000.0)).expect("supported rate")
}

/// Write `manifest.json`, the WAV assets and their mock sidecars under `dir`.
pub fn write_demo(dir: &Path, spec: &DemoSpec) -> io::Result<Corpus> {
    let corpus = demo_corpus(spec, dir);
    fs::create_dir_all(dir.join("audio"))?;
    for u in corpus.utterances() {
        let wav = dir.join(&u.audio);
        let tone = demo_tone(spec, &u.id);
        demo_clip(&u.role, tone)
            .write_wav(&wav)
            .map_err(|e| io::Error::other(e.to_string()))?;
        fs::write(sidecar(&wav, ".txt"), &u.text)?;
        fs::write(sidecar(&wav, ".emotion.txt"), tone)?;
    }
    fs::write(dir.join("manifest.json"), corpus.to_manifest_string())?;
    Ok(corpus)
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Render an episode as a crawled-style script: one `[SCENE]` header per
/// scene followed by `Speaker: text` lines.
pub fn episode_script(episode: &Episode) -> String {
    let mut out = String::new();
    for scene in &episode.scenes {
        let _ = writeln!(out, "{SCENE_HEADER_PREFIX} {}", scene.description);
        for u in &episode.utterances[scene.start_index..=scene.end_index] {
            let speaker = if u.role == OTHERS { "Guest" } else { &u.role };
            let _ = writeln!(out, "{speaker}: {}", u.text);
        }
    }
    out
}
