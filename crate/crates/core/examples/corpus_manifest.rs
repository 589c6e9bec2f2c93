//! Write the synthetic demo corpus, validate it, and split off test episodes.
//!
//!     cargo run --example corpus_manifest [-- OUT_DIR]
//!
//! With OUT_DIR the corpus is kept there for use with `amb`.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rolecast::corpus::{load_manifest, scene_dialogue, split_episodes, validate_corpus};
use rolecast::fixtures::{episode_id, write_demo, DemoSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = std::env::args_os()
        .nth(1)
        .map_or_else(|| tmp.path().to_path_buf(), PathBuf::from);
    write_demo(&dir, &DemoSpec::default())?;
    let corpus = load_manifest(&dir.join("manifest.json"))?;

    let report = validate_corpus(&corpus);
    println!(
        "{} episodes, {} utterances, {} violations",
        corpus.episodes.len(),
        corpus.utterance_count(),
        report.violations.len()
    );

    let scene = &corpus.episodes[0].scenes[0];
    println!("\n{} ({}):", scene.id, scene.description);
    for u in scene_dialogue(&corpus, &scene.id)? {
        println!("  {:<8} {}", u.role, u.text);
    }

    let test: BTreeSet<String> = (11..=14).map(episode_id).collect();
    let (train, held_out) = split_episodes(&corpus, &test)?;
    println!("\ntrain {} / test {}", train.episodes.len(), held_out.episodes.len());
    Ok(())
}
