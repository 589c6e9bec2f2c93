//! Recover scene boundaries for recognized utterances from an episode script,
//! after dropping two lines and adding a stray backchannel.
//!
//!     cargo run --example script_alignment

use std::path::Path;

use rolecast::fixtures::{demo_corpus, episode_script, DemoSpec};
use rolecast::scenealign::{align_script, project_boundaries, ScriptDocument};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DemoSpec {
        episodes: 1,
        scenes_per_episode: 4,
        ..Default::default()
    };
    let corpus = demo_corpus(&spec, Path::new("."));
    let episode = &corpus.episodes[0];
    let script = ScriptDocument::parse(&episode_script(episode))?;

    let mut heard = episode.utterances.clone();
    heard.remove(9);
    heard.remove(3);
    let mut crosstalk = heard[5].clone();
    crosstalk.id.push_str("_x");
    crosstalk.text = "uh huh".into();
    heard.insert(6, crosstalk);

    let alignment = align_script(&script, &heard)?;
    println!(
        "matched {} lines, skipped lines {:?}, skipped utterances {:?}",
        alignment.pairs.len(),
        alignment.skipped_lines,
        alignment.skipped_utterances
    );
    let projection = project_boundaries(&alignment, &script)?;
    for (scene, (start, end)) in episode.scenes.iter().zip(projection.spans()) {
        println!(
            "{:<12} script [{:>2}, {:>2}]  recovered [{:>2}, {:>2}]",
            scene.id, scene.start_index, scene.end_index, start, end
        );
    }
    Ok(())
}
