//! The same target line under the full configuration and every ablation.
//!
//!     cargo run --example ablation_matrix

use rolecast::actor::{perform_line, Ablation, LineRequest, PromptTemplate, Window};
use rolecast::backends::MockBackend;
use rolecast::emodb::build_database;
use rolecast::fixtures::{write_demo, DemoSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus = write_demo(dir.path(), &DemoSpec::default())?;
    let backend = MockBackend::new(42);

    let episode = &corpus.episodes[5];
    let scene = &episode.scenes[1];
    let position = (1..scene.len())
        .rev()
        .find(|&p| episode.utterances[scene.start_index + p].role != "OTHERS")
        .ok_or("scene has no main-role line")?;
    let role = episode.utterances[scene.start_index + position].role.clone();
    let pool: Vec<_> = corpus.utterances().filter(|u| u.role == role).collect();
    let db = build_database(&role, &pool, |r| corpus.resolve_asset(r), &backend)?;
    let request = LineRequest {
        role: role.clone(),
        scene_id: scene.id.clone(),
        position,
        window: Window::All,
    };

    println!("{} at {} position {position}\n", role, scene.id);
    println!(
        "{:<34} {:<48} {:<14} prompt chars",
        "configuration", "emotion state", "retrieved"
    );
    for ablation in Ablation::ALL {
        let b = perform_line(
            &corpus,
            &request,
            &db,
            &PromptTemplate::default(),
            &ablation.config(42),
            &backend,
        )?;
        println!(
            "{:<34} {:<48} {:<14} {}",
            ablation.label(),
            b.emotion_state.as_ref().map_or("(bypassed)", |s| s.as_str()),
            b.retrieved_id.as_deref().unwrap_or("-"),
            b.trace.prompt_text.as_ref().map_or(0, |p| p.chars().count())
        );
    }
    Ok(())
}
