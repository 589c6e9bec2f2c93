//! Run Eye, Ear, Brain and Mouth for one target line and write the bundle.
//!
//!     cargo run --example perform_line

use rolecast::actor::{perform_line, Ablation, LineRequest, PromptTemplate, Window};
use rolecast::backends::MockBackend;
use rolecast::emodb::build_database;
use rolecast::fixtures::{write_demo, DemoSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus = write_demo(dir.path(), &DemoSpec::default())?;
    let backend = MockBackend::new(42);

    let episode = &corpus.episodes[2];
    let scene = &episode.scenes[0];
    // The last line in the scene spoken by a main role.
    let position = (0..scene.len())
        .rev()
        .find(|&p| episode.utterances[scene.start_index + p].role != "OTHERS")
        .ok_or("scene has no main-role line")?;
    let target = &episode.utterances[scene.start_index + position];
    let role = target.role.as_str();

    let pool: Vec<_> = corpus
        .utterances()
        .filter(|u| u.role == role && u.id != target.id)
        .collect();
    let db = build_database(role, &pool, |r| corpus.resolve_asset(r), &backend)?;
    let request = LineRequest {
        role: role.to_string(),
        scene_id: scene.id.clone(),
        position,
        window: Window::All,
    };
    let bundle = perform_line(
        &corpus,
        &request,
        &db,
        &PromptTemplate::default(),
        &Ablation::Full.config(42),
        &backend,
    )?;

    if let Some(prompt) = &bundle.trace.prompt_text {
        println!("{prompt}\n");
    }
    let (json, wav) = bundle.write(dir.path(), "bundle")?;
    println!("{}", std::fs::read_to_string(json)?);
    println!("audio: {} bytes", std::fs::metadata(wav)?.len());
    Ok(())
}
