//! Build one role's emotion database with the mock backends, persist it, and
//! retrieve the closest reference clip for a few emotional states.
//!
//!     cargo run --example emotion_database

use rolecast::backends::MockBackend;
use rolecast::emodb::{build_database, EmotionDatabase};
use rolecast::fixtures::{write_demo, DemoSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus = write_demo(dir.path(), &DemoSpec::default())?;
    let backend = MockBackend::new(42);

    let joey: Vec<_> = corpus.utterances().filter(|u| u.role == "Joey").collect();
    let db = build_database("Joey", &joey, |r| corpus.resolve_asset(r), &backend)?;
    let path = dir.path().join("Joey.emodb.jsonl");
    db.persist(&path)?;
    let db = EmotionDatabase::load(&path)?;
    println!("{} entries of dim {}", db.len(), db.dim);

    for state in ["Joey responds with playful teasing", "quiet sadness", "loud, excited"] {
        let (entry, sim) = db.query_top1(state, &backend)?;
        println!("{state:<40} -> {} [{}] cos={sim:.3}", entry.utterance_id, entry.caption);
    }
    Ok(())
}
