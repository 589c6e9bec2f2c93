//! Per-episode utterance and scene statistics for the demo corpus.
//!
//!     cargo run --example benchmark_stats

use std::path::Path;

use rolecast::fixtures::{demo_corpus, DemoSpec};
use rolecast::scenealign::compute_stats;

fn main() {
    let corpus = demo_corpus(&DemoSpec::default(), Path::new("."));
    let stats = compute_stats(&corpus);
    print!("{}\n{}", stats.utterance_table(), stats.scene_table());
}
