//! Aggregate simulated listener ratings into an RP-MOS table and the
//! ablation deltas against the full system.
//!
//!     cargo run --example rp_mos_report

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rolecast::eval::{ablation_delta, aggregate_mos, render_report, Best, Layout, MosRecord, ReportRow, ROLE_ORDER};

fn ratings(rng: &mut ChaCha8Rng, center: f64, mismatch_rate: f64) -> Vec<MosRecord> {
    let mut out = Vec::new();
    for role in ROLE_ORDER {
        for item in 0..5 {
            for evaluator in 0..4 {
                let score = (center + rng.gen_range(-1.2..1.2)).round().clamp(1.0, 5.0) as u8;
                out.push(MosRecord {
                    item_id: format!("{role}-{item}"),
                    role: role.to_string(),
                    evaluator_id: format!("e{evaluator}"),
                    raw_score: score,
                    voice_mismatch: rng.gen_bool(mismatch_rate),
                    content_mismatch: false,
                });
            }
        }
    }
    out
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let systems = [("baseline", 2.6, 0.15), ("full", 3.6, 0.02), ("wo-brain", 3.0, 0.05)];
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for (label, center, rate) in systems {
        let table = aggregate_mos(&ratings(&mut rng, center, rate))?;
        rows.push(table.to_row(label, &ROLE_ORDER));
        tables.push(table);
    }
    print!("{}", render_report(&rows, Layout::Mos, Some(Best::Highest))?.text);

    let delta = ablation_delta(&tables[1].means(), &tables[2].means())?;
    let row = ReportRow {
        label: "wo-brain".into(),
        cells: vec![Some(delta)],
    };
    print!("\n{}", render_report(&[row], Layout::Ablation, None)?.text);
    Ok(())
}
