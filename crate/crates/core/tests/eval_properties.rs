use proptest::prelude::*;
use rolecast::eval::{
    aggregate_improvement, aggregate_mos, gate_score, AggCell, ImprovementRecord, MosRecord, ROLE_ORDER,
};

fn record() -> impl Strategy<Value = MosRecord> {
    (0usize..6, 1u8..=5, any::<bool>(), any::<bool>(), 0u32..20).prop_map(|(r, score, voice, content, e)| MosRecord {
        item_id: format!("item{e}"),
        role: ROLE_ORDER[r].to_string(),
        evaluator_id: format!("e{e}"),
        raw_score: score,
        voice_mismatch: voice,
        content_mismatch: content,
    })
}

/// Two-pass mean and sample std written out longhand.
fn reference_cell(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

proptest! {
    #[test]
    fn gated_records_score_one(r in record()) {
        let g = gate_score(&r);
        if r.voice_mismatch || r.content_mismatch {
            prop_assert_eq!(g, 1);
        } else {
            prop_assert_eq!(g, r.raw_score);
        }
    }

    #[test]
    fn flipping_a_flag_never_raises_a_mean(records in prop::collection::vec(record(), 1..60), pick in any::<prop::sample::Index>(), voice in any::<bool>()) {
        let before = aggregate_mos(&records).unwrap();
        let mut flipped = records.clone();
        let i = pick.index(flipped.len());
        if voice { flipped[i].voice_mismatch = true } else { flipped[i].content_mismatch = true }
        let after = aggregate_mos(&flipped).unwrap();
        for ((role, b), (_, a)) in before.roles.iter().zip(&after.roles) {
            prop_assert!(a.mean <= b.mean + 1e-12, "{}", role);
        }
        prop_assert!(after.summary.mean <= before.summary.mean + 1e-12);
    }

    #[test]
    fn average_is_mean_of_role_means(records in prop::collection::vec(record(), 1..80)) {
        let t = aggregate_mos(&records).unwrap();
        let means: Vec<f64> = t.roles.iter().map(|(_, c)| c.mean).collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        prop_assert!((t.summary.mean - m).abs() <= 1e-12);
        for (role, cell) in &t.roles {
            let xs: Vec<f64> = records.iter().filter(|r| &r.role == role).map(|r| f64::from(gate_score(r))).collect();
            let (mean, std) = reference_cell(&xs);
            prop_assert!((cell.mean - mean).abs() < 1e-12);
            prop_assert!((cell.std - std).abs() < 1e-12);
            prop_assert_eq!(cell.n, xs.len());
            prop_assert!(cell.std >= 0.0);
        }
    }

    #[test]
    fn improvement_cells_stay_in_unit_interval(ratings in prop::collection::vec((0usize..6, 0u8..3), 1..50)) {
        let records: Vec<ImprovementRecord> = ratings.iter().map(|&(r, k)| ImprovementRecord {
            role: ROLE_ORDER[r].into(),
            system_label: "F5-TTS".into(),
            evaluator_id: "e".into(),
            rating: f64::from(k) / 2.0,
        }).collect();
        let t = aggregate_improvement(&records).unwrap();
        for (_, c) in &t.roles {
            prop_assert!((0.0..=1.0).contains(&c.mean));
        }
    }
}

#[test]
fn single_sample_std_is_zero() {
    let c = AggCell::from_samples(&[3.0]).unwrap();
    assert_eq!((c.mean, c.std, c.n), (3.0, 0.0, 1));
    assert!(AggCell::from_samples(&[]).is_err());
}

#[test]
fn roles_follow_report_order() {
    let records: Vec<MosRecord> = ["Monica", "Ross", "Gunther", "Phoebe"]
        .iter()
        .map(|r| MosRecord {
            item_id: "i".into(),
            role: r.to_string(),
            evaluator_id: "e".into(),
            raw_score: 3,
            voice_mismatch: false,
            content_mismatch: false,
        })
        .collect();
    let t = aggregate_mos(&records).unwrap();
    let order: Vec<&str> = t.roles.iter().map(|(r, _)| r.as_str()).collect();
    assert_eq!(order, ["Phoebe", "Ross", "Monica", "Gunther"]);
}
