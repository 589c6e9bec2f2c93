#![allow(dead_code)]

pub mod oracles;
pub mod server;

use std::path::{Path, PathBuf};

use rolecast::corpus::{Corpus, Episode, RoleProfile, Scene, Utterance};
use rolecast::fixtures::{self, DemoSpec, MAIN_ROLES, OTHERS};

/// Stats columns: the six main roles, then OTHERS.
pub const COLUMNS: [&str; 7] = ["Rachel", "Monica", "Phoebe", "Joey", "Chandler", "Ross", OTHERS];

/// Per-episode (count, duration) cells for the seven role columns plus TOTAL.
#[rustfmt::skip]
pub const UTTERANCE_TABLE: [(&str, [(usize, &str); 8]); 24] = [
    ("SE01_01", [(86, "0:03:15"), (82, "0:03:08"), (22, "0:00:54"), (39, "0:01:42"), (33, "0:01:23"), (63, "0:02:45"), (25, "0:01:07"), (350, "0:14:13")]),
    ("SE01_02", [(56, "0:02:36"), (37, "0:01:15"), (21, "0:00:44"), (11, "0:00:23"), (29, "0:01:10"), (101, "0:04:16"), (97, "0:03:44"), (352, "0:14:09")]),
    ("SE01_03", [(32, "0:01:12"), (76, "0:02:36"), (65, "0:02:20"), (28, "0:01:04"), (72, "0:02:37"), (53, "0:01:54"), (39, "0:01:31"), (365, "0:13:14")]),
    ("SE01_04", [(81, "0:03:16"), (65, "0:02:27"), (47, "0:01:52"), (36, "0:01:15"), (49, "0:01:55"), (57, "0:02:36"), (36, "0:01:23"), (371, "0:14:44")]),
    ("SE01_05", [(48, "0:02:01"), (40, "0:01:44"), (29, "0:00:57"), (58, "0:02:23"), (50, "0:01:51"), (73, "0:03:30"), (48, "0:02:05"), (346, "0:14:31")]),
    ("SE01_06", [(22, "0:00:57"), (54, "0:02:12"), (22, "0:00:48"), (52, "0:02:15"), (114, "0:04:22"), (32, "0:01:28"), (52, "0:02:02"), (348, "0:14:04")]),
    ("SE01_07", [(49, "0:02:00"), (21, "0:00:43"), (44, "0:01:52"), (38, "0:01:26"), (61, "0:02:47"), (71, "0:03:04"), (27, "0:00:52"), (311, "0:12:45")]),
    ("SE01_08", [(23, "0:01:00"), (45, "0:01:34"), (27, "0:00:59"), (15, "0:00:31"), (60, "0:02:09"), (75, "0:03:07"), (94, "0:03:41"), (339, "0:13:02")]),
    ("SE01_09", [(64, "0:02:28"), (74, "0:02:45"), (31, "0:01:13"), (43, "0:01:28"), (54, "0:02:07"), (65, "0:02:43"), (34, "0:01:20"), (365, "0:14:04")]),
    ("SE01_10", [(32, "0:01:28"), (22, "0:00:50"), (58, "0:02:21"), (20, "0:00:46"), (54, "0:01:54"), (53, "0:02:10"), (77, "0:03:20"), (316, "0:12:49")]),
    ("SE01_11", [(28, "0:01:03"), (48, "0:01:46"), (49, "0:01:54"), (44, "0:01:41"), (53, "0:01:46"), (78, "0:02:43"), (66, "0:02:23"), (366, "0:13:15")]),
    ("SE01_12", [(49, "0:02:04"), (38, "0:01:29"), (49, "0:01:51"), (36, "0:01:26"), (39, "0:01:22"), (71, "0:02:45"), (30, "0:01:18"), (312, "0:12:14")]),
    ("SE01_13", [(26, "0:01:15"), (15, "0:00:30"), (27, "0:01:16"), (52, "0:02:12"), (41, "0:01:35"), (14, "0:00:41"), (106, "0:05:01"), (281, "0:12:30")]),
    ("SE01_14", [(19, "0:00:52"), (20, "0:00:50"), (17, "0:00:50"), (32, "0:01:14"), (51, "0:01:55"), (53, "0:02:31"), (83, "0:03:49"), (275, "0:12:02")]),
    ("SE01_15", [(25, "0:00:57"), (44, "0:02:04"), (39, "0:01:34"), (32, "0:01:15"), (70, "0:02:55"), (35, "0:01:32"), (24, "0:01:01"), (269, "0:11:19")]),
    ("SE01_16", [(27, "0:01:08"), (13, "0:00:36"), (41, "0:02:03"), (22, "0:01:01"), (59, "0:02:34"), (36, "0:01:39"), (75, "0:03:17"), (273, "0:12:17")]),
    ("SE01_17", [(54, "0:02:05"), (63, "0:02:40"), (33, "0:01:29"), (30, "0:01:13"), (25, "0:01:04"), (50, "0:02:12"), (102, "0:03:56"), (357, "0:14:38")]),
    ("SE01_18", [(84, "0:03:42"), (38, "0:01:31"), (34, "0:01:25"), (21, "0:00:55"), (33, "0:01:16"), (59, "0:02:18"), (9, "0:00:20"), (278, "0:11:27")]),
    ("SE01_19", [(91, "0:04:04"), (35, "0:01:21"), (18, "0:00:45"), (19, "0:00:51"), (27, "0:01:06"), (88, "0:03:58"), (40, "0:01:38"), (318, "0:13:43")]),
    ("SE01_20", [(85, "0:03:51"), (30, "0:01:13"), (21, "0:00:48"), (34, "0:01:32"), (62, "0:02:32"), (22, "0:01:05"), (69, "0:02:57"), (323, "0:13:58")]),
    ("SE01_21", [(34, "0:01:26"), (64, "0:03:03"), (11, "0:00:34"), (21, "0:00:57"), (25, "0:01:10"), (51, "0:02:35"), (67, "0:03:09"), (273, "0:12:53")]),
    ("SE01_22", [(27, "0:01:05"), (50, "0:02:16"), (53, "0:02:07"), (16, "0:00:38"), (50, "0:02:03"), (41, "0:01:42"), (40, "0:01:53"), (277, "0:11:44")]),
    ("SE01_23", [(24, "0:01:02"), (25, "0:00:55"), (35, "0:01:40"), (34, "0:01:28"), (22, "0:00:57"), (68, "0:02:44"), (102, "0:04:23"), (310, "0:13:09")]),
    ("SE01_24", [(64, "0:02:59"), (35, "0:01:39"), (19, "0:00:54"), (62, "0:02:30"), (28, "0:01:15"), (36, "0:01:34"), (34, "0:01:38"), (278, "0:12:28")]),
];

#[rustfmt::skip]
pub const UTTERANCE_ALL: [(usize, &str); 8] = [
    (1130, "0:47:47"), (1034, "0:41:06"), (812, "0:33:09"), (795, "0:32:06"), (1161, "0:45:43"), (1345, "0:57:31"), (1376, "0:57:50"), (7653, "5:15:12"),
];

/// (episode, scene count, avg utterances per scene, avg roles per scene) as printed.
#[rustfmt::skip]
pub const SCENE_TABLE: [(&str, usize, f64, f64); 24] = [
    ("SE01_01", 14, 17.29, 3.93),
    ("SE01_02", 8, 29.75, 5.38),
    ("SE01_03", 13, 20.0, 4.85),
    ("SE01_04", 16, 15.75, 4.19),
    ("SE01_05", 16, 14.94, 3.31),
    ("SE01_06", 9, 24.33, 4.78),
    ("SE01_07", 21, 11.14, 2.95),
    ("SE01_08", 10, 16.9, 4.50),
    ("SE01_09", 12, 19.08, 3.92),
    ("SE01_10", 8, 29.0, 6.00),
    ("SE01_11", 12, 23.92, 4.50),
    ("SE01_12", 15, 17.33, 4.33),
    ("SE01_13", 13, 18.69, 4.31),
    ("SE01_14", 17, 11.12, 3.41),
    ("SE01_15", 14, 17.43, 3.43),
    ("SE01_16", 14, 19.5, 5.07),
    ("SE01_17", 14, 20.14, 4.14),
    ("SE01_18", 8, 33.38, 6.25),
    ("SE01_19", 8, 31.38, 5.12),
    ("SE01_20", 12, 20.33, 4.92),
    ("SE01_21", 15, 14.07, 4.00),
    ("SE01_22", 12, 21.42, 4.00),
    ("SE01_23", 21, 12.76, 4.1),
    ("SE01_24", 11, 23.91, 4.00),
];

/// `H:MM:SS` to seconds, independent of the library's parser.
pub fn hms(text: &str) -> u64 {
    let parts: Vec<u64> = text.split(':').map(|p| p.parse().unwrap()).collect();
    parts[0] * 3600 + parts[1] * 60 + parts[2]
}

pub fn profiles() -> Vec<RoleProfile> {
    MAIN_ROLES
        .iter()
        .map(|r| RoleProfile {
            name: r.to_string(),
            profile: format!("{r} profile."),
        })
        .collect()
}

fn split_even(total: u64, parts: usize) -> Vec<u64> {
    let base = total / parts as u64;
    let extra = (total % parts as u64) as usize;
    (0..parts).map(|i| base + u64::from(i < extra)).collect()
}

/// A corpus whose per-episode cells reproduce the utterance table.
///
/// Each role's printed duration is nudged by the same fraction of a second
/// so that the role cells still round to the printed values while summing
/// exactly to the printed episode total. Speakers are interleaved round
/// robin; one scene covers each episode.
pub fn utterance_table_corpus() -> Corpus {
    let mut episodes = Vec::new();
    for (eid, cells) in UTTERANCE_TABLE {
        let total_ms = hms(cells[7].1) * 1000;
        let printed_ms: u64 = cells[..7].iter().map(|(_, d)| hms(d) * 1000).sum();
        let drift = total_ms as i64 - printed_ms as i64;
        assert!(drift.abs() < 3500, "{eid}: drift {drift} ms");
        let mut role_ms: Vec<u64> = cells[..7]
            .iter()
            .map(|(_, d)| (hms(d) as i64 * 1000 + drift / 7) as u64)
            .collect();
        let fix = total_ms as i64 - role_ms.iter().sum::<u64>() as i64;
        role_ms[0] = (role_ms[0] as i64 + fix) as u64;

        let mut queues: Vec<Vec<u64>> = cells[..7]
            .iter()
            .zip(&role_ms)
            .map(|((n, _), ms)| {
                let mut v = split_even(*ms, *n);
                v.reverse();
                v
            })
            .collect();
        let mut utterances = Vec::new();
        let mut clock_ms = 0u64;
        while queues.iter().any(|q| !q.is_empty()) {
            for (col, q) in queues.iter_mut().enumerate() {
                if let Some(ms) = q.pop() {
                    let id = format!("{eid}_{:04}", utterances.len());
                    utterances.push(Utterance {
                        audio: format!("audio/{id}.wav"),
                        id,
                        episode_id: eid.to_string(),
                        role: COLUMNS[col].to_string(),
                        text: "line".into(),
                        start_s: clock_ms as f64 / 1000.0,
                        end_s: (clock_ms + ms) as f64 / 1000.0,
                    });
                    clock_ms += ms + 250;
                }
            }
        }
        let n = utterances.len();
        episodes.push(Episode {
            id: eid.to_string(),
            utterances,
            scenes: vec![Scene {
                id: format!("{eid}_S01"),
                episode_id: eid.to_string(),
                start_index: 0,
                end_index: n - 1,
                description: "whole episode".into(),
            }],
        });
    }
    Corpus::new(episodes, profiles())
}

/// Utterances and distinct-role totals implied by a printed scene row.
pub fn scene_row_totals(scenes: usize, avg_utt: f64, avg_roles: f64) -> (usize, usize) {
    (
        (scenes as f64 * avg_utt).round() as usize,
        (scenes as f64 * avg_roles).round() as usize,
    )
}

/// A corpus whose scene structure reproduces the scene table: per episode
/// the printed scene count, `round(count * avg)` utterances and
/// `round(count * avg_roles)` distinct speakers summed over scenes.
pub fn scene_table_corpus() -> Corpus {
    let mut episodes = Vec::new();
    for (eid, n_scenes, avg_utt, avg_roles) in SCENE_TABLE {
        let (n_utt, n_roles) = scene_row_totals(n_scenes, avg_utt, avg_roles);
        let sizes = split_even(n_utt as u64, n_scenes);
        let role_counts = split_even(n_roles as u64, n_scenes);
        let mut utterances = Vec::new();
        let mut scenes = Vec::new();
        for (s, (size, roles)) in sizes.iter().zip(&role_counts).enumerate() {
            let (size, roles) = (*size as usize, *roles as usize);
            assert!(roles >= 1 && roles <= size.min(COLUMNS.len()), "{eid} scene {s}");
            let start = utterances.len();
            for k in 0..size {
                let id = format!("{eid}_{:04}", utterances.len());
                let t = utterances.len() as f64;
                utterances.push(Utterance {
                    audio: format!("audio/{id}.wav"),
                    id,
                    episode_id: eid.to_string(),
                    role: COLUMNS[k % roles].to_string(),
                    text: "line".into(),
                    start_s: t,
                    end_s: t + 0.5,
                });
            }
            scenes.push(Scene {
                id: format!("{eid}_S{:02}", s + 1),
                episode_id: eid.to_string(),
                start_index: start,
                end_index: utterances.len() - 1,
                description: format!("scene {}", s + 1),
            });
        }
        episodes.push(Episode {
            id: eid.to_string(),
            utterances,
            scenes,
        });
    }
    Corpus::new(episodes, profiles())
}

/// The demo corpus written to a fresh directory.
pub struct DemoDir {
    pub dir: tempfile::TempDir,
    pub corpus: Corpus,
    pub spec: DemoSpec,
}

impl DemoDir {
    pub fn new(spec: DemoSpec) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = fixtures::write_demo(dir.path(), &spec).unwrap();
        Self { dir, corpus, spec }
    }

    pub fn manifest(&self) -> PathBuf {
        self.dir.path().join("manifest.json")
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }
}

/// First (scene, position, role) whose target is a main role with at least
/// `min_turns` preceding turns in its scene.
pub fn find_target(c: &Corpus, min_turns: usize) -> (String, usize, String) {
    for ep in &c.episodes {
        for sc in &ep.scenes {
            for pos in min_turns..sc.len() {
                let u = &ep.utterances[sc.start_index + pos];
                if u.role != OTHERS {
                    return (sc.id.clone(), pos, u.role.clone());
                }
            }
        }
    }
    panic!("no target with {min_turns} preceding turns");
}
