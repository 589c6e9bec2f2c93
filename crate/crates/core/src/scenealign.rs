//! Scene boundary projection and benchmark statistics.
//!
//! Crawled scripts carry scene headers but no timing; recognized utterances
//! carry timing but no scenes. [`align_script`] matches script lines to
//! utterances with a monotone DP, and [`project_boundaries`] turns the match
//! into contiguous utterance spans per scene.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Corpus, Utterance, OTHERS};
use crate::numfmt::fixed2;

/// Cost of leaving one script line or one utterance unmatched.
pub const GAP_PENALTY: f64 = 0.4;

/// Score slack used when comparing DP alternatives.
const SCORE_EPS: f64 = 1e-9;

pub const SCENE_HEADER_PREFIX: &str = "[SCENE]";

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("script must start with a scene header")]
    MissingHeader,
    #[error("alignment was built for {expected} script lines, script has {actual}")]
    ScriptMismatch { expected: usize, actual: usize },
    #[error("no scene has a matched line")]
    NoAnchors,
}

impl AlignError {
    pub fn code(&self) -> &'static str {
        match self {
            AlignError::EmptyInput(_) => "EmptyInput",
            AlignError::MissingHeader => "MissingHeader",
            AlignError::ScriptMismatch { .. } => "ScriptMismatch",
            AlignError::NoAnchors => "NoAnchors",
        }
    }
}

// ---------------------------------------------------------------------------
// Text normalization

/// Lowercased NFKD text split into maximal runs of letters and digits.
pub fn normalize_text(s: &str) -> Vec<String> {
    let folded: String = s.nfkd().collect::<String>().to_lowercase();
    folded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Token multiset F1: `2·|a ∩ b| / (|a| + |b|)`.
pub fn line_similarity<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in a {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    2.0 * overlap as f64 / (a.len() + b.len()) as f64
}

// ---------------------------------------------------------------------------
// Script documents

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptItem {
    SceneHeader(String),
    Line { speaker: Option<String>, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptDocument {
    items: Vec<ScriptItem>,
}

/// A header and the ordinals (among script lines only) of the lines under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptScene {
    pub label: String,
    pub lines: std::ops::Range<usize>,
}

impl ScriptDocument {
    pub fn new(items: Vec<ScriptItem>) -> Result<Self, AlignError> {
        match items.first() {
            Some(ScriptItem::SceneHeader(_)) => Ok(Self { items }),
            Some(_) => Err(AlignError::MissingHeader),
            None => Err(AlignError::EmptyInput("script")),
        }
    }

    /// One item per non-blank line: `[SCENE] label`, `SPEAKER: text`, or bare text.
    pub fn parse(text: &str) -> Result<Self, AlignError> {
        let items = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| match line.strip_prefix(SCENE_HEADER_PREFIX) {
                Some(label) => ScriptItem::SceneHeader(label.trim().to_string()),
                None => parse_line(line),
            })
            .collect();
        Self::new(items)
    }

    pub fn items(&self) -> &[ScriptItem] {
        &self.items
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|item| match item {
            ScriptItem::Line { text, .. } => Some(text.as_str()),
            ScriptItem::SceneHeader(_) => None,
        })
    }

    pub fn line_count(&self) -> usize {
        self.lines().count()
    }

    pub fn scenes(&self) -> Vec<ScriptScene> {
        let mut scenes: Vec<ScriptScene> = Vec::new();
        let mut ordinal = 0;
        for item in &self.items {
            match item {
                ScriptItem::SceneHeader(label) => scenes.push(ScriptScene {
                    label: label.clone(),
                    lines: ordinal..ordinal,
                }),
                ScriptItem::Line { .. } => {
                    ordinal += 1;
                    if let Some(last) = scenes.last_mut() {
                        last.lines.end = ordinal;
                    }
                }
            }
        }
        scenes
    }
}

fn parse_line(line: &str) -> ScriptItem {
    if let Some((speaker, text)) = line.split_once(':') {
        let speaker = speaker.trim();
        let looks_like_name = !speaker.is_empty()
            && speaker.chars().count() <= 32
            && speaker.chars().next().is_some_and(char::is_uppercase)
            && speaker
                .chars()
                .all(|c| c.is_alphanumeric() || matches!(c, ' ' | '.' | '\'' | '-' | '&'));
        if looks_like_name {
            return ScriptItem::Line {
                speaker: Some(speaker.to_string()),
                text: text.trim().to_string(),
            };
        }
    }
    ScriptItem::Line {
        speaker: None,
        text: line.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Alignment

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    /// (script line ordinal, utterance index), strictly increasing in both.
    pub pairs: Vec<(usize, usize)>,
    pub skipped_lines: Vec<usize>,
    pub skipped_utterances: Vec<usize>,
    pub total_score: f64,
    pub line_count: usize,
    pub utterance_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Match,
    SkipLine,
    SkipUtterance,
}

/// Align script lines to utterances.
pub fn align_script(script: &ScriptDocument, utterances: &[Utterance]) -> Result<AlignmentMap, AlignError> {
    let lines: Vec<&str> = script.lines().collect();
    let texts: Vec<&str> = utterances.iter().map(|u| u.text.as_str()).collect();
    align_texts(&lines, &texts)
}

/// Monotone global alignment of two text sequences, maximizing the summed
/// [`line_similarity`] of matched pairs minus [`GAP_PENALTY`] per unmatched
/// item. Among equally good alignments the one that matches earliest wins:
/// at each step a match is preferred over skipping the line, which is
/// preferred over skipping the utterance.
pub fn align_texts(lines: &[&str], utterances: &[&str]) -> Result<AlignmentMap, AlignError> {
    if lines.is_empty() {
        return Err(AlignError::EmptyInput("script lines"));
    }
    if utterances.is_empty() {
        return Err(AlignError::EmptyInput("utterances"));
    }
    let line_tokens: Vec<Vec<String>> = lines.iter().map(|l| normalize_text(l)).collect();
    let utt_tokens: Vec<Vec<String>> = utterances.iter().map(|u| normalize_text(u)).collect();
    let (n, m) = (lines.len(), utterances.len());
    let sim = |i: usize, j: usize| line_similarity(&line_tokens[i], &utt_tokens[j]);

    // best[i][j]: optimal score for aligning lines[i..] with utterances[j..].
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            best[i][j] = match (i == n, j == m) {
                (true, true) => 0.0,
                (true, false) => best[i][j + 1] - GAP_PENALTY,
                (false, true) => best[i + 1][j] - GAP_PENALTY,
                (false, false) => (sim(i, j) + best[i + 1][j + 1])
                    .max(best[i + 1][j] - GAP_PENALTY)
                    .max(best[i][j + 1] - GAP_PENALTY),
            };
        }
    }

    let mut map = AlignmentMap {
        pairs: Vec::new(),
        skipped_lines: Vec::new(),
        skipped_utterances: Vec::new(),
        total_score: 0.0,
        line_count: n,
        utterance_count: m,
    };
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let target = best[i][j] - SCORE_EPS;
        let step = if i < n && j < m && sim(i, j) + best[i + 1][j + 1] >= target {
            Step::Match
        } else if i < n && best[i + 1][j] - GAP_PENALTY >= target {
            Step::SkipLine
        } else {
            Step::SkipUtterance
        };
        match step {
            Step::Match => {
                map.total_score += sim(i, j);
                map.pairs.push((i, j));
                i += 1;
                j += 1;
            }
            Step::SkipLine => {
                map.total_score -= GAP_PENALTY;
                map.skipped_lines.push(i);
                i += 1;
            }
            Step::SkipUtterance => {
                map.total_score -= GAP_PENALTY;
                map.skipped_utterances.push(j);
                j += 1;
            }
        }
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Boundary projection

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedScene {
    pub label: String,
    /// Position of the header among the script's scenes.
    pub script_scene: usize,
    pub start_index: usize,
    pub end_index: usize,
}

/// A scene with no matched line, folded into a neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnanchoredScene {
    pub script_scene: usize,
    pub label: String,
    /// Script scene index it was merged into.
    pub merged_into: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub scenes: Vec<ProjectedScene>,
    pub unanchored: Vec<UnanchoredScene>,
}

impl Projection {
    pub fn spans(&self) -> Vec<(usize, usize)> {
        self.scenes.iter().map(|s| (s.start_index, s.end_index)).collect()
    }
}

/// Contiguous utterance spans for the script's scenes.
///
/// A scene starts at the utterance matched to its first matched line and
/// ends right before the next anchored scene; the first scene always starts
/// at 0 and the last always ends at the final utterance. Scenes without any
/// matched line are merged into the preceding scene (or the following one
/// when nothing precedes them) and reported in [`Projection::unanchored`].
pub fn project_boundaries(a: &AlignmentMap, script: &ScriptDocument) -> Result<Projection, AlignError> {
    let line_count = script.line_count();
    if a.line_count != line_count {
        return Err(AlignError::ScriptMismatch {
            expected: a.line_count,
            actual: line_count,
        });
    }
    let matched: HashMap<usize, usize> = a.pairs.iter().copied().collect();
    let script_scenes = script.scenes();

    let anchors: Vec<(usize, usize)> = script_scenes
        .iter()
        .enumerate()
        .filter_map(|(k, sc)| sc.lines.clone().find_map(|l| matched.get(&l)).map(|&u| (k, u)))
        .collect();
    if anchors.is_empty() {
        return Err(AlignError::NoAnchors);
    }

    let mut scenes = Vec::with_capacity(anchors.len());
    for (pos, &(k, start)) in anchors.iter().enumerate() {
        let start = if pos == 0 { 0 } else { start };
        let end = anchors
            .get(pos + 1)
            .map_or(a.utterance_count - 1, |&(_, next)| next - 1);
        scenes.push(ProjectedScene {
            label: script_scenes[k].label.clone(),
            script_scene: k,
            start_index: start,
            end_index: end,
        });
    }

    let first_anchor = anchors[0].0;
    let mut unanchored = Vec::new();
    let mut predecessor: Option<usize> = None;
    for (k, sc) in script_scenes.iter().enumerate() {
        if anchors.iter().any(|&(ak, _)| ak == k) {
            predecessor = Some(k);
            continue;
        }
        unanchored.push(UnanchoredScene {
            script_scene: k,
            label: sc.label.clone(),
            merged_into: predecessor.unwrap_or(first_anchor),
        });
    }
    Ok(Projection { scenes, unanchored })
}

// ---------------------------------------------------------------------------
// Statistics

/// Seconds as `H:MM:SS`, rounding half up to whole seconds.
pub fn format_duration(seconds: f64) -> String {
    let total = (seconds.max(0.0) + 0.5).floor() as u64;
    format!("{}:{:02}:{:02}", total / 3600, total % 3600 / 60, total % 60)
}

/// Inverse of [`format_duration`].
pub fn parse_duration(text: &str) -> Option<f64> {
    let mut parts = text.split(':');
    let h: u64 = parts.next()?.parse().ok()?;
    let m: u64 = parts.next()?.parse().ok()?;
    let s: u64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || m >= 60 || s >= 60 {
        return None;
    }
    Some((h * 3600 + m * 60 + s) as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RoleCell {
    pub count: usize,
    pub duration_s: f64,
}

impl RoleCell {
    fn add(&mut self, other: RoleCell) {
        self.count += other.count;
        self.duration_s += other.duration_s;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRow {
    pub episode_id: String,
    /// One cell per entry of [`StatsTables::role_columns`].
    pub cells: Vec<RoleCell>,
    pub total: RoleCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneRow {
    pub episode_id: String,
    pub scene_count: usize,
    pub covered_utterances: usize,
    /// Sum over scenes of the number of distinct speakers in the span.
    pub role_sum: usize,
}

impl SceneRow {
    pub fn avg_utterances(&self) -> f64 {
        ratio(self.covered_utterances, self.scene_count)
    }

    pub fn avg_roles(&self) -> f64 {
        ratio(self.role_sum, self.scene_count)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsTables {
    /// Corpus roles in manifest order, then [`OTHERS`].
    pub role_columns: Vec<String>,
    pub utterance_rows: Vec<UtteranceRow>,
    pub utterance_all: UtteranceRow,
    pub scene_rows: Vec<SceneRow>,
    pub scene_all: SceneRow,
}

pub fn compute_stats(c: &Corpus) -> StatsTables {
    let mut role_columns: Vec<String> = c.roles.iter().map(|r| r.name.clone()).collect();
    role_columns.push(OTHERS.to_string());
    let column_of: HashMap<&str, usize> = role_columns.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let others = role_columns.len() - 1;

    let mut utterance_rows = Vec::with_capacity(c.episodes.len());
    let mut scene_rows = Vec::with_capacity(c.episodes.len());
    for episode in &c.episodes {
        let mut cells = vec![RoleCell::default(); role_columns.len()];
        let mut total = RoleCell::default();
        for u in &episode.utterances {
            let cell = RoleCell {
                count: 1,
                duration_s: u.duration_s(),
            };
            cells[column_of.get(u.role.as_str()).copied().unwrap_or(others)].add(cell);
            total.add(cell);
        }
        utterance_rows.push(UtteranceRow {
            episode_id: episode.id.clone(),
            cells,
            total,
        });

        let n = episode.utterances.len();
        let mut row = SceneRow {
            episode_id: episode.id.clone(),
            scene_count: episode.scenes.len(),
            covered_utterances: 0,
            role_sum: 0,
        };
        for scene in &episode.scenes {
            if scene.start_index > scene.end_index || scene.start_index >= n {
                continue;
            }
            let span = &episode.utterances[scene.start_index..=scene.end_index.min(n - 1)];
            row.covered_utterances += span.len();
            row.role_sum += span.iter().map(|u| u.role.as_str()).collect::<BTreeSet<_>>().len();
        }
        scene_rows.push(row);
    }

    let mut utterance_all = UtteranceRow {
        episode_id: "ALL".into(),
        cells: vec![RoleCell::default(); role_columns.len()],
        total: RoleCell::default(),
    };
    for row in &utterance_rows {
        for (acc, cell) in utterance_all.cells.iter_mut().zip(&row.cells) {
            acc.add(*cell);
        }
        utterance_all.total.add(row.total);
    }
    let scene_all = SceneRow {
        episode_id: "ALL".into(),
        scene_count: scene_rows.iter().map(|r| r.scene_count).sum(),
        covered_utterances: scene_rows.iter().map(|r| r.covered_utterances).sum(),
        role_sum: scene_rows.iter().map(|r| r.role_sum).sum(),
    };

    StatsTables {
        role_columns,
        utterance_rows,
        utterance_all,
        scene_rows,
        scene_all,
    }
}

pub const SCENE_HEADER: [&str; 4] = [
    "Episode",
    "Scene Num",
    "Avg Utterances per Scene",
    "Avg Roles per Scene",
];

impl StatsTables {
    pub fn utterance_header(&self) -> Vec<String> {
        let mut header = vec!["Episode".to_string()];
        for role in self.role_columns.iter().map(String::as_str).chain(["TOTAL"]) {
            header.push(format!("{role} num"));
            header.push(format!("{role} duration"));
        }
        header
    }

    fn utterance_record(row: &UtteranceRow) -> Vec<String> {
        let mut record = vec![row.episode_id.clone()];
        for cell in row.cells.iter().chain([&row.total]) {
            record.push(cell.count.to_string());
            record.push(format_duration(cell.duration_s));
        }
        record
    }

    fn scene_record(row: &SceneRow) -> Vec<String> {
        vec![
            row.episode_id.clone(),
            row.scene_count.to_string(),
            fixed2(row.avg_utterances()),
            fixed2(row.avg_roles()),
        ]
    }

    pub fn utterance_records(&self) -> Vec<Vec<String>> {
        self.utterance_rows
            .iter()
            .chain([&self.utterance_all])
            .map(Self::utterance_record)
            .collect()
    }

    pub fn scene_records(&self) -> Vec<Vec<String>> {
        self.scene_rows
            .iter()
            .chain([&self.scene_all])
            .map(Self::scene_record)
            .collect()
    }

    pub fn utterance_csv(&self) -> String {
        to_csv(&self.utterance_header(), &self.utterance_records())
    }

    pub fn scene_csv(&self) -> String {
        let header: Vec<String> = SCENE_HEADER.iter().map(|s| s.to_string()).collect();
        to_csv(&header, &self.scene_records())
    }

    pub fn utterance_table(&self) -> String {
        aligned_table(&self.utterance_header(), &self.utterance_records())
    }

    pub fn scene_table(&self) -> String {
        let header: Vec<String> = SCENE_HEADER.iter().map(|s| s.to_string()).collect();
        aligned_table(&header, &self.scene_records())
    }
}

pub(crate) fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("csv to memory");
    for row in rows {
        w.write_record(row).expect("csv to memory");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv output is utf-8")
}

/// Left-aligned first column, right-aligned value columns, two-space gutters.
pub(crate) fn aligned_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let mut line = String::new();
        for (i, (cell, w)) in row.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(line, "{cell:<w$}");
            } else {
                let _ = write!(line, "  {cell:>w$}");
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Episode, RoleProfile, Scene};

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("Hey!! How-you doin'?"), ["hey", "how", "you", "doin"]);
        assert!(normalize_text("").is_empty());
        assert_eq!(
            normalize_text("So, um, do you think he's doing any better"),
            ["so", "um", "do", "you", "think", "he", "s", "doing", "any", "better"]
        );
        // Compatibility decomposition folds full-width forms and ligatures.
        assert_eq!(normalize_text("ＰＩＶＯＴ ﬁne"), ["pivot", "fine"]);
    }

    #[test]
    fn similarity_examples() {
        let five = ["a", "b", "c", "d", "e"];
        assert_eq!(line_similarity(&five, &five), 1.0);
        assert_eq!(line_similarity(&["a", "b"], &["c"]), 0.0);
        assert_eq!(line_similarity(&["hey", "how", "you"], &["hey", "you"]), 0.8);
        let empty: [&str; 0] = [];
        assert_eq!(line_similarity(&empty, &empty), 1.0);
        assert_eq!(line_similarity(&empty, &["x"]), 0.0);
        // Multiset, not set: a repeated token only overlaps as often as it occurs in both.
        assert_eq!(line_similarity(&["no", "no", "no"], &["no"]), 0.5);
    }

    #[test]
    fn identity_alignment() {
        let texts = ["Hi there.", "How you doin'?", "Pivot!", "We were on a break."];
        let map = align_texts(&texts, &texts).unwrap();
        assert_eq!(map.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!(map.skipped_lines.is_empty() && map.skipped_utterances.is_empty());
        assert_eq!(map.total_score, 4.0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert_eq!(
            align_texts(&[], &["x"]).unwrap_err(),
            AlignError::EmptyInput("script lines")
        );
        assert_eq!(
            align_texts(&["x"], &[]).unwrap_err(),
            AlignError::EmptyInput("utterances")
        );
    }

    #[test]
    fn script_parsing() {
        let doc = ScriptDocument::parse(
            "[SCENE] Central Perk\nMonica: There's nothing to tell!\n\nJust a line\n[SCENE]   Monica's apartment\nRoss: Hi.\n",
        )
        .unwrap();
        assert_eq!(doc.line_count(), 3);
        assert_eq!(
            doc.items()[1],
            ScriptItem::Line {
                speaker: Some("Monica".into()),
                text: "There's nothing to tell!".into()
            }
        );
        assert_eq!(
            doc.items()[2],
            ScriptItem::Line {
                speaker: None,
                text: "Just a line".into()
            }
        );
        let scenes = doc.scenes();
        assert_eq!(scenes[0].lines, 0..2);
        assert_eq!(scenes[1].label, "Monica's apartment");
        assert_eq!(scenes[1].lines, 2..3);
        assert_eq!(
            ScriptDocument::parse("Ross: Hi.").unwrap_err(),
            AlignError::MissingHeader
        );
        assert_eq!(
            ScriptDocument::parse("\n\n").unwrap_err(),
            AlignError::EmptyInput("script")
        );
    }

    fn map_of(pairs: Vec<(usize, usize)>, lines: usize, utts: usize) -> AlignmentMap {
        AlignmentMap {
            pairs,
            skipped_lines: vec![],
            skipped_utterances: vec![],
            total_score: 0.0,
            line_count: lines,
            utterance_count: utts,
        }
    }

    #[test]
    fn projection_two_scenes() {
        let doc = ScriptDocument::parse("[SCENE] A\na\nb\nc\n[SCENE] B\nd\ne\nf").unwrap();
        let map = map_of((0..6).map(|i| (i, i)).collect(), 6, 6);
        let p = project_boundaries(&map, &doc).unwrap();
        assert_eq!(p.spans(), vec![(0, 2), (3, 5)]);
        assert!(p.unanchored.is_empty());
    }

    #[test]
    fn unanchored_scene_merges_backward() {
        let doc = ScriptDocument::parse("[SCENE] A\na\nb\n[SCENE] B\nc\n[SCENE] C\nd\ne").unwrap();
        // Line 2 ("c") was skipped.
        let map = map_of(vec![(0, 0), (1, 1), (3, 2), (4, 3)], 5, 4);
        let p = project_boundaries(&map, &doc).unwrap();
        assert_eq!(p.spans(), vec![(0, 1), (2, 3)]);
        assert_eq!(
            p.unanchored,
            vec![UnanchoredScene {
                script_scene: 1,
                label: "B".into(),
                merged_into: 0
            }]
        );
    }

    #[test]
    fn leading_unanchored_scene_merges_forward() {
        let doc = ScriptDocument::parse("[SCENE] A\na\n[SCENE] B\nb\nc").unwrap();
        let map = map_of(vec![(1, 1), (2, 2)], 3, 3);
        let p = project_boundaries(&map, &doc).unwrap();
        assert_eq!(p.spans(), vec![(0, 2)]);
        assert_eq!(p.unanchored[0].merged_into, 1);
    }

    #[test]
    fn projection_checks_script_shape() {
        let doc = ScriptDocument::parse("[SCENE] A\na").unwrap();
        assert!(matches!(
            project_boundaries(&map_of(vec![(0, 0)], 2, 1), &doc),
            Err(AlignError::ScriptMismatch { .. })
        ));
        assert_eq!(
            project_boundaries(&map_of(vec![], 1, 1), &doc),
            Err(AlignError::NoAnchors)
        );
    }

    #[test]
    fn durations() {
        assert_eq!(format_duration(853.0), "0:14:13");
        assert_eq!(format_duration(0.0), "0:00:00");
        assert_eq!(format_duration(18912.0), "5:15:12");
        assert_eq!(format_duration(59.5), "0:01:00");
        assert_eq!(format_duration(59.49), "0:00:59");
        assert_eq!(format_duration(36_000.0), "10:00:00");
        assert_eq!(parse_duration("5:15:12"), Some(18912.0));
        assert_eq!(parse_duration("0:61:00"), None);
    }

    fn utt(i: usize, role: &str) -> Utterance {
        Utterance {
            id: format!("u{i}"),
            episode_id: "E".into(),
            role: role.into(),
            text: String::new(),
            audio: String::new(),
            start_s: i as f64,
            end_s: i as f64 + 0.5,
        }
    }

    #[test]
    fn stats_hand_arithmetic() {
        let roles = ["A", "B", "A", "A", "A", "A", "A", "A"];
        let utterances: Vec<_> = roles.iter().enumerate().map(|(i, r)| utt(i, r)).collect();
        let scenes = vec![
            Scene {
                id: "s0".into(),
                episode_id: "E".into(),
                start_index: 0,
                end_index: 2,
                description: String::new(),
            },
            Scene {
                id: "s1".into(),
                episode_id: "E".into(),
                start_index: 3,
                end_index: 7,
                description: String::new(),
            },
        ];
        let c = Corpus::new(
            vec![Episode {
                id: "E".into(),
                utterances,
                scenes,
            }],
            vec![
                RoleProfile {
                    name: "A".into(),
                    profile: String::new(),
                },
                RoleProfile {
                    name: "B".into(),
                    profile: String::new(),
                },
            ],
        );
        let stats = compute_stats(&c);
        let row = &stats.scene_rows[0];
        assert_eq!(row.scene_count, 2);
        assert_eq!(fixed2(row.avg_utterances()), "4.00");
        assert_eq!(fixed2(row.avg_roles()), "1.50");
        assert_eq!(stats.role_columns, ["A", "B", "OTHERS"]);
        assert_eq!(stats.utterance_rows[0].cells[0].count, 7);
        assert_eq!(stats.utterance_rows[0].total.count, 8);
        assert_eq!(stats.utterance_rows[0].total.duration_s, 4.0);
        assert!(stats
            .scene_csv()
            .starts_with("Episode,Scene Num,Avg Utterances per Scene,Avg Roles per Scene\n"));
        assert!(stats
            .utterance_csv()
            .lines()
            .last()
            .unwrap()
            .starts_with("ALL,7,0:00:04,1,0:00:01,0,0:00:00,8,0:00:04"));
    }
}
