//! Subjective-score aggregation: gated RP-MOS, the 1 / 0.5 / 0 improvement
//! protocol and ablation deltas, rendered as fixed-layout tables.
//!
//! Aggregation runs in full precision. Rounding to two decimals (half-even)
//! happens only when a cell is displayed.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::numfmt::{fixed2, mean_pm_std};
use crate::scenealign::{aligned_table, to_csv};

/// Report column order for the six main roles.
pub const ROLE_ORDER: [&str; 6] = ["Phoebe", "Joey", "Chandler", "Rachel", "Ross", "Monica"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("role sets differ: only in full {only_full:?}, only in ablated {only_ablated:?}")]
    RoleSetMismatch {
        only_full: Vec<String>,
        only_ablated: Vec<String>,
    },
    #[error("row `{row}` has no value for column `{column}`")]
    IncompleteGrid { row: String, column: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::EmptyInput => "EmptyInput",
            EvalError::InvalidRecord { .. } => "InvalidRecord",
            EvalError::RoleSetMismatch { .. } => "RoleSetMismatch",
            EvalError::IncompleteGrid { .. } => "IncompleteGrid",
            EvalError::Csv(_) => "ParseError",
            EvalError::Io { .. } => "IoError",
        }
    }
}

fn flexible_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("expected a boolean, got `{other}`"))),
    }
}

/// One RP-MOS rating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MosRecord {
    pub item_id: String,
    pub role: String,
    pub evaluator_id: String,
    pub raw_score: u8,
    #[serde(deserialize_with = "flexible_bool")]
    pub voice_mismatch: bool,
    #[serde(deserialize_with = "flexible_bool")]
    pub content_mismatch: bool,
}

impl MosRecord {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=5).contains(&self.raw_score) {
            return Err(format!("raw_score {} is outside 1..=5", self.raw_score));
        }
        if self.role.is_empty() {
            return Err("empty role".into());
        }
        Ok(())
    }
}

/// A rater's verdict against a baseline: 1 better, 0.5 equal, 0 worse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRecord {
    pub role: String,
    #[serde(rename = "system")]
    pub system_label: String,
    pub evaluator_id: String,
    pub rating: f64,
}

impl ImprovementRecord {
    pub fn validate(&self) -> Result<(), String> {
        if ![0.0, 0.5, 1.0].contains(&self.rating) {
            return Err(format!("rating {} is not one of 0, 0.5, 1", self.rating));
        }
        if self.role.is_empty() {
            return Err("empty role".into());
        }
        Ok(())
    }
}

/// Effective score: any mismatch flag forces the floor of 1.
pub fn gate_score(r: &MosRecord) -> u8 {
    if r.voice_mismatch || r.content_mismatch {
        1
    } else {
        r.raw_score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggCell {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl AggCell {
    /// Mean and sample standard deviation (n − 1; 0 for a single sample).
    pub fn from_samples(xs: &[f64]) -> Result<Self, EvalError> {
        if xs.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Ok(Self { mean, std, n })
    }

    pub fn display(&self) -> String {
        mean_pm_std(self.mean, self.std)
    }
}

impl fmt::Display for AggCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// Per-role cells plus the summary (Average / ALL) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoleTable {
    /// Main roles in [`ROLE_ORDER`] first, any others after in name order.
    pub roles: Vec<(String, AggCell)>,
    pub summary: AggCell,
}

impl RoleTable {
    pub fn cell(&self, role: &str) -> Option<&AggCell> {
        self.roles.iter().find(|(r, _)| r == role).map(|(_, c)| c)
    }

    pub fn means(&self) -> Vec<(String, f64)> {
        self.roles.iter().map(|(r, c)| (r.clone(), c.mean)).collect()
    }

    /// A report row over `columns`, followed by the summary cell.
    pub fn to_row(&self, label: &str, columns: &[&str]) -> ReportRow {
        let mut cells: Vec<Option<AggCell>> = columns.iter().map(|c| self.cell(c).copied()).collect();
        cells.push(Some(self.summary));
        ReportRow {
            label: label.to_string(),
            cells,
        }
    }
}

fn role_rank(role: &str) -> (usize, &str) {
    (
        ROLE_ORDER.iter().position(|r| *r == role).unwrap_or(ROLE_ORDER.len()),
        role,
    )
}

/// Summary cell over per-role means: their mean and sample std.
pub fn summarize_means(means: &[f64]) -> Result<AggCell, EvalError> {
    AggCell::from_samples(means)
}

fn table_from_groups(groups: HashMap<String, Vec<f64>>) -> Result<RoleTable, EvalError> {
    if groups.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut roles = groups
        .into_iter()
        .map(|(role, xs)| AggCell::from_samples(&xs).map(|c| (role, c)))
        .collect::<Result<Vec<_>, _>>()?;
    roles.sort_by(|(a, _), (b, _)| role_rank(a).cmp(&role_rank(b)));
    let means: Vec<f64> = roles.iter().map(|(_, c)| c.mean).collect();
    let summary = summarize_means(&means)?;
    Ok(RoleTable { roles, summary })
}

pub fn aggregate_mos(records: &[MosRecord]) -> Result<RoleTable, EvalError> {
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    for (index, r) in records.iter().enumerate() {
        r.validate()
            .map_err(|message| EvalError::InvalidRecord { index, message })?;
        groups.entry(r.role.clone()).or_default().push(f64::from(gate_score(r)));
    }
    table_from_groups(groups)
}

pub fn aggregate_improvement(records: &[ImprovementRecord]) -> Result<RoleTable, EvalError> {
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    for (index, r) in records.iter().enumerate() {
        r.validate()
            .map_err(|message| EvalError::InvalidRecord { index, message })?;
        groups.entry(r.role.clone()).or_default().push(r.rating);
    }
    table_from_groups(groups)
}

/// One table per baseline system, in order of first appearance.
pub fn aggregate_improvement_by_system(records: &[ImprovementRecord]) -> Result<Vec<(String, RoleTable)>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.system_label.as_str()) {
            order.push(&r.system_label);
        }
    }
    order
        .into_iter()
        .map(|system| {
            let subset: Vec<ImprovementRecord> = records.iter().filter(|r| r.system_label == system).cloned().collect();
            aggregate_improvement(&subset).map(|t| (system.to_string(), t))
        })
        .collect()
}

/// Mean ± sample std of the per-role differences `ablated − full`.
pub fn ablation_delta(full: &[(String, f64)], ablated: &[(String, f64)]) -> Result<AggCell, EvalError> {
    let full_map: HashMap<&str, f64> = full.iter().map(|(r, m)| (r.as_str(), *m)).collect();
    let abl_map: HashMap<&str, f64> = ablated.iter().map(|(r, m)| (r.as_str(), *m)).collect();
    let full_roles: BTreeSet<&str> = full_map.keys().copied().collect();
    let abl_roles: BTreeSet<&str> = abl_map.keys().copied().collect();
    if full_roles != abl_roles || full_map.len() != full.len() || abl_map.len() != ablated.len() {
        return Err(EvalError::RoleSetMismatch {
            only_full: full_roles.difference(&abl_roles).map(|s| s.to_string()).collect(),
            only_ablated: abl_roles.difference(&full_roles).map(|s| s.to_string()).collect(),
        });
    }
    let mut roles: Vec<&str> = full_roles.into_iter().collect();
    roles.sort_by_key(|r| role_rank(r));
    let deltas: Vec<f64> = roles.iter().map(|r| abl_map[r] - full_map[r]).collect();
    AggCell::from_samples(&deltas)
}

// ---------------------------------------------------------------------------
// CSV input

fn read_records<T: for<'de> Deserialize<'de>>(reader: impl Read) -> Result<Vec<T>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| EvalError::InvalidRecord {
                index: i,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Columns `item_id, role, evaluator_id, raw_score, voice_mismatch, content_mismatch`.
pub fn read_mos_csv(reader: impl Read) -> Result<Vec<MosRecord>, EvalError> {
    read_records(reader)
}

/// Columns `role, system, evaluator_id, rating`.
pub fn read_improvement_csv(reader: impl Read) -> Result<Vec<ImprovementRecord>, EvalError> {
    read_records(reader)
}

pub fn open_csv(path: &Path) -> Result<std::fs::File, EvalError> {
    std::fs::File::open(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Systems × roles, then Average.
    Mos,
    /// Baselines × roles, then ALL.
    Improvement,
    /// Configurations × one relative RP-MOS column.
    Ablation,
}

impl Layout {
    pub fn header(self) -> Vec<String> {
        let mut h = vec![match self {
            Layout::Mos | Layout::Improvement => "System".to_string(),
            Layout::Ablation => "Configuration".to_string(),
        }];
        match self {
            Layout::Mos | Layout::Improvement => {
                h.extend(ROLE_ORDER.iter().map(|r| r.to_string()));
                h.push(if self == Layout::Mos { "Average" } else { "ALL" }.to_string());
            }
            Layout::Ablation => h.push("RP-MOS".to_string()),
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub cells: Vec<Option<AggCell>>,
}

/// Which extreme counts as best when marking columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Best {
    Highest,
    Lowest,
}

pub const BEST_MARKER: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub csv: String,
}

/// Render a complete grid. With `best` set, the best displayed mean in each
/// column (ties included) gets [`BEST_MARKER`] appended in the text table.
pub fn render_report(rows: &[ReportRow], layout: Layout, best: Option<Best>) -> Result<Report, EvalError> {
    let header = layout.header();
    let columns = &header[1..];
    let mut grid: Vec<Vec<AggCell>> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut cells = Vec::with_capacity(columns.len());
        for (i, column) in columns.iter().enumerate() {
            match row.cells.get(i).copied().flatten() {
                Some(c) => cells.push(c),
                None => {
                    return Err(EvalError::IncompleteGrid {
                        row: row.label.clone(),
                        column: column.clone(),
                    })
                }
            }
        }
        if row.cells.len() > columns.len() {
            return Err(EvalError::IncompleteGrid {
                row: row.label.clone(),
                column: format!("<extra column {}>", columns.len() + 1),
            });
        }
        grid.push(cells);
    }

    let mut marked = vec![vec![false; columns.len()]; rows.len()];
    if let (Some(best), false) = (best, rows.is_empty()) {
        for col in 0..columns.len() {
            // Compare displayed values so that visually equal cells tie.
            let shown: Vec<f64> = grid
                .iter()
                .map(|r| fixed2(r[col].mean).parse().unwrap_or(f64::NAN))
                .collect();
            let target = match best {
                Best::Highest => shown.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Best::Lowest => shown.iter().copied().fold(f64::INFINITY, f64::min),
            };
            for (r, v) in shown.iter().enumerate() {
                marked[r][col] = *v == target;
            }
        }
    }

    let mut text_rows = Vec::with_capacity(rows.len());
    let mut csv_rows = Vec::with_capacity(rows.len());
    for (r, (row, cells)) in rows.iter().zip(&grid).enumerate() {
        let mut t = vec![row.label.clone()];
        let mut c = vec![row.label.clone()];
        for (col, cell) in cells.iter().enumerate() {
            let shown = cell.display();
            c.push(shown.clone());
            t.push(if marked[r][col] {
                format!("{shown}{BEST_MARKER}")
            } else {
                shown
            });
        }
        text_rows.push(t);
        csv_rows.push(c);
    }
    Ok(Report {
        text: aligned_table(&header, &text_rows),
        csv: to_csv(&header, &csv_rows),
    })
}
