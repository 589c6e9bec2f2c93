//! Brain prompt templates.
//!
//! A template is plain text with six `{placeholder}`s, each appearing
//! exactly once. Two of them must sit on the marker lines
//! `#ROLE: {role_name}` and `#LAST_TONE: {last_caption}`, which the mock
//! reasoner reads back. Any other brace text is kept literally.

use std::path::Path;

use thiserror::Error;

pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/brain_prompt.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    RoleProfile,
    SceneDescription,
    DialogueBlock,
    TargetLine,
    RoleName,
    LastCaption,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::RoleProfile,
        Slot::SceneDescription,
        Slot::DialogueBlock,
        Slot::TargetLine,
        Slot::RoleName,
        Slot::LastCaption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::RoleProfile => "role_profile",
            Slot::SceneDescription => "scene_description",
            Slot::DialogueBlock => "dialogue_block",
            Slot::TargetLine => "target_line",
            Slot::RoleName => "role_name",
            Slot::LastCaption => "last_caption",
        }
    }

    fn from_name(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template is missing placeholder {{{0}}}")]
    MissingPlaceholder(&'static str),
    #[error("placeholder {{{0}}} appears more than once")]
    DuplicatePlaceholder(&'static str),
    #[error("template is missing the marker line `{0}`")]
    MissingMarker(&'static str),
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(Slot),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    source: String,
    segments: Vec<Segment>,
}

/// Values substituted into a template.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptValues {
    pub role_profile: String,
    pub scene_description: String,
    pub dialogue_block: String,
    pub target_line: String,
    pub role_name: String,
    pub last_caption: String,
}

impl PromptValues {
    fn get(&self, slot: Slot) -> &str {
        match slot {
            Slot::RoleProfile => &self.role_profile,
            Slot::SceneDescription => &self.scene_description,
            Slot::DialogueBlock => &self.dialogue_block,
            Slot::TargetLine => &self.target_line,
            Slot::RoleName => &self.role_name,
            Slot::LastCaption => &self.last_caption,
        }
    }
}

const ROLE_MARKER_LINE: &str = "#ROLE: {role_name}";
const TONE_MARKER_LINE: &str = "#LAST_TONE: {last_caption}";

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut seen = [0usize; 6];
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let slot = after
                .find('}')
                .and_then(|close| Slot::from_name(&after[..close]).map(|s| (s, close)));
            match slot {
                Some((slot, close)) => {
                    literal.push_str(&rest[..open]);
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(slot));
                    seen[slot as usize] += 1;
                    rest = &after[close + 1..];
                }
                None => {
                    literal.push_str(&rest[..=open]);
                    rest = after;
                }
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }

        for slot in Slot::ALL {
            match seen[slot as usize] {
                0 => return Err(TemplateError::MissingPlaceholder(slot.name())),
                1 => {}
                _ => return Err(TemplateError::DuplicatePlaceholder(slot.name())),
            }
        }
        for marker in [ROLE_MARKER_LINE, TONE_MARKER_LINE] {
            if !source.lines().any(|l| l.trim() == marker) {
                return Err(TemplateError::MissingMarker(marker));
            }
        }
        Ok(Self {
            source: source.to_string(),
            segments,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Single-pass substitution; inserted values are never re-scanned.
    pub fn render(&self, values: &PromptValues) -> String {
        let mut out = String::with_capacity(self.source.len() + 256);
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(slot) => out.push_str(values.get(*slot)),
            }
        }
        out
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }
}
