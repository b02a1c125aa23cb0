//! Prompt templates with `{name}` placeholders.
//!
//! A placeholder is `{` followed by `[a-z_][a-z0-9_]*` and `}`; any other
//! brace is literal text. Substitution is a single pass, so bound values are
//! never re-scanned for placeholders.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use super::GatewayError;

pub type Bindings = HashMap<String, String>;

/// Which of the five prompt shapes a request uses. Doubles as the template
/// file stem (`classify.txt`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateKind {
    Classify,
    Plan,
    Generate,
    Respond,
    Score,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 5] = [
        TemplateKind::Classify,
        TemplateKind::Plan,
        TemplateKind::Generate,
        TemplateKind::Respond,
        TemplateKind::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Classify => "classify",
            TemplateKind::Plan => "plan",
            TemplateKind::Generate => "generate",
            TemplateKind::Respond => "respond",
            TemplateKind::Score => "score",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_slot_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn pieces(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_slot_name(&after[..close]) => {
                if open > 0 {
                    out.push(Piece::Text(&rest[..open]));
                }
                out.push(Piece::Slot(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                out.push(Piece::Text(&rest[..=open]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            body: body.into(),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for p in pieces(&self.body) {
            if let Piece::Slot(name) = p {
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
        }
        seen
    }

    pub fn render(&self, bindings: &Bindings) -> Result<String, GatewayError> {
        let mut out = String::with_capacity(self.body.len() + 256);
        for p in pieces(&self.body) {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => match bindings.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(GatewayError::UnboundPlaceholder {
                            template: self.name.clone(),
                            placeholder: name.to_string(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

pub fn render(template: &PromptTemplate, bindings: &Bindings) -> Result<String, GatewayError> {
    template.render(bindings)
}

pub const TEMPLATE_VERSION: &str = "v1";

/// The five templates used by the pipeline.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: HashMap<TemplateKind, PromptTemplate>,
}

fn strip_final_newline(s: &str) -> &str {
    s.strip_suffix('\n')
        .map(|s| s.strip_suffix('\r').unwrap_or(s))
        .unwrap_or(s)
}

impl TemplateSet {
    /// The templates compiled into the binary from `templates/v1`.
    pub fn builtin() -> Self {
        let raw = [
            (
                TemplateKind::Classify,
                include_str!("../../templates/v1/classify.txt"),
            ),
            (
                TemplateKind::Plan,
                include_str!("../../templates/v1/plan.txt"),
            ),
            (
                TemplateKind::Generate,
                include_str!("../../templates/v1/generate.txt"),
            ),
            (
                TemplateKind::Respond,
                include_str!("../../templates/v1/respond.txt"),
            ),
            (
                TemplateKind::Score,
                include_str!("../../templates/v1/score.txt"),
            ),
        ];
        let templates = raw
            .into_iter()
            .map(|(k, body)| (k, PromptTemplate::new(k.name(), strip_final_newline(body))))
            .collect();
        TemplateSet { templates }
    }

    /// Loads `<kind>.txt` for every kind from a directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let mut templates = HashMap::new();
        for kind in TemplateKind::ALL {
            let path = dir.as_ref().join(format!("{}.txt", kind.name()));
            let body = std::fs::read_to_string(&path).map_err(|e| {
                GatewayError::InvalidConfig(format!("cannot read template {}: {e}", path.display()))
            })?;
            templates.insert(
                kind,
                PromptTemplate::new(kind.name(), strip_final_newline(&body)),
            );
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, kind: TemplateKind) -> &PromptTemplate {
        &self.templates[&kind]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}
