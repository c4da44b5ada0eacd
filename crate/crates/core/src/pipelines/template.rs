//! Prompt templates with `{name}` placeholders and `{{`/`}}` escapes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Template library shipped with the crate.
pub const DEFAULT_TEMPLATES: &str = include_str!("../../templates/prompts.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {id}: unknown placeholder {{{name}}}")]
    UnknownPlaceholder { id: String, name: String },
    #[error("template {id}: unterminated placeholder")]
    Unterminated { id: String },
    #[error("template {id}: stray '}}' (write '}}}}' for a literal brace)")]
    StrayClose { id: String },
    #[error("template {id}: placeholder {{{name}}} is not bound")]
    Unbound { id: String, name: &'static str },
    #[error("template {0:?} is not defined")]
    Missing(String),
    #[error("template {id} must use placeholder {{{name}}}")]
    RequiredPlaceholder { id: String, name: &'static str },
    #[error("duplicate template section {0:?}")]
    Duplicate(String),
    #[error("failed to read templates from {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Placeholder {
    Category,
    Question,
    Sol,
    St,
}

impl Placeholder {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "category" => Placeholder::Category,
            "question" => Placeholder::Question,
            "sol" => Placeholder::Sol,
            "st" => Placeholder::St,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Placeholder::Category => "category",
            Placeholder::Question => "question",
            Placeholder::Sol => "sol",
            Placeholder::St => "st",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(Placeholder),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    segments: Vec<Segment>,
}

/// Values substituted into a template. Unused bindings are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub category: Option<&'a str>,
    pub question: Option<&'a str>,
    pub sol: Option<&'a str>,
    pub st: Option<&'a str>,
}

impl<'a> Bindings<'a> {
    fn get(&self, p: Placeholder) -> Option<&'a str> {
        match p {
            Placeholder::Category => self.category,
            Placeholder::Question => self.question,
            Placeholder::Sol => self.sol,
            Placeholder::St => self.st,
        }
    }
}

impl PromptTemplate {
    pub fn parse(id: impl Into<String>, body: &str) -> Result<Self, TemplateError> {
        let id = id.into();
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut chars = body.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(ch) => name.push(ch),
                            None => return Err(TemplateError::Unterminated { id }),
                        }
                    }
                    let slot = Placeholder::parse(&name).ok_or_else(|| {
                        TemplateError::UnknownPlaceholder {
                            id: id.clone(),
                            name,
                        }
                    })?;
                    if !text.is_empty() {
                        segments.push(Segment::Text(std::mem::take(&mut text)));
                    }
                    segments.push(Segment::Slot(slot));
                }
                '}' => return Err(TemplateError::StrayClose { id }),
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Self { id, segments })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn placeholders(&self) -> BTreeSet<Placeholder> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(p) => Some(*p),
                Segment::Text(_) => None,
            })
            .collect()
    }

    pub fn render(&self, b: &Bindings<'_>) -> Result<String, TemplateError> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(p) => out.push_str(b.get(*p).ok_or(TemplateError::Unbound {
                    id: self.id.clone(),
                    name: p.name(),
                })?),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PromptTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => f.write_str(&t.replace('{', "{{").replace('}', "}}"))?,
                Segment::Slot(p) => write!(f, "{{{}}}", p.name())?,
            }
        }
        Ok(())
    }
}

/// Template ids every library must define, with the placeholders each one
/// must use so that chained calls always see the previous output.
pub const REQUIRED_TEMPLATES: &[(&str, &[Placeholder])] = {
    use Placeholder::*;
    &[
        ("baseline", &[Category, Question]),
        ("regular.one_round.d1", &[Question]),
        ("regular.one_round.d2", &[Sol]),
        ("regular.round1.d1", &[Question]),
        ("regular.round1.d2", &[Sol]),
        ("regular.round2.d1", &[Sol]),
        ("regular.round2.d2", &[Sol]),
        ("regular.round3.d1", &[Sol]),
        ("regular.round3.d2", &[Sol]),
        ("decomp.initial", &[Question]),
        ("decomp.review", &[Sol]),
        ("decomp.refine", &[Sol]),
        ("subtask.one_round.d1", &[St]),
        ("subtask.one_round.d2", &[St, Sol]),
        ("subtask.round1.d1", &[St]),
        ("subtask.round1.d2", &[St, Sol]),
        ("subtask.round2.d1", &[St, Sol]),
        ("subtask.round2.d2", &[St, Sol]),
        ("subtask.round3.d1", &[St, Sol]),
        ("subtask.round3.d2", &[St, Sol]),
    ]
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateLibrary {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateLibrary {
    /// Parses a sectioned templates file and checks it defines every
    /// required template.
    pub fn parse(src: &str) -> Result<Self, TemplateError> {
        let mut templates = BTreeMap::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        let mut flush = |cur: Option<(String, Vec<&str>)>| -> Result<(), TemplateError> {
            if let Some((id, lines)) = cur {
                let body = lines.join("\n");
                let tpl = PromptTemplate::parse(id.clone(), body.trim_matches('\n'))?;
                if templates.insert(id.clone(), tpl).is_some() {
                    return Err(TemplateError::Duplicate(id));
                }
            }
            Ok(())
        };
        for line in src.lines() {
            let header = line
                .trim()
                .strip_prefix("===")
                .and_then(|s| s.strip_suffix("==="))
                .map(str::trim)
                .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace));
            if let Some(id) = header {
                flush(current.take())?;
                current = Some((id.to_string(), Vec::new()));
            } else if let Some((_, lines)) = current.as_mut() {
                lines.push(line.trim_end());
            }
        }
        flush(current)?;
        let lib = Self { templates };
        lib.validate()?;
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let src = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&src)
    }

    fn validate(&self) -> Result<(), TemplateError> {
        for (id, needed) in REQUIRED_TEMPLATES {
            let tpl = self.get(id)?;
            let have = tpl.placeholders();
            if let Some(p) = needed.iter().find(|p| !have.contains(p)) {
                return Err(TemplateError::RequiredPlaceholder {
                    id: id.to_string(),
                    name: p.name(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates
            .get(id)
            .ok_or_else(|| TemplateError::Missing(id.to_string()))
    }

    pub fn render(&self, id: &str, b: &Bindings<'_>) -> Result<String, TemplateError> {
        self.get(id)?.render(b)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

impl Default for TemplateLibrary {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}
