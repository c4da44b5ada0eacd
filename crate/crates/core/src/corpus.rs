//! 6GPlan dataset loading and the text normalization shared by every matcher.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset JSON: {0}")]
    Parse(String),
    #[error("entry {key:?} is missing field {field:?}")]
    MissingField { key: String, field: &'static str },
    #[error("entry {key:?} field {field:?} must be a string")]
    FieldType { key: String, field: &'static str },
    #[error("entry {0:?} has an empty question")]
    EmptyQuestion(String),
    #[error("entry {0:?} has an empty category")]
    EmptyCategory(String),
    #[error("entry {0:?} has no gold keywords after normalization")]
    EmptyGold(String),
}

/// Lowercases, strips punctuation other than hyphens and collapses whitespace.
///
/// Idempotent: applying it twice yields the same string.
pub fn normalize_text(s: &str) -> String {
    let lowered: String = s.nfc().collect::<String>().to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.nfc() {
        if c.is_alphanumeric() || c == '-' {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Normalized, duplicate-free gold keywords in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeywordSet {
    items: Vec<String>,
}

impl KeywordSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes `raw` and inserts it unless it is empty or already present.
    /// Returns whether the set grew.
    pub fn insert(&mut self, raw: &str) -> bool {
        let norm = normalize_text(raw);
        if norm.is_empty() || self.items.contains(&norm) {
            return false;
        }
        self.items.push(norm);
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.items.iter().any(|k| k == keyword)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.items
    }
}

impl<S: AsRef<str>> FromIterator<S> for KeywordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut set = KeywordSet::new();
        for s in iter {
            set.insert(s.as_ref());
        }
        set
    }
}

/// Splits a comma-separated answer string into a [`KeywordSet`].
pub fn parse_keywords(answer: &str) -> KeywordSet {
    let trimmed = answer.trim_end();
    let body = trimmed.strip_suffix('.').unwrap_or(trimmed);
    body.split(',').collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub question: String,
    pub category: String,
    pub gold_raw: String,
    pub gold: KeywordSet,
}

/// Parses dataset bytes. Records come back sorted by key.
pub fn parse_dataset(json: &str) -> Result<Vec<QuestionRecord>, CorpusError> {
    let root: serde_json::Value =
        serde_json::from_str(json).map_err(|e| CorpusError::Parse(e.to_string()))?;
    let entries = root
        .as_object()
        .ok_or_else(|| CorpusError::Parse("top level must be a JSON object".into()))?;

    let sorted: BTreeMap<&String, &serde_json::Value> = entries.iter().collect();
    let mut records = Vec::with_capacity(sorted.len());
    for (key, value) in sorted {
        let field = |name: &'static str| -> Result<String, CorpusError> {
            match value.get(name) {
                None => Err(CorpusError::MissingField {
                    key: key.clone(),
                    field: name,
                }),
                Some(serde_json::Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(CorpusError::FieldType {
                    key: key.clone(),
                    field: name,
                }),
            }
        };
        if !value.is_object() {
            return Err(CorpusError::Parse(format!(
                "entry {key:?} is not an object"
            )));
        }
        let question = field("question")?;
        let gold_raw = field("Answer")?;
        let category = field("Category")?;

        let question = question.trim().to_string();
        if question.is_empty() {
            return Err(CorpusError::EmptyQuestion(key.clone()));
        }
        let category = category.trim().to_string();
        if category.is_empty() {
            return Err(CorpusError::EmptyCategory(key.clone()));
        }
        let gold = parse_keywords(&gold_raw);
        if gold.is_empty() {
            return Err(CorpusError::EmptyGold(key.clone()));
        }
        records.push(QuestionRecord {
            id: key.clone(),
            question,
            category,
            gold_raw,
            gold,
        });
    }
    Ok(records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QuestionRecord>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub question_count: usize,
    pub category_counts: BTreeMap<String, usize>,
    /// Sum of per-question gold set sizes.
    pub total_gold_keywords: usize,
    /// Keywords counted once across the whole dataset.
    pub distinct_gold_keywords: usize,
    pub mean_gold_per_question: f64,
}

pub fn dataset_stats(records: &[QuestionRecord]) -> DatasetStats {
    let mut category_counts = BTreeMap::new();
    let mut distinct: HashSet<&str> = HashSet::new();
    let mut total = 0usize;
    for r in records {
        *category_counts.entry(r.category.clone()).or_insert(0) += 1;
        total += r.gold.len();
        distinct.extend(r.gold.iter());
    }
    let mean = if records.is_empty() {
        0.0
    } else {
        total as f64 / records.len() as f64
    };
    DatasetStats {
        question_count: records.len(),
        category_counts,
        total_gold_keywords: total,
        distinct_gold_keywords: distinct.len(),
        mean_gold_per_question: mean,
    }
}

/// Distinct categories in lexicographic order.
pub fn categories(records: &[QuestionRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| r.category.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
