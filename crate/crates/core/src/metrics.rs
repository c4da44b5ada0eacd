//! Keyword matching and the three recall metrics (MCR, KHC, GRR).
//!
//! All aggregators are generic over [`Scalar`], so the same code produces
//! `f64` report values and exact `BigRational` values for identity checks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_text, KeywordSet, QuestionRecord};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("gold keyword set for {0:?} is empty")]
    EmptyGold(String),
    #[error("no match results to aggregate")]
    EmptyResults,
    #[error("result refers to unknown question {0:?}")]
    UnknownQuestion(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub question_id: String,
    pub gold_size: usize,
    pub matched: KeywordSet,
    pub matched_count: usize,
}

impl MatchResult {
    /// A result with nothing matched, used for failed or missing solutions.
    pub fn unmatched(question_id: impl Into<String>, gold: &KeywordSet) -> Self {
        Self {
            question_id: question_id.into(),
            gold_size: gold.len(),
            matched: KeywordSet::new(),
            matched_count: 0,
        }
    }

    pub fn recall<T: Scalar>(&self) -> T {
        T::from_count(self.matched_count) / T::from_count(self.gold_size)
    }
}

/// Whole-phrase match of each gold keyword against the normalized solution.
///
/// A keyword hits when it appears bounded by spaces (or the text ends) in the
/// normalized text, so "lstm" never matches inside "lstms" and hyphenated
/// compounds stay single tokens.
pub fn match_keywords(
    question_id: &str,
    solution_text: &str,
    gold: &KeywordSet,
) -> Result<MatchResult, MetricsError> {
    if gold.is_empty() {
        return Err(MetricsError::EmptyGold(question_id.to_string()));
    }
    let padded = format!(" {} ", normalize_text(solution_text));
    let matched: KeywordSet = gold
        .iter()
        .filter(|k| padded.contains(&format!(" {k} ")))
        .collect();
    Ok(MatchResult {
        question_id: question_id.to_string(),
        gold_size: gold.len(),
        matched_count: matched.len(),
        matched,
    })
}

fn non_empty(results: &[MatchResult]) -> Result<(), MetricsError> {
    if results.is_empty() {
        Err(MetricsError::EmptyResults)
    } else {
        Ok(())
    }
}

/// Macro coverage rate: mean per-question recall, in percent.
pub fn mcr<T: Scalar>(results: &[MatchResult]) -> Result<T, MetricsError> {
    non_empty(results)?;
    let sum = results
        .iter()
        .fold(T::zero(), |acc, r| acc + r.recall::<T>());
    Ok(T::hundred() * sum / T::from_count(results.len()))
}

/// Global recall rate: pooled matched over pooled gold, in percent.
pub fn grr<T: Scalar>(results: &[MatchResult]) -> Result<T, MetricsError> {
    non_empty(results)?;
    let matched: usize = results.iter().map(|r| r.matched_count).sum();
    let gold: usize = results.iter().map(|r| r.gold_size).sum();
    Ok(T::hundred() * T::from_count(matched) / T::from_count(gold))
}

/// Keyword hit count: mean matched keywords per question.
pub fn khc<T: Scalar>(results: &[MatchResult]) -> Result<T, MetricsError> {
    non_empty(results)?;
    let matched: usize = results.iter().map(|r| r.matched_count).sum();
    Ok(T::from_count(matched) / T::from_count(results.len()))
}

pub fn per_category_mcr<T: Scalar>(
    results: &[MatchResult],
    records: &[QuestionRecord],
) -> Result<BTreeMap<String, T>, MetricsError> {
    let category_of: HashMap<&str, &str> = records
        .iter()
        .map(|r| (r.id.as_str(), r.category.as_str()))
        .collect();
    let mut grouped: BTreeMap<String, Vec<MatchResult>> = BTreeMap::new();
    for r in results {
        let cat = category_of
            .get(r.question_id.as_str())
            .ok_or_else(|| MetricsError::UnknownQuestion(r.question_id.clone()))?;
        grouped.entry(cat.to_string()).or_default().push(r.clone());
    }
    grouped
        .into_iter()
        .map(|(cat, rs)| mcr::<T>(&rs).map(|v| (cat, v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub mcr_percent: T,
    pub khc: T,
    pub grr_percent: T,
    pub per_category_mcr: BTreeMap<String, T>,
    pub n_questions: usize,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn from_results(
        results: &[MatchResult],
        records: &[QuestionRecord],
    ) -> Result<Self, MetricsError> {
        Ok(Self {
            mcr_percent: mcr(results)?,
            khc: khc(results)?,
            grr_percent: grr(results)?,
            per_category_mcr: per_category_mcr(results, records)?,
            n_questions: results.len(),
        })
    }

    pub fn to_f64(&self) -> MetricsReport<f64> {
        let f = |v: &T| v.to_f64().unwrap_or(f64::NAN);
        MetricsReport {
            mcr_percent: f(&self.mcr_percent),
            khc: f(&self.khc),
            grr_percent: f(&self.grr_percent),
            per_category_mcr: self
                .per_category_mcr
                .iter()
                .map(|(k, v)| (k.clone(), f(v)))
                .collect(),
            n_questions: self.n_questions,
        }
    }
}
