//! Evaluation metrics: character/word error rates against a reference,
//! field extraction, text density, noise ratio, and PSNR aggregation.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::PsnrValue;
use crate::postcorrect::clean_text;
use crate::router::QualityTier;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("reference text is empty")]
    EmptyReference,
    #[error("no records to aggregate")]
    NoRecords,
}

/// Levenshtein distance over arbitrary sequences, unit costs.
pub fn sequence_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character-level Levenshtein distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    sequence_edit_distance(&a, &b)
}

/// `clean_text`, then every whitespace run (newlines included) becomes a
/// single space.
pub fn normalize_whitespace(s: &str) -> String {
    clean_text(s).split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn cer(hypothesis: &str, reference: &str) -> Result<f64, MetricsError> {
    let reference: Vec<char> = normalize_whitespace(reference).chars().collect();
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let hypothesis: Vec<char> = normalize_whitespace(hypothesis).chars().collect();
    Ok(sequence_edit_distance(&hypothesis, &reference) as f64 / reference.len() as f64)
}

pub fn wer(hypothesis: &str, reference: &str) -> Result<f64, MetricsError> {
    let reference = clean_text(reference);
    let reference: Vec<&str> = reference.split_whitespace().collect();
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let hypothesis = clean_text(hypothesis);
    let hypothesis: Vec<&str> = hypothesis.split_whitespace().collect();
    Ok(sequence_edit_distance(&hypothesis, &reference) as f64 / reference.len() as f64)
}

const NOISE_ALLOWED: &str = ".,:;/\\-()%$&@#*'\"+=";

pub fn is_noise_char(c: char) -> bool {
    !(c.is_alphanumeric() || c.is_whitespace() || NOISE_ALLOWED.contains(c))
}

/// Fraction of characters outside letters, digits, whitespace and common
/// receipt punctuation.
pub fn noise_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 0.0;
    }
    text.chars().filter(|&c| is_noise_char(c)).count() as f64 / total as f64
}

/// Whitespace token count.
pub fn text_density(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Clone, Debug)]
pub struct FieldPattern {
    pub name: &'static str,
    pub pattern: Regex,
}

#[derive(Clone, Debug)]
pub struct FieldPatternSet {
    pub fields: [FieldPattern; 5],
}

const MONTHS: &str = "jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec";

static DEFAULT_FIELDS: LazyLock<FieldPatternSet> = LazyLock::new(|| {
    let f = |name, pattern: &str| FieldPattern { name, pattern: Regex::new(pattern).expect("valid field pattern") };
    FieldPatternSet {
        fields: [
            f("total_amount", r"(?i)\b(?:sub\s*)?total\b[^\n\d]{0,24}\d+(?:[.,]\d+)*"),
            f(
                "date",
                &format!(
                    r"(?i)\b(?:\d{{1,2}}/\d{{1,2}}/\d{{4}}|\d{{4}}-\d{{1,2}}-\d{{1,2}}|\d{{1,2}}\.\d{{1,2}}\.\d{{4}}|\d{{1,2}} (?:{MONTHS})[a-z]*\.? \d{{4}})\b"
                ),
            ),
            f("invoice_id", r"(?i)\b(?:invoice|receipt)\b[^\n\w]*(?:(?:no|num|number)\b\.?)?[^\n\w]*[a-z0-9/-]*\d"),
            f("currency", r"(?i)\b(?:rm|rs|inr|usd)(?:[^a-z]|$)"),
            f("discount", r"(?i)\bdiscount\b"),
        ],
    }
});

impl Default for FieldPatternSet {
    fn default() -> Self {
        DEFAULT_FIELDS.clone()
    }
}

impl FieldPatternSet {
    pub fn matched(&self, text: &str) -> Vec<&'static str> {
        self.fields.iter().filter(|f| f.pattern.is_match(text)).map(|f| f.name).collect()
    }
}

pub fn field_extraction_rate(text: &str, fields: &FieldPatternSet) -> f64 {
    fields.matched(text).len() as f64 / fields.fields.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub image_id: String,
    /// `None` when the reference is empty.
    pub cer: Option<f64>,
    pub wer: Option<f64>,
    pub mean_confidence: f64,
    pub psnr: PsnrValue,
    pub field_extraction: f64,
    pub text_density: usize,
    pub noise_ratio: f64,
    pub elapsed: f64,
    pub tier: QualityTier,
}

impl MetricsRecord {
    /// Scores `text` (the method's final output) against `reference`.
    #[allow(clippy::too_many_arguments)]
    pub fn score(
        image_id: &str,
        text: &str,
        reference: &str,
        mean_confidence: f64,
        psnr: PsnrValue,
        elapsed: f64,
        tier: QualityTier,
        fields: &FieldPatternSet,
    ) -> Self {
        Self {
            image_id: image_id.to_string(),
            cer: cer(text, reference).ok(),
            wer: wer(text, reference).ok(),
            mean_confidence,
            psnr,
            field_extraction: field_extraction_rate(text, fields),
            text_density: text_density(text),
            noise_ratio: noise_ratio(text),
            elapsed,
            tier,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub cer: Option<f64>,
    pub wer: Option<f64>,
    pub mean_confidence: f64,
    pub psnr: PsnrValue,
    /// Number of finite PSNR values behind `psnr`.
    pub psnr_n: usize,
    pub field_extraction: f64,
    pub text_density: f64,
    pub noise_ratio: f64,
    pub elapsed: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Arithmetic means. PSNR averages finite values only; CER/WER skip
/// records with an empty reference.
pub fn aggregate(records: &[MetricsRecord]) -> Result<AggregateRow, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let all = |f: fn(&MetricsRecord) -> f64| mean(records.iter().map(f)).expect("non-empty");
    let finite: Vec<f64> = records.iter().filter_map(|r| r.psnr.finite()).collect();
    Ok(AggregateRow {
        n: records.len(),
        cer: mean(records.iter().filter_map(|r| r.cer)),
        wer: mean(records.iter().filter_map(|r| r.wer)),
        mean_confidence: all(|r| r.mean_confidence),
        psnr: mean(finite.iter().copied()).map_or(PsnrValue::NotApplicable, PsnrValue::Finite),
        psnr_n: finite.len(),
        field_extraction: all(|r| r.field_extraction),
        text_density: all(|r| r.text_density as f64),
        noise_ratio: all(|r| r.noise_ratio),
        elapsed: all(|r| r.elapsed),
    })
}
