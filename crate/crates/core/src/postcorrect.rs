//! Rule-based correction of OCR text: cleanup, contextual character
//! substitution, retail keyword repair, currency and date normalization.
//!
//! Every change is recorded as an [`Edit`] so the output can be rebuilt
//! from the input by replaying the edits in order.

use std::path::Path;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::edit_distance;

#[derive(Debug, Error)]
pub enum RuleSetError {
    #[error("rule set needs at least one keyword")]
    NoKeywords,
    #[error("rule set needs at least one currency marker")]
    NoCurrencyMarkers,
    #[error("rule set file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateForm {
    /// `YYYY-MM-DD`
    Iso,
    /// `D Mon YYYY`
    DayMonthName,
    /// `D.M.YYYY`
    Dotted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionRuleSet {
    /// Applied inside letter-majority tokens.
    pub alpha_substitutions: Vec<(char, char)>,
    /// Applied inside digit-majority tokens.
    pub numeric_substitutions: Vec<(char, char)>,
    pub keywords: Vec<String>,
    pub keyword_max_distance: usize,
    pub keyword_min_len: usize,
    /// Canonical spellings; a trailing `.` is optional on input.
    pub currency_markers: Vec<String>,
    pub date_forms: Vec<DateForm>,
}

impl Default for CorrectionRuleSet {
    fn default() -> Self {
        Self {
            alpha_substitutions: vec![('0', 'O'), ('1', 'I'), ('5', 'S')],
            numeric_substitutions: vec![('O', '0'), ('I', '1'), ('S', '5')],
            keywords: ["Total", "Invoice", "Subtotal", "Discount", "Receipt"].map(String::from).to_vec(),
            keyword_max_distance: 1,
            keyword_min_len: 4,
            currency_markers: ["RM", "Rs.", "INR", "USD"].map(String::from).to_vec(),
            date_forms: vec![DateForm::Iso, DateForm::DayMonthName, DateForm::Dotted],
        }
    }
}

impl CorrectionRuleSet {
    pub fn validate(&self) -> Result<(), RuleSetError> {
        if self.keywords.is_empty() {
            return Err(RuleSetError::NoKeywords);
        }
        if self.currency_markers.is_empty() {
            return Err(RuleSetError::NoCurrencyMarkers);
        }
        Ok(())
    }

    /// Parses a TOML rule file; omitted keys keep their defaults.
    pub fn from_toml(s: &str) -> Result<Self, RuleSetError> {
        let rules: Self = toml::from_str(s)?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self, RuleSetError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Marker plus optional separator, longest markers first.
    fn currency_regex(&self) -> Regex {
        let mut markers: Vec<&String> = self.currency_markers.iter().collect();
        markers.sort_by_key(|m| std::cmp::Reverse(m.len()));
        let alts: Vec<String> = markers
            .iter()
            .map(|m| {
                let base = m.strip_suffix('.').unwrap_or(m);
                format!("{}\\.?", regex::escape(base))
            })
            .collect();
        Regex::new(&format!(r"(?i)(^|[^\p{{L}}\p{{N}}])({}) ?(\d)", alts.join("|"))).expect("valid currency regex")
    }

    /// Canonical marker matching `raw` (case-insensitive, `.` optional).
    fn canonical_marker(&self, raw: &str) -> Option<&str> {
        let raw = raw.strip_suffix('.').unwrap_or(raw);
        self.currency_markers
            .iter()
            .find(|m| m.strip_suffix('.').unwrap_or(m).eq_ignore_ascii_case(raw))
            .map(String::as_str)
    }

    /// Length in bytes of the leading punctuation plus currency marker
    /// that precede an amount in `token`, or 0.
    fn currency_prefix_len(&self, token: &str) -> usize {
        let lead = token.find(char::is_alphanumeric).unwrap_or(token.len());
        let mut best = 0;
        for m in &self.currency_markers {
            let base = m.strip_suffix('.').unwrap_or(m);
            let Some(head) = token.get(lead..lead + base.len()) else { continue };
            if !head.eq_ignore_ascii_case(base) {
                continue;
            }
            let mut len = lead + base.len();
            if token[len..].starts_with('.') {
                len += 1;
            }
            if token[len..].starts_with(|c: char| c.is_ascii_digit()) {
                best = best.max(len);
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Clean,
    SubstituteAlpha,
    SubstituteNumeric,
    Keyword,
    Currency,
    Date,
}

/// Replace `removed` at byte `offset` with `inserted`. Offsets refer to the
/// text as it stands after all earlier edits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub rule: Rule,
    pub offset: usize,
    pub removed: String,
    pub inserted: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectedText {
    pub text: String,
    pub applied_rules: Vec<Edit>,
}

/// Applies `edits` in order to `input`. Returns `None` when an edit does
/// not match the text it claims to replace.
pub fn replay(input: &str, edits: &[Edit]) -> Option<String> {
    let mut text = input.to_string();
    for e in edits {
        let end = e.offset.checked_add(e.removed.len())?;
        if text.get(e.offset..end)? != e.removed {
            return None;
        }
        text.replace_range(e.offset..end, &e.inserted);
    }
    Some(text)
}

/// Collects non-overlapping replacements on one pass's input and turns
/// them into sequential edits.
struct Pass {
    rule_edits: Vec<(usize, usize, String, Rule)>,
}

impl Pass {
    fn new() -> Self {
        Self { rule_edits: Vec::new() }
    }

    fn replace(&mut self, start: usize, end: usize, with: String, rule: Rule) {
        self.rule_edits.push((start, end, with, rule));
    }

    fn finish(mut self, input: &str, log: &mut Vec<Edit>) -> String {
        self.rule_edits.sort_by_key(|e| e.0);
        let mut out = String::with_capacity(input.len());
        let mut cursor = 0;
        for (start, end, with, rule) in self.rule_edits {
            debug_assert!(start >= cursor, "overlapping edits");
            out.push_str(&input[cursor..start]);
            if input[start..end] != with {
                log.push(Edit { rule, offset: out.len(), removed: input[start..end].to_string(), inserted: with.clone() });
            }
            out.push_str(&with);
            cursor = end;
        }
        out.push_str(&input[cursor..]);
        out
    }
}

fn clean_line(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    for c in line.chars() {
        let c = if c == '\t' { ' ' } else { c };
        if c < ' ' || c == '\u{7f}' {
            continue;
        }
        if c == ' ' && (out.is_empty() || out.ends_with(' ')) {
            continue;
        }
        out.push(c);
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

fn lines_with_offsets(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    s.split('\n').map(move |line| {
        let start = offset;
        offset += line.len() + 1;
        (start, line)
    })
}

fn clean_pass(s: &str, log: &mut Vec<Edit>) -> String {
    let mut pass = Pass::new();
    for (start, line) in lines_with_offsets(s) {
        pass.replace(start, start + line.len(), clean_line(line), Rule::Clean);
    }
    pass.finish(s, log)
}

/// Drops control characters (newline excepted) and DEL, collapses runs of
/// spaces and tabs to one space, and trims every line.
pub fn clean_text(s: &str) -> String {
    s.split('\n').map(clean_line).collect::<Vec<_>>().join("\n")
}

fn tokens_with_offsets(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split(['\n', ' '])
        .scan(0usize, |offset, tok| {
            let start = *offset;
            *offset += tok.len() + 1;
            Some((start, tok))
        })
        .filter(|(_, t)| !t.is_empty())
}

fn substitute(token: &str, rules: &CorrectionRuleSet) -> (String, Option<Rule>) {
    let prefix = rules.currency_prefix_len(token);
    let (head, body) = token.split_at(prefix);
    let letters = body.chars().filter(|c| c.is_alphabetic()).count();
    let digits = body.chars().filter(|c| c.is_numeric()).count();
    let (table, rule) = if letters > digits {
        (&rules.alpha_substitutions, Rule::SubstituteAlpha)
    } else if digits > letters {
        (&rules.numeric_substitutions, Rule::SubstituteNumeric)
    } else {
        return (token.to_string(), None);
    };
    let replaced: String =
        body.chars().map(|c| table.iter().find(|(from, _)| *from == c).map_or(c, |&(_, to)| to)).collect();
    (format!("{head}{replaced}"), Some(rule))
}

/// Letter-majority tokens get digit-lookalikes turned into letters,
/// digit-majority tokens the reverse. Majority counts letters against digits;
/// a leading currency marker before an amount is left alone.
pub fn context_substitute(token: &str, rules: &CorrectionRuleSet) -> String {
    substitute(token, rules).0
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Casing {
    Upper,
    Capitalized,
    Lower,
}

fn casing_of(word: &str) -> Casing {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        Casing::Upper
    } else if letters.first().is_some_and(|c| c.is_uppercase()) {
        Casing::Capitalized
    } else {
        Casing::Lower
    }
}

fn apply_casing(word: &str, casing: Casing) -> String {
    match casing {
        Casing::Upper => word.to_uppercase(),
        Casing::Lower => word.to_lowercase(),
        Casing::Capitalized => {
            let lower = word.to_lowercase();
            let mut chars = lower.chars();
            chars.next().map_or_else(String::new, |f| f.to_uppercase().chain(chars).collect())
        }
    }
}

/// Replaces a near-miss of a retail keyword with the keyword, keeping the
/// token's casing style and any surrounding punctuation.
pub fn correct_keywords(token: &str, rules: &CorrectionRuleSet) -> String {
    let core_start = token.find(|c: char| c.is_alphanumeric());
    let Some(core_start) = core_start else { return token.to_string() };
    let core_end = token.rfind(|c: char| c.is_alphanumeric()).map(|i| i + token[i..].chars().next().map_or(1, char::len_utf8));
    let core_end = core_end.unwrap_or(token.len());
    let core = &token[core_start..core_end];
    if core.chars().count() < rules.keyword_min_len || !core.chars().all(char::is_alphabetic) {
        return token.to_string();
    }
    let lowered = core.to_lowercase();
    let best = rules
        .keywords
        .iter()
        .map(|k| (edit_distance(&lowered, &k.to_lowercase()), k))
        .filter(|(d, _)| *d <= rules.keyword_max_distance)
        .min_by_key(|(d, _)| *d);
    match best {
        Some((_, k)) => format!("{}{}{}", &token[..core_start], apply_casing(k, casing_of(core)), &token[core_end..]),
        None => token.to_string(),
    }
}

fn currency_pass(s: &str, rules: &CorrectionRuleSet, re: &Regex, log: &mut Vec<Edit>) -> String {
    let mut pass = Pass::new();
    for cap in re.captures_iter(s) {
        let marker = cap.get(2).expect("marker group");
        let digit = cap.get(3).expect("digit group");
        if let Some(canonical) = rules.canonical_marker(marker.as_str()) {
            pass.replace(marker.start(), digit.start(), format!("{canonical} "), Rule::Currency);
        }
    }
    pass.finish(s, log)
}

/// Separates a currency marker from the amount it abuts with one space and
/// writes the marker in its canonical spelling.
pub fn normalize_currency(line: &str, rules: &CorrectionRuleSet) -> String {
    currency_pass(line, rules, &rules.currency_regex(), &mut Vec::new())
}

const MONTHS: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];
const FULL_MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december",
];

static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b").expect("regex"));
static NAMED_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(\d{1,2}) ([a-z]{3,9})\.? (\d{4})\b").expect("regex"));
static DOTTED_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,2})\.(\d{1,2})\.(\d{4})\b").expect("regex"));

fn month_number(name: &str) -> Option<u32> {
    let name = name.to_lowercase();
    MONTHS.iter().zip(FULL_MONTHS).position(|(abbr, full)| name == *abbr || name == full).map(|i| i as u32 + 1)
}

fn days_in_month(month: u32, year: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 31,
    }
}

fn format_date(day: u32, month: u32, year: u32) -> Option<String> {
    ((1..=12).contains(&month) && (1..=days_in_month(month, year)).contains(&day))
        .then(|| format!("{day:02}/{month:02}/{year:04}"))
}

fn date_pass(s: &str, rules: &CorrectionRuleSet, log: &mut Vec<Edit>) -> String {
    let num = |c: &Captures, i: usize| c[i].parse::<u32>().ok();
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut pass = Pass::new();
    for form in &rules.date_forms {
        let (re, to_dmy): (&Regex, &dyn Fn(&Captures) -> Option<(u32, u32, u32)>) = match form {
            DateForm::Iso => (&ISO_DATE, &|c| Some((num(c, 3)?, num(c, 2)?, num(c, 1)?))),
            DateForm::DayMonthName => (&NAMED_DATE, &|c| Some((num(c, 1)?, month_number(&c[2])?, num(c, 3)?))),
            DateForm::Dotted => (&DOTTED_DATE, &|c| Some((num(c, 1)?, num(c, 2)?, num(c, 3)?))),
        };
        for cap in re.captures_iter(s) {
            let whole = cap.get(0).expect("match");
            if taken.iter().any(|&(a, b)| whole.start() < b && a < whole.end()) {
                continue;
            }
            if let Some(formatted) = to_dmy(&cap).and_then(|(d, m, y)| format_date(d, m, y)) {
                taken.push((whole.start(), whole.end()));
                pass.replace(whole.start(), whole.end(), formatted, Rule::Date);
            }
        }
    }
    pass.finish(s, log)
}

/// Rewrites recognised, valid dates as `DD/MM/YYYY`.
pub fn normalize_date(line: &str) -> String {
    date_pass(line, &CorrectionRuleSet::default(), &mut Vec::new())
}

/// Full correction: cleanup, per-token substitution, per-token keyword
/// repair, then currency and date normalization.
pub fn correct(text: &str, rules: &CorrectionRuleSet) -> CorrectedText {
    let mut log = Vec::new();
    let cleaned = clean_pass(text, &mut log);

    let mut pass = Pass::new();
    for (start, tok) in tokens_with_offsets(&cleaned) {
        if let (replaced, Some(rule)) = substitute(tok, rules) {
            pass.replace(start, start + tok.len(), replaced, rule);
        }
    }
    let substituted = pass.finish(&cleaned, &mut log);

    let mut pass = Pass::new();
    for (start, tok) in tokens_with_offsets(&substituted) {
        pass.replace(start, start + tok.len(), correct_keywords(tok, rules), Rule::Keyword);
    }
    let keyed = pass.finish(&substituted, &mut log);

    let currency = currency_pass(&keyed, rules, &rules.currency_regex(), &mut log);
    let dated = date_pass(&currency, rules, &mut log);
    CorrectedText { text: dated, applied_rules: log }
}
