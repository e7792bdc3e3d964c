//! Pseudo ground truth from three OCR outputs: star alignment of the token
//! sequences followed by column-wise majority voting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{edit_distance, sequence_edit_distance};
use crate::ocr::OcrResult;
use crate::postcorrect::clean_text;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("pseudo ground truth needs exactly three engine results, got {0}")]
    WrongEngineCount(usize),
}

/// One aligned position; `None` is a gap. Slots follow engine priority.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedColumn {
    pub slots: [Option<String>; 3],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Vote {
    Token(String),
    Drop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoGroundTruth {
    pub tokens: Vec<String>,
    /// Fraction of columns where at least two engines emit the same token.
    pub agreement: f64,
    pub engine_ids: Vec<String>,
    /// Index of the sequence used as alignment center.
    pub center: usize,
}

impl PseudoGroundTruth {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    clean_text(text).split_whitespace().map(str::to_string).collect()
}

/// Index minimizing the summed token edit distance to the other two;
/// ties go to the earliest.
pub fn choose_center(seqs: [&[String]; 3]) -> usize {
    let d01 = sequence_edit_distance(seqs[0], seqs[1]);
    let d02 = sequence_edit_distance(seqs[0], seqs[2]);
    let d12 = sequence_edit_distance(seqs[1], seqs[2]);
    let sums = [d01 + d02, d01 + d12, d02 + d12];
    (0..3).min_by_key(|&i| sums[i]).expect("three sequences")
}

enum Step {
    Match(usize),
    Insert,
}

/// Optimal alignment of `other` against `center` (match 0, substitute 1,
/// gap 1). For each element of `other` records either the center index it
/// sits on or that it is an insertion. Traceback prefers diagonal moves,
/// then gaps in `other`, then gaps in `center`.
fn pairwise(center: &[String], other: &[String]) -> Vec<(Step, usize)> {
    let (n, m) = (center.len(), other.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dp[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dp[i - 1][j - 1] + usize::from(center[i - 1] != other[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    let mut steps = Vec::with_capacity(m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && dp[i][j] == dp[i - 1][j - 1] + usize::from(center[i - 1] != other[j - 1]) {
            steps.push((Step::Match(i - 1), j - 1));
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[i][j] == dp[i - 1][j] + 1 {
            i -= 1;
        } else {
            steps.push((Step::Insert, j - 1));
            j -= 1;
        }
    }
    steps.reverse();
    steps
}

/// Per center position: tokens of `other` inserted before it and the token
/// aligned onto it. Index `center.len()` holds trailing insertions.
fn project(center: &[String], other: &[String]) -> (Vec<Vec<String>>, Vec<Option<String>>) {
    let mut inserts = vec![Vec::new(); center.len() + 1];
    let mut on = vec![None; center.len()];
    let mut next_center = 0;
    for (step, j) in pairwise(center, other) {
        match step {
            Step::Match(i) => {
                on[i] = Some(other[j].clone());
                next_center = i + 1;
            }
            Step::Insert => inserts[next_center].push(other[j].clone()),
        }
    }
    (inserts, on)
}

/// Star alignment: the center sequence is aligned pairwise to the other two
/// and the pairwise alignments are merged on center positions. Insertions
/// from both sides before the same center position share columns
/// left-to-right.
pub fn align_star(seqs: [&[String]; 3]) -> Vec<AlignedColumn> {
    let c = choose_center(seqs);
    let others: Vec<usize> = (0..3).filter(|&i| i != c).collect();
    let center = seqs[c];
    let (ins_a, on_a) = project(center, seqs[others[0]]);
    let (ins_b, on_b) = project(center, seqs[others[1]]);

    let mut columns = Vec::new();
    let mut push = |center_slot: Option<String>, a: Option<String>, b: Option<String>| {
        let mut slots: [Option<String>; 3] = Default::default();
        slots[c] = center_slot;
        slots[others[0]] = a;
        slots[others[1]] = b;
        columns.push(AlignedColumn { slots });
    };
    for k in 0..=center.len() {
        let width = ins_a[k].len().max(ins_b[k].len());
        for t in 0..width {
            push(None, ins_a[k].get(t).cloned(), ins_b[k].get(t).cloned());
        }
        if k < center.len() {
            push(Some(center[k].clone()), on_a[k].clone(), on_b[k].clone());
        }
    }
    columns
}

fn has_pair(col: &AlignedColumn) -> Option<&String> {
    let s = &col.slots;
    (0..3).find_map(|i| {
        let tok = s[i].as_ref()?;
        (i + 1..3).any(|j| s[j].as_ref() == Some(tok)).then_some(tok)
    })
}

/// Two identical tokens win; two gaps drop the column; otherwise the token
/// closest (summed character edit distance, gap counted as empty) to the
/// other two slots, earliest engine on ties.
pub fn majority_vote(col: &AlignedColumn) -> Vote {
    if let Some(tok) = has_pair(col) {
        return Vote::Token(tok.clone());
    }
    if col.slots.iter().filter(|s| s.is_none()).count() >= 2 {
        return Vote::Drop;
    }
    let as_str = |i: usize| col.slots[i].as_deref().unwrap_or("");
    (0..3)
        .filter(|&i| col.slots[i].is_some())
        .min_by_key(|&i| (0..3).filter(|&j| j != i).map(|j| edit_distance(as_str(i), as_str(j))).sum::<usize>())
        .map_or(Vote::Drop, |i| Vote::Token(as_str(i).to_string()))
}

/// Aligns and votes the token sequences of three engine outputs, given in
/// priority order.
pub fn build_pseudo_gt(results: &[OcrResult]) -> Result<PseudoGroundTruth, EnsembleError> {
    let [a, b, c] = results else {
        return Err(EnsembleError::WrongEngineCount(results.len()));
    };
    let seqs = [tokenize(&a.text()), tokenize(&b.text()), tokenize(&c.text())];
    Ok(vote_sequences([&seqs[0], &seqs[1], &seqs[2]], results.iter().map(|r| r.engine_id.clone()).collect()))
}

pub fn vote_sequences(seqs: [&[String]; 3], engine_ids: Vec<String>) -> PseudoGroundTruth {
    let columns = align_star(seqs);
    let agreeing = columns.iter().filter(|c| has_pair(c).is_some()).count();
    let tokens = columns
        .iter()
        .filter_map(|c| match majority_vote(c) {
            Vote::Token(t) => Some(t),
            Vote::Drop => None,
        })
        .collect();
    PseudoGroundTruth {
        tokens,
        agreement: if columns.is_empty() { 1.0 } else { agreeing as f64 / columns.len() as f64 },
        engine_ids,
        center: choose_center(seqs),
    }
}
