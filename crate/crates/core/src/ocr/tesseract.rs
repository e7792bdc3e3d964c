use std::collections::HashMap;
use std::path::PathBuf;

use super::process::{resolve_program, run_captured, write_temp_image};
use super::{BBox, OcrEngine, OcrError, OcrResult, OcrToken, Page};
use crate::clock::Clock;

/// LSTM engine, single uniform block of text.
pub const TESSERACT_ARGS: [&str; 4] = ["--oem", "3", "--psm", "6"];

const COLUMNS: [&str; 12] = [
    "level", "page_num", "block_num", "par_num", "line_num", "word_num", "left", "top", "width", "height", "conf", "text",
];
const WORD_LEVEL: i64 = 5;

pub struct TesseractEngine {
    id: String,
    program: PathBuf,
    args: Vec<String>,
    timeout_s: f64,
    clock: Clock,
}

impl TesseractEngine {
    pub fn new(id: &str, command: &str, args: Vec<String>, timeout_s: f64, clock: Clock) -> Result<Self, OcrError> {
        let program = resolve_program(command).ok_or_else(|| OcrError::EngineUnavailable { program: command.into() })?;
        Ok(Self { id: id.into(), program, args, timeout_s, clock })
    }
}

impl OcrEngine for TesseractEngine {
    fn id(&self) -> &str {
        &self.id
    }

    fn recognize(&self, page: &Page<'_>) -> Result<OcrResult, OcrError> {
        let timer = self.clock.start();
        let file = write_temp_image(page.image)?;
        let mut args = vec![file.path().display().to_string(), "stdout".to_string()];
        args.extend(self.args.iter().cloned());
        args.push("tsv".into());
        let out = run_captured(&self.program, &args, self.timeout_s)?;
        let tokens = parse_tesseract_tsv(&out)?;
        Ok(OcrResult::new(self.id.clone(), tokens, timer.elapsed_s()))
    }
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, row: usize) -> Result<T, OcrError> {
    raw.trim().parse().map_err(|_| OcrError::OutputParseError { row, message: format!("bad {name} value `{raw}`") })
}

/// Parses `tesseract ... tsv` output into word tokens.
///
/// Rows are numbered from 1 (the header). Only level-5 rows with a
/// non-negative confidence and non-blank text become tokens; `line_index`
/// counts distinct (page, block, paragraph, line) keys in order of first
/// appearance.
pub fn parse_tesseract_tsv(tsv: &str) -> Result<Vec<OcrToken>, OcrError> {
    let mut lines = tsv.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let header = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
    match header {
        Some((_, h)) if h.split('\t').map(str::trim).eq(COLUMNS) => {}
        Some((row, _)) => {
            return Err(OcrError::OutputParseError { row, message: "missing or malformed TSV header".into() })
        }
        None => return Err(OcrError::OutputParseError { row: 1, message: "empty output".into() }),
    }

    let mut line_ids: HashMap<(i64, i64, i64, i64), usize> = HashMap::new();
    let mut words_in_line: Vec<usize> = Vec::new();
    let mut tokens = Vec::new();
    for (row, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS.len() {
            return Err(OcrError::OutputParseError {
                row,
                message: format!("expected {} columns, found {}", COLUMNS.len(), cols.len()),
            });
        }
        let level: i64 = field(cols[0], "level", row)?;
        let key = (
            field(cols[1], "page_num", row)?,
            field(cols[2], "block_num", row)?,
            field(cols[3], "par_num", row)?,
            field(cols[4], "line_num", row)?,
        );
        let bbox = BBox {
            left: field(cols[6], "left", row)?,
            top: field(cols[7], "top", row)?,
            width: field(cols[8], "width", row)?,
            height: field(cols[9], "height", row)?,
        };
        let conf: f64 = field(cols[10], "conf", row)?;
        let text = cols[11].trim();
        if level != WORD_LEVEL || conf < 0.0 || text.is_empty() {
            continue;
        }
        let next_id = line_ids.len();
        let line_index = *line_ids.entry(key).or_insert(next_id);
        if line_index == words_in_line.len() {
            words_in_line.push(0);
        }
        let word_index = words_in_line[line_index];
        words_in_line[line_index] += 1;
        tokens.push(OcrToken { text: text.to_string(), confidence: conf.min(100.0), line_index, word_index, bbox });
    }
    Ok(tokens)
}
