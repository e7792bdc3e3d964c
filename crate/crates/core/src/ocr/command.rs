use std::path::PathBuf;

use super::process::{resolve_program, run_captured, write_temp_image};
use super::{BBox, OcrEngine, OcrError, OcrResult, OcrToken, Page};
use crate::clock::Clock;

/// Any program invoked as `command args... <image.png>` that prints one
/// `confidence<TAB>text` line per recognised text line.
pub struct CommandEngine {
    id: String,
    program: PathBuf,
    args: Vec<String>,
    timeout_s: f64,
    clock: Clock,
}

impl CommandEngine {
    pub fn new(id: &str, command: &str, args: Vec<String>, timeout_s: f64, clock: Clock) -> Result<Self, OcrError> {
        let program = resolve_program(command).ok_or_else(|| OcrError::EngineUnavailable { program: command.into() })?;
        Ok(Self { id: id.into(), program, args, timeout_s, clock })
    }
}

impl OcrEngine for CommandEngine {
    fn id(&self) -> &str {
        &self.id
    }

    fn recognize(&self, page: &Page<'_>) -> Result<OcrResult, OcrError> {
        let timer = self.clock.start();
        let file = write_temp_image(page.image)?;
        let mut args = self.args.clone();
        args.push(file.path().display().to_string());
        let out = run_captured(&self.program, &args, self.timeout_s)?;
        Ok(OcrResult::new(self.id.clone(), parse_command_output(&out)?, timer.elapsed_s()))
    }
}

/// Each whitespace-separated word inherits its line's confidence. Blank
/// lines are skipped; rows are numbered from 1.
pub fn parse_command_output(out: &str) -> Result<Vec<OcrToken>, OcrError> {
    let mut tokens = Vec::new();
    let mut line_index = 0;
    for (i, line) in out.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (conf, text) = line
            .split_once('\t')
            .ok_or_else(|| OcrError::OutputParseError { row, message: "expected `confidence<TAB>text`".into() })?;
        let confidence: f64 = conf
            .trim()
            .parse()
            .ok()
            .filter(|c: &f64| (0.0..=100.0).contains(c))
            .ok_or_else(|| OcrError::OutputParseError { row, message: format!("bad confidence `{conf}`") })?;
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        for (word_index, w) in words.into_iter().enumerate() {
            tokens.push(OcrToken { text: w.into(), confidence, line_index, word_index, bbox: BBox::default() });
        }
        line_index += 1;
    }
    Ok(tokens)
}
