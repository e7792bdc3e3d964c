//! Engine-agnostic OCR: the token model, an adapter for the `tesseract` CLI,
//! an adapter for arbitrary "confidence<TAB>text" commands, and a
//! deterministic mock engine for hermetic runs.

mod command;
mod mock;
mod process;
mod tesseract;

pub use command::{parse_command_output, CommandEngine};
pub use mock::{ConfidenceRule, MockEngine, MockProfile, MockText, ScriptedEngine};
pub use process::{resolve_program, write_temp_image};
pub use tesseract::{parse_tesseract_tsv, TesseractEngine, TESSERACT_ARGS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::imagecore::{GrayImage, ImageError};

pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Debug, Error)]
pub enum OcrError {
    #[error("OCR engine `{program}` is not available")]
    EngineUnavailable { program: String },
    #[error("OCR engine `{program}` timed out after {seconds} s")]
    EngineTimeout { program: String, seconds: f64 },
    #[error("could not parse engine output at row {row}: {message}")]
    OutputParseError { row: usize, message: String },
    #[error("OCR engine `{program}` exited with {status}: {stderr}")]
    EngineFailed { program: String, status: String, stderr: String },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub left: i64,
    pub top: i64,
    pub width: i64,
    pub height: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcrToken {
    pub text: String,
    /// Percent, 0–100.
    pub confidence: f64,
    pub line_index: usize,
    pub word_index: usize,
    pub bbox: BBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub tokens: Vec<OcrToken>,
    pub mean_confidence: f64,
    pub engine_id: String,
    pub elapsed: f64,
}

impl OcrResult {
    /// Sorts tokens into reading order and derives the mean confidence.
    pub fn new(engine_id: impl Into<String>, mut tokens: Vec<OcrToken>, elapsed: f64) -> Self {
        tokens.sort_by_key(|t| (t.line_index, t.word_index));
        let mean_confidence = mean_confidence(&tokens);
        Self { tokens, mean_confidence, engine_id: engine_id.into(), elapsed: elapsed.max(0.0) }
    }

    /// Tokens joined by spaces within a line and newlines between lines.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let mut current = None;
        for t in &self.tokens {
            match current {
                Some(line) if line == t.line_index => out.push(' '),
                Some(_) => out.push('\n'),
                None => {}
            }
            out.push_str(&t.text);
            current = Some(t.line_index);
        }
        out
    }
}

pub fn mean_confidence(tokens: &[OcrToken]) -> f64 {
    if tokens.is_empty() {
        0.0
    } else {
        tokens.iter().map(|t| t.confidence).sum::<f64>() / tokens.len() as f64
    }
}

/// What an engine sees for one page. `transcript` is only consulted by the
/// mock engine.
#[derive(Clone, Copy, Debug)]
pub struct Page<'a> {
    pub image: &'a GrayImage,
    pub transcript: Option<&'a str>,
}

impl<'a> Page<'a> {
    pub fn new(image: &'a GrayImage) -> Self {
        Self { image, transcript: None }
    }
}

pub trait OcrEngine: Send + Sync {
    fn id(&self) -> &str;
    fn recognize(&self, page: &Page<'_>) -> Result<OcrResult, OcrError>;
}

/// Serializable engine description, as found in run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineSpec {
    ExternalTesseract {
        #[serde(default = "default_tesseract")]
        command: String,
        #[serde(default = "default_tesseract_args")]
        args: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_s: f64,
    },
    ExternalCommand {
        command: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_s: f64,
    },
    Mock(MockProfile),
}

fn default_tesseract() -> String {
    "tesseract".into()
}

fn default_tesseract_args() -> Vec<String> {
    TESSERACT_ARGS.iter().map(|s| s.to_string()).collect()
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl EngineSpec {
    pub fn tesseract() -> Self {
        EngineSpec::ExternalTesseract {
            command: default_tesseract(),
            args: default_tesseract_args(),
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }

    /// Instantiates the engine; external kinds must resolve to an executable.
    pub fn build(&self, id: &str, clock: Clock) -> Result<Box<dyn OcrEngine>, OcrError> {
        Ok(match self {
            EngineSpec::ExternalTesseract { command, args, timeout_s } => {
                Box::new(TesseractEngine::new(id, command, args.clone(), *timeout_s, clock)?)
            }
            EngineSpec::ExternalCommand { command, args, timeout_s } => {
                Box::new(CommandEngine::new(id, command, args.clone(), *timeout_s, clock)?)
            }
            EngineSpec::Mock(profile) => Box::new(MockEngine::new(id, profile.clone(), clock)),
        })
    }
}

/// One-shot convenience: build `spec` and run it on `img`.
pub fn recognize(spec: &EngineSpec, img: &GrayImage) -> Result<OcrResult, OcrError> {
    spec.build("engine", Clock::Wall)?.recognize(&Page::new(img))
}
