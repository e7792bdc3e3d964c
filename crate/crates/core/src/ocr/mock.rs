use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BBox, OcrEngine, OcrError, OcrResult, OcrToken, Page};
use crate::clock::Clock;
use crate::imagecore::{laplacian_variance, GrayImage};

/// How the mock engine scores a page.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ConfidenceRule {
    Fixed { value: f64 },
    /// `min(cap, laplacian_variance / divisor)`.
    Sharpness { divisor: f64, cap: f64 },
}

impl Default for ConfidenceRule {
    fn default() -> Self {
        ConfidenceRule::Sharpness { divisor: 10.0, cap: 95.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockText {
    /// Pseudo-receipt text derived from the image content hash.
    #[default]
    Fingerprint,
    /// The page transcript, corrupted in proportion to `100 - confidence`.
    /// Falls back to `Fingerprint` when the page has no transcript.
    Transcript,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockProfile {
    #[serde(default)]
    pub confidence: ConfidenceRule,
    #[serde(default)]
    pub text: MockText,
    /// Per-character error probability at confidence 0.
    #[serde(default = "default_corruption")]
    pub corruption: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_corruption() -> f64 {
    0.6
}

impl Default for MockProfile {
    fn default() -> Self {
        Self { confidence: ConfidenceRule::default(), text: MockText::default(), corruption: default_corruption(), seed: 0 }
    }
}

/// Deterministic stand-in for a real engine: the output is a pure function
/// of the image content, the profile and the page transcript.
pub struct MockEngine {
    id: String,
    profile: MockProfile,
    clock: Clock,
}

const VOCAB: [&str; 24] = [
    "TOTAL", "SUBTOTAL", "CASH", "CHANGE", "TAX", "QTY", "ITEM", "RECEIPT", "INVOICE", "DISCOUNT", "MILK", "BREAD",
    "RICE", "SUGAR", "TEA", "SOAP", "EGGS", "OIL", "STORE", "MART", "THANK", "YOU", "DATE", "BILL",
];

fn confusion(c: char, rng: &mut ChaCha8Rng) -> char {
    match c {
        'O' => '0',
        '0' => 'O',
        'I' => '1',
        '1' => 'I',
        'l' => '1',
        'S' => '5',
        '5' => 'S',
        'B' => '8',
        '8' => 'B',
        'e' => 'c',
        'a' => 'o',
        'n' => 'm',
        _ => ['~', '^', '|', '`', '_'][rng.random_range(0..5)],
    }
}

impl MockEngine {
    pub fn new(id: &str, profile: MockProfile, clock: Clock) -> Self {
        Self { id: id.into(), profile, clock }
    }

    pub fn profile(&self) -> &MockProfile {
        &self.profile
    }

    pub fn confidence_for(&self, img: &GrayImage) -> f64 {
        match self.profile.confidence {
            ConfidenceRule::Fixed { value } => value.clamp(0.0, 100.0),
            ConfidenceRule::Sharpness { divisor, cap } => {
                (laplacian_variance(img) / divisor.max(f64::MIN_POSITIVE)).min(cap).clamp(0.0, 100.0)
            }
        }
    }

    fn fingerprint_lines(rng: &mut ChaCha8Rng) -> Vec<String> {
        let n_lines = rng.random_range(1..=4);
        (0..n_lines)
            .map(|_| {
                let n_words = rng.random_range(1..=4);
                let mut words: Vec<String> =
                    (0..n_words).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect();
                if rng.random_bool(0.5) {
                    words.push(format!("{}.{:02}", rng.random_range(1..500), rng.random_range(0..100)));
                }
                words.join(" ")
            })
            .collect()
    }

    fn corrupt(&self, line: &str, conf: f64, rng: &mut ChaCha8Rng) -> String {
        let p = (self.profile.corruption * (100.0 - conf) / 100.0).clamp(0.0, 1.0);
        line.chars().map(|c| if !c.is_whitespace() && rng.random_bool(p) { confusion(c, rng) } else { c }).collect()
    }
}

impl OcrEngine for MockEngine {
    fn id(&self) -> &str {
        &self.id
    }

    fn recognize(&self, page: &Page<'_>) -> Result<OcrResult, OcrError> {
        let timer = self.clock.start();
        let (lo, hi) = page.image.min_max();
        if hi - lo < 1.0 {
            return Ok(OcrResult::new(self.id.clone(), Vec::new(), timer.elapsed_s()));
        }
        let conf = self.confidence_for(page.image);
        let mut rng = ChaCha8Rng::seed_from_u64(page.image.content_hash() ^ self.profile.seed);
        let lines: Vec<String> = match (self.profile.text, page.transcript) {
            (MockText::Transcript, Some(t)) => t.lines().map(|l| self.corrupt(l, conf, &mut rng)).collect(),
            _ => Self::fingerprint_lines(&mut rng),
        };
        let mut tokens = Vec::new();
        let mut line_index = 0;
        for line in &lines {
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            for (word_index, w) in words.into_iter().enumerate() {
                tokens.push(OcrToken {
                    text: w.to_string(),
                    confidence: conf,
                    line_index,
                    word_index,
                    bbox: BBox::default(),
                });
            }
            line_index += 1;
        }
        Ok(OcrResult::new(self.id.clone(), tokens, timer.elapsed_s()))
    }
}

/// Returns a fixed confidence sequence, one entry per call (the last entry
/// repeats), and remembers the content hash of every image it was shown.
pub struct ScriptedEngine {
    id: String,
    confidences: Vec<f64>,
    calls: AtomicUsize,
    seen: Mutex<Vec<u64>>,
}

impl ScriptedEngine {
    pub fn new(id: &str, confidences: Vec<f64>) -> Self {
        assert!(!confidences.is_empty(), "scripted engine needs at least one confidence");
        Self { id: id.into(), confidences, calls: AtomicUsize::new(0), seen: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn seen(&self) -> Vec<u64> {
        self.seen.lock().expect("scripted engine lock").clone()
    }
}

impl OcrEngine for ScriptedEngine {
    fn id(&self) -> &str {
        &self.id
    }

    fn recognize(&self, page: &Page<'_>) -> Result<OcrResult, OcrError> {
        let k = self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().expect("scripted engine lock").push(page.image.content_hash());
        let confidence = self.confidences[k.min(self.confidences.len() - 1)];
        let token = OcrToken {
            text: format!("ATTEMPT{}", k + 1),
            confidence,
            line_index: 0,
            word_index: 0,
            bbox: BBox::default(),
        };
        Ok(OcrResult::new(self.id.clone(), vec![token], 0.0))
    }
}
