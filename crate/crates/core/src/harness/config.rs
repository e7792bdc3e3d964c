use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::clock::Clock;
use crate::cnn::{AdamConfig, EnhanceSettings, TrainConfig};
use crate::feedback::FeedbackConfig;
use crate::imagecore::NlMeansParams;
use crate::ocr::EngineSpec;
use crate::router::Thresholds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RawTesseract,
    ExternalOcr,
    TesseractPreprocess,
    ProposedPipeline,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::RawTesseract, Method::ExternalOcr, Method::TesseractPreprocess, Method::ProposedPipeline];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RawTesseract => "raw_tesseract",
            Method::ExternalOcr => "external_ocr",
            Method::TesseractPreprocess => "tesseract_preprocess",
            Method::ProposedPipeline => "proposed_pipeline",
        }
    }
}

/// Everything a `gt` or `bench` run needs. Every tunable constant of the
/// pipeline is a top-level key; relative paths resolve against the config
/// file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Where `<id>.gt.txt` / `<id>.gt.json` live; defaults to `dataset_dir`.
    pub gt_dir: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub rules_path: Option<PathBuf>,
    pub seed: u64,
    /// 0 uses one worker per core.
    pub workers: usize,
    pub clock: Clock,
    pub methods: Vec<Method>,

    pub high_threshold: f64,
    pub low_threshold: f64,
    pub confidence_threshold: f64,
    pub max_attempts: u32,
    pub clahe_clip_limit: f64,
    pub clahe_tiles: [usize; 2],
    pub inference_tile: usize,

    pub learning_rate: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub train_patch: usize,
    /// 0 keeps every patch.
    pub train_max_patches: usize,

    pub preprocess_min_side: usize,
    pub nlm_strength: f64,
    pub nlm_template: usize,
    pub nlm_search: usize,
    pub threshold_block: usize,
    pub threshold_c: f64,

    pub tesseract: EngineSpec,
    /// Second baseline engine; `external_ocr` is skipped when unset or not
    /// installed.
    pub external: Option<EngineSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::from("dataset"),
            output_dir: PathBuf::from("out"),
            gt_dir: None,
            model_path: None,
            rules_path: None,
            seed: 42,
            workers: 0,
            clock: Clock::Wall,
            methods: Method::ALL.to_vec(),
            high_threshold: 500.0,
            low_threshold: 150.0,
            confidence_threshold: 70.0,
            max_attempts: 3,
            clahe_clip_limit: 2.0,
            clahe_tiles: [8, 8],
            inference_tile: 128,
            learning_rate: 0.001,
            patience: 5,
            max_epochs: 50,
            batch_size: 4,
            val_fraction: 0.1,
            train_patch: 64,
            train_max_patches: 0,
            preprocess_min_side: 1000,
            nlm_strength: 10.0,
            nlm_template: 7,
            nlm_search: 21,
            threshold_block: 11,
            threshold_c: 2.0,
            tesseract: EngineSpec::tesseract(),
            external: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_dir);
        fix(&mut self.output_dir);
        for p in [&mut self.gt_dir, &mut self.model_path, &mut self.rules_path].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        Thresholds::new(self.high_threshold, self.low_threshold).map_err(|e| HarnessError::Config(e.to_string()))?;
        self.feedback().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods selected".into()));
        }
        if self.clahe_tiles.contains(&0) || self.clahe_clip_limit <= 0.0 {
            return Err(HarnessError::Config("CLAHE needs a positive clip limit and tile grid".into()));
        }
        if self.threshold_block % 2 == 0 || self.threshold_block < 3 {
            return Err(HarnessError::Config("threshold_block must be odd and at least 3".into()));
        }
        if self.preprocess_min_side == 0 || self.inference_tile == 0 || self.train_patch == 0 {
            return Err(HarnessError::Config("sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn gt_dir(&self) -> &Path {
        self.gt_dir.as_deref().unwrap_or(&self.dataset_dir)
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { high: self.high_threshold, low: self.low_threshold }
    }

    pub fn feedback(&self) -> FeedbackConfig {
        FeedbackConfig { threshold: self.confidence_threshold, max_attempts: self.max_attempts }
    }

    pub fn enhance_settings(&self) -> EnhanceSettings {
        EnhanceSettings {
            clahe_clip_limit: self.clahe_clip_limit,
            clahe_tiles: (self.clahe_tiles[0], self.clahe_tiles[1]),
            inference_tile: self.inference_tile,
        }
    }

    pub fn nl_means(&self) -> NlMeansParams {
        NlMeansParams { strength: self.nlm_strength, template: self.nlm_template, search: self.nlm_search }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            val_fraction: self.val_fraction,
            seed: self.seed,
            adam: AdamConfig { lr: self.learning_rate, ..AdamConfig::default() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_pipeline_constants() {
        let cfg = RunConfig::from_toml("", Path::new("/base")).unwrap();
        assert_eq!((cfg.high_threshold, cfg.low_threshold), (500.0, 150.0));
        assert_eq!((cfg.confidence_threshold, cfg.max_attempts), (70.0, 3));
        assert_eq!((cfg.clahe_clip_limit, cfg.clahe_tiles), (2.0, [8, 8]));
        assert_eq!((cfg.learning_rate, cfg.patience, cfg.preprocess_min_side), (0.001, 5, 1000));
        assert_eq!(cfg.dataset_dir, PathBuf::from("/base/dataset"));
        assert_eq!(cfg.tesseract, EngineSpec::tesseract());
    }

    #[test]
    fn keys_override_and_validate() {
        let cfg = RunConfig::from_toml(
            "dataset_dir = \"/data\"\nmethods = [\"raw_tesseract\"]\nclock = \"frozen\"\n[tesseract]\nkind = \"mock\"\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(cfg.dataset_dir, PathBuf::from("/data"));
        assert_eq!(cfg.methods, vec![Method::RawTesseract]);
        assert_eq!(cfg.clock, Clock::Frozen);
        assert!(matches!(cfg.tesseract, EngineSpec::Mock(_)));
        assert!(RunConfig::from_toml("high_threshold = 100.0", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("max_attempts = 0", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("unknown_key = 1", Path::new(".")).is_err());
    }
}
