//! Benchmark orchestration: dataset ingestion, pseudo ground truth, the four
//! evaluated methods, and report files.

mod config;
mod dataset;
mod gt;
mod pipeline;
mod report;

pub use config::{Method, RunConfig};
pub use dataset::{ingest_dataset, Dataset, DatasetItem};
pub use gt::{generate_ground_truth, load_ground_truth, write_ground_truth, GroundTruth, GtSidecar};
pub use pipeline::{ImageRecord, Pipeline, ProposedOutput, Stage};
pub use report::{csv_row, emit_report, BenchmarkReport, MethodReport, TierCounts, CSV_HEADER};

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cnn::{extract_patches, make_training_pair, train, CnnError, EnhanceModel, TrainHistory};
use crate::feedback::FeedbackError;
use crate::imagecore::ImageError;
use crate::ocr::OcrError;
use crate::router::assess;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no readable images in {0}")]
    EmptyDataset(PathBuf),
    #[error("no pseudo ground truth for image `{0}`; run `gt` first")]
    MissingGroundTruth(String),
    #[error("proposed_pipeline needs `model_path` pointing at a trained model")]
    MissingModel,
    #[error("external OCR engine is not configured or not installed")]
    ExternalUnavailable,
    #[error("model {0}: {1}")]
    Model(String, #[source] CnnError),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Ocr(#[from] OcrError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtSummary {
    pub images: usize,
    pub mean_agreement: f64,
    pub substitute_vote: bool,
}

/// Builds and writes pseudo ground truth for every dataset image.
pub fn run_ground_truth(cfg: &RunConfig) -> Result<GtSummary, HarnessError> {
    let dataset = ingest_dataset(&cfg.dataset_dir)?;
    let pipeline = Pipeline::new(cfg.clone(), cfg.model_path.is_some())?;
    if pipeline.external.is_none() && pipeline.model.is_none() {
        log::warn!("no external engine and no model: the second vote will be empty");
    }
    let gts: Vec<GroundTruth> =
        with_workers(cfg.workers, || dataset.items.par_iter().map(|item| generate_ground_truth(&pipeline, item)).collect())?;
    for (item, gt) in dataset.items.iter().zip(&gts) {
        write_ground_truth(cfg.gt_dir(), &item.id, gt)?;
    }
    Ok(GtSummary {
        images: gts.len(),
        mean_agreement: gts.iter().map(|g| g.sidecar.agreement).sum::<f64>() / gts.len() as f64,
        substitute_vote: pipeline.external.is_none(),
    })
}

/// Runs every configured method over the dataset and writes the reports to
/// `cfg.output_dir`.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkReport, HarnessError> {
    let dataset = ingest_dataset(&cfg.dataset_dir)?;
    let gts = dataset
        .items
        .iter()
        .map(|item| load_ground_truth(cfg.gt_dir(), &item.id))
        .collect::<Result<Vec<_>, _>>()?;
    let pipeline = Pipeline::new(cfg.clone(), cfg.methods.contains(&Method::ProposedPipeline))?;

    let mut tiers = TierCounts::default();
    for item in &dataset.items {
        tiers.add(assess(&item.image, cfg.thresholds()).tier);
    }

    let mut methods = Vec::new();
    let mut skipped_methods = Vec::new();
    for &method in &cfg.methods {
        if method == Method::ExternalOcr && pipeline.external.is_none() {
            log::warn!("skipping external_ocr: no external engine available");
            skipped_methods.push(method);
            continue;
        }
        let records: Vec<ImageRecord> = with_workers(cfg.workers, || {
            dataset.items.par_iter().zip(&gts).map(|(item, gt)| pipeline.run_method(method, item, gt)).collect()
        })?;
        let report = MethodReport::from_records(method, records);
        if !report.valid {
            log::error!("{} failed on {} of {} images; run marked invalid", method.as_str(), report.failures, report.records.len());
        }
        methods.push(report);
    }
    let report = BenchmarkReport { methods, tiers, skipped_methods, dataset_warnings: dataset.warnings };
    emit_report(&report, &cfg.output_dir)?;
    Ok(report)
}

/// Trains the enhancement network on `train_patch`-sized tiles cut from the
/// images in `dir`.
pub fn train_from_dir(cfg: &RunConfig, dir: &Path) -> Result<(EnhanceModel, TrainHistory), HarnessError> {
    let dataset = ingest_dataset(dir)?;
    let pairs: Vec<_> = dataset.items.iter().map(|i| make_training_pair(&i.image)).collect();
    let mut patches = extract_patches(&pairs, cfg.train_patch);
    if cfg.train_max_patches > 0 && patches.len() > cfg.train_max_patches {
        patches.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        patches.truncate(cfg.train_max_patches);
    }
    log::info!("training on {} patches of {}x{}", patches.len(), cfg.train_patch, cfg.train_patch);
    train(&patches, &cfg.train_config()).map_err(|e| HarnessError::Model(dir.display().to_string(), e))
}
