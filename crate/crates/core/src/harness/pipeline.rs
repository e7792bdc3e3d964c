use serde::{Deserialize, Serialize};

use super::config::{Method, RunConfig};
use super::dataset::DatasetItem;
use super::gt::GroundTruth;
use super::HarnessError;
use crate::cnn::{enhance, load_model, EnhanceModel};
use crate::feedback::{run_with_retries, AttemptLog};
use crate::imagecore::{
    adaptive_gaussian_threshold, laplacian_variance, nl_means_denoise, psnr, resize_min_side, GrayImage, PsnrValue,
};
use crate::metrics::{FieldPatternSet, MetricsRecord};
use crate::ocr::{OcrEngine, OcrResult, Page};
use crate::postcorrect::{correct, CorrectedText, CorrectionRuleSet, Edit};
use crate::router::{assess, EnhancementPlan, QualityAssessment};

/// Processing stages of the proposed pipeline, in the order they run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingestion,
    QualityAnalysis,
    Enhancement,
    OcrExtraction,
    FeedbackLoop,
    PostCorrection,
}

impl Stage {
    pub const ORDER: [Stage; 6] = [
        Stage::Ingestion,
        Stage::QualityAnalysis,
        Stage::Enhancement,
        Stage::OcrExtraction,
        Stage::FeedbackLoop,
        Stage::PostCorrection,
    ];
}

#[derive(Clone, Debug)]
pub struct ProposedOutput {
    pub assessment: QualityAssessment,
    /// Enhanced against pre-enhancement image; not applicable when the
    /// plan skips the network.
    pub psnr: PsnrValue,
    /// Best attempt, before correction.
    pub result: OcrResult,
    pub attempts: AttemptLog,
    pub corrected: CorrectedText,
    pub trace: Vec<Stage>,
}

/// One image under one method, as stored in `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub method: Method,
    /// Absent when the method failed on this image.
    pub metrics: Option<MetricsRecord>,
    pub error: Option<String>,
    pub text: String,
    pub uncorrected_text: Option<String>,
    pub corrections: Vec<Edit>,
    pub variance: f64,
    pub plan: Option<EnhancementPlan>,
    pub attempts: Option<AttemptLog>,
    pub gt_agreement: f64,
    pub trace: Vec<Stage>,
}

/// Engines, model and rules shared by every image of a run.
pub struct Pipeline {
    pub config: RunConfig,
    pub tesseract: Box<dyn OcrEngine>,
    pub external: Option<Box<dyn OcrEngine>>,
    pub model: Option<EnhanceModel>,
    pub rules: CorrectionRuleSet,
    pub fields: FieldPatternSet,
}

impl Pipeline {
    /// Builds the engines and loads the model and rule set the config asks
    /// for. A missing external engine only disables `external_ocr`.
    pub fn new(config: RunConfig, need_model: bool) -> Result<Self, HarnessError> {
        let tesseract = config.tesseract.build("tesseract", config.clock)?;
        let external = match &config.external {
            Some(spec) => match spec.build("external", config.clock) {
                Ok(engine) => Some(engine),
                Err(e) => {
                    log::warn!("external engine unavailable: {e}");
                    None
                }
            },
            None => None,
        };
        let model = if need_model {
            let path = config.model_path.as_ref().ok_or(HarnessError::MissingModel)?;
            let model = load_model(path).map_err(|e| HarnessError::Model(path.display().to_string(), e))?;
            Some(model)
        } else {
            None
        };
        let rules = match &config.rules_path {
            Some(p) => CorrectionRuleSet::load(p).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
            None => CorrectionRuleSet::default(),
        };
        Ok(Self { config, tesseract, external, model, rules, fields: FieldPatternSet::default() })
    }

    fn page<'a>(img: &'a GrayImage, item: &'a DatasetItem) -> Page<'a> {
        Page { image: img, transcript: item.transcript.as_deref() }
    }

    pub fn run_raw(&self, item: &DatasetItem) -> Result<OcrResult, HarnessError> {
        Ok(self.tesseract.recognize(&Self::page(&item.image, item))?)
    }

    pub fn run_external(&self, item: &DatasetItem) -> Result<OcrResult, HarnessError> {
        let engine = self.external.as_ref().ok_or(HarnessError::ExternalUnavailable)?;
        Ok(engine.recognize(&Self::page(&item.image, item))?)
    }

    /// Resolution normalization, non-local means, adaptive thresholding.
    pub fn preprocess(&self, img: &GrayImage) -> Result<GrayImage, HarnessError> {
        let c = &self.config;
        let resized = resize_min_side(img, c.preprocess_min_side);
        let denoised = nl_means_denoise(&resized, c.nl_means())?;
        Ok(adaptive_gaussian_threshold(&denoised, c.threshold_block, c.threshold_c)?)
    }

    pub fn run_preprocess(&self, item: &DatasetItem) -> Result<OcrResult, HarnessError> {
        let img = self.preprocess(&item.image)?;
        Ok(self.tesseract.recognize(&Self::page(&img, item))?)
    }

    pub fn run_proposed(&self, item: &DatasetItem) -> Result<ProposedOutput, HarnessError> {
        let model = self.model.as_ref().ok_or(HarnessError::MissingModel)?;
        let mut trace = vec![Stage::Ingestion];
        let img = &item.image;

        trace.push(Stage::QualityAnalysis);
        let assessment = assess(img, self.config.thresholds());

        trace.push(Stage::Enhancement);
        let enhanced = enhance(model, img, &assessment.plan, &self.config.enhance_settings())
            .map_err(|e| HarnessError::Model("enhancement".into(), e))?;
        let psnr = if assessment.plan.cnn_passes >= 1 { psnr(img, &enhanced)? } else { PsnrValue::NotApplicable };

        trace.push(Stage::OcrExtraction);
        trace.push(Stage::FeedbackLoop);
        let (result, attempts) =
            run_with_retries(self.tesseract.as_ref(), &enhanced, item.transcript.as_deref(), &self.config.feedback())?;

        trace.push(Stage::PostCorrection);
        let corrected = correct(&result.text(), &self.rules);
        Ok(ProposedOutput { assessment, psnr, result, attempts, corrected, trace })
    }

    /// Runs `method` on one image and scores it against `gt`. Failures are
    /// captured in the record rather than returned.
    pub fn run_method(&self, method: Method, item: &DatasetItem, gt: &GroundTruth) -> ImageRecord {
        let timer = self.config.clock.start();
        let variance = laplacian_variance(&item.image);
        let tier = assess(&item.image, self.config.thresholds()).tier;
        let mut record = ImageRecord {
            id: item.id.clone(),
            method,
            metrics: None,
            error: None,
            text: String::new(),
            uncorrected_text: None,
            corrections: Vec::new(),
            variance,
            plan: None,
            attempts: None,
            gt_agreement: gt.sidecar.agreement,
            trace: Vec::new(),
        };
        let outcome = match method {
            Method::RawTesseract => self.run_raw(item).map(|r| (r, PsnrValue::NotApplicable)),
            Method::ExternalOcr => self.run_external(item).map(|r| (r, PsnrValue::NotApplicable)),
            Method::TesseractPreprocess => self.run_preprocess(item).map(|r| (r, PsnrValue::NotApplicable)),
            Method::ProposedPipeline => self.run_proposed(item).map(|out| {
                record.uncorrected_text = Some(out.result.text());
                record.text = out.corrected.text.clone();
                record.corrections = out.corrected.applied_rules;
                record.plan = Some(out.assessment.plan);
                record.attempts = Some(out.attempts);
                record.trace = out.trace;
                (out.result, out.psnr)
            }),
        };
        match outcome {
            Ok((result, psnr)) => {
                if method != Method::ProposedPipeline {
                    record.text = result.text();
                }
                record.metrics = Some(MetricsRecord::score(
                    &item.id,
                    &record.text,
                    &gt.text,
                    result.mean_confidence,
                    psnr,
                    timer.elapsed_s(),
                    tier,
                    &self.fields,
                ));
            }
            Err(e) => {
                log::warn!("{} failed on {}: {e}", method.as_str(), item.id);
                record.error = Some(e.to_string());
            }
        }
        record
    }
}
