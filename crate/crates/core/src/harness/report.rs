use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Method;
use super::pipeline::ImageRecord;
use super::HarnessError;
use crate::imagecore::PsnrValue;
use crate::metrics::{aggregate, AggregateRow, MetricsRecord};
use crate::router::QualityTier;

pub const CSV_HEADER: &str = "method,cer,wer,conf,psnr_db,psnr_n,field_rate,density,noise_ratio,time_s";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub records: Vec<ImageRecord>,
    pub failures: usize,
    /// False when more than half of the images failed.
    pub valid: bool,
    /// Means over the images that succeeded.
    pub summary: Option<AggregateRow>,
}

impl MethodReport {
    pub fn from_records(method: Method, records: Vec<ImageRecord>) -> Self {
        let failures = records.iter().filter(|r| r.metrics.is_none()).count();
        let valid = failures * 2 <= records.len();
        let scored: Vec<MetricsRecord> = records.iter().filter_map(|r| r.metrics.clone()).collect();
        Self { method, summary: aggregate(&scored).ok(), records, failures, valid }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub high: usize,
    pub medium: usize,
    pub low: usize,
}

impl TierCounts {
    pub fn add(&mut self, tier: QualityTier) {
        match tier {
            QualityTier::High => self.high += 1,
            QualityTier::Medium => self.medium += 1,
            QualityTier::Low => self.low += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.high + self.medium + self.low
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub methods: Vec<MethodReport>,
    pub tiers: TierCounts,
    pub skipped_methods: Vec<Method>,
    pub dataset_warnings: Vec<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

pub fn csv_row(method: Method, summary: Option<&AggregateRow>) -> String {
    let Some(s) = summary else {
        return format!("{},NA,NA,NA,NA,0,NA,NA,NA,NA", method.as_str());
    };
    let psnr = match s.psnr {
        PsnrValue::Finite(db) if s.psnr_n > 0 => format!("{db:.6}"),
        _ => "NA".to_string(),
    };
    format!(
        "{},{},{},{:.6},{},{},{:.6},{:.6},{:.6},{:.6}",
        method.as_str(),
        cell(s.cer),
        cell(s.wer),
        s.mean_confidence,
        psnr,
        s.psnr_n,
        s.field_extraction,
        s.text_density,
        s.noise_ratio,
        s.elapsed
    )
}

impl BenchmarkReport {
    pub fn csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for m in &self.methods {
            out.push_str(&csv_row(m.method, m.summary.as_ref()));
            out.push('\n');
        }
        out
    }

    pub fn tiers_csv(&self) -> String {
        let t = &self.tiers;
        let total = t.total().max(1) as f64;
        let mut out = String::from("tier,count,fraction\n");
        for (tier, n) in [(QualityTier::High, t.high), (QualityTier::Medium, t.medium), (QualityTier::Low, t.low)] {
            out.push_str(&format!("{tier},{n},{:.6}\n", n as f64 / total));
        }
        out
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Json(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Json(e.to_string()))
    }

    /// Recomputes every method summary from its per-image records.
    pub fn reaggregated(&self) -> Self {
        let methods = self.methods.iter().map(|m| MethodReport::from_records(m.method, m.records.clone())).collect();
        Self { methods, ..self.clone() }
    }
}

/// Writes `report.csv`, `report.json` and `tiers.csv` into `dir`.
pub fn emit_report(report: &BenchmarkReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for (name, body) in
        [("report.csv", report.csv()), ("report.json", report.to_json()?), ("tiers.csv", report.tiers_csv())]
    {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, psnr: PsnrValue, ok: bool) -> ImageRecord {
        ImageRecord {
            id: id.into(),
            method: Method::ProposedPipeline,
            metrics: ok.then(|| MetricsRecord {
                image_id: id.into(),
                cer: Some(0.25),
                wer: Some(0.5),
                mean_confidence: 80.0,
                psnr,
                field_extraction: 0.6,
                text_density: 12,
                noise_ratio: 0.01,
                elapsed: 0.0,
                tier: QualityTier::High,
            }),
            error: (!ok).then(|| "boom".to_string()),
            text: String::new(),
            uncorrected_text: None,
            corrections: vec![],
            variance: 0.0,
            plan: None,
            attempts: None,
            gt_agreement: 1.0,
            trace: vec![],
        }
    }

    #[test]
    fn single_image_single_row() {
        let report = BenchmarkReport {
            methods: vec![MethodReport::from_records(Method::ProposedPipeline, vec![record("a", PsnrValue::NotApplicable, true)])],
            tiers: TierCounts { high: 1, ..Default::default() },
            skipped_methods: vec![],
            dataset_warnings: vec![],
        };
        let csv = report.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "proposed_pipeline,0.250000,0.500000,80.000000,NA,0,0.600000,12.000000,0.010000,0.000000");
        assert_eq!(report.tiers_csv(), "tier,count,fraction\nHIGH,1,1.000000\nMEDIUM,0,0.000000\nLOW,0,0.000000\n");
    }

    #[test]
    fn failures_mark_run_invalid() {
        let recs = vec![record("a", PsnrValue::Finite(30.0), true), record("b", PsnrValue::NotApplicable, false), record("c", PsnrValue::NotApplicable, false)];
        let m = MethodReport::from_records(Method::ProposedPipeline, recs);
        assert_eq!(m.failures, 2);
        assert!(!m.valid);
        assert_eq!(m.summary.as_ref().unwrap().psnr_n, 1);
        let all_failed = MethodReport::from_records(Method::RawTesseract, vec![record("a", PsnrValue::NotApplicable, false)]);
        assert_eq!(csv_row(Method::RawTesseract, all_failed.summary.as_ref()), "raw_tesseract,NA,NA,NA,NA,0,NA,NA,NA,NA");
    }

    #[test]
    fn json_reaggregation_reproduces_csv() {
        let recs = vec![record("a", PsnrValue::Finite(31.123456789), true), record("b", PsnrValue::Finite(20.1), true)];
        let report = BenchmarkReport {
            methods: vec![MethodReport::from_records(Method::ProposedPipeline, recs)],
            tiers: TierCounts::default(),
            skipped_methods: vec![],
            dataset_warnings: vec![],
        };
        let parsed = BenchmarkReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(parsed.reaggregated().csv(), report.csv());
        assert_eq!(parsed, report);
    }
}
