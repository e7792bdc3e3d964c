use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::DatasetItem;
use super::pipeline::Pipeline;
use super::HarnessError;
use crate::ensemble::{tokenize, vote_sequences};

/// JSON sidecar stored next to each pseudo ground truth text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtSidecar {
    pub agreement: f64,
    /// Voters in priority order.
    pub engine_ids: Vec<String>,
    pub center: usize,
    /// The second vote came from the proposed pipeline's uncorrected output
    /// because no external engine was available.
    pub substitute_vote: bool,
    /// Voters that failed and contributed an empty token sequence.
    pub failed_engines: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub text: String,
    pub sidecar: GtSidecar,
}

/// Votes raw engine output, the external engine (or the proposed
/// pipeline's uncorrected output when it is missing) and the preprocessed
/// baseline, in that priority order.
pub fn generate_ground_truth(pipeline: &Pipeline, item: &DatasetItem) -> GroundTruth {
    let substitute_vote = pipeline.external.is_none();
    let second_id = if substitute_vote { "proposed_uncorrected" } else { "external" };
    let voters: [(&str, Box<dyn Fn() -> Result<String, HarnessError> + '_>); 3] = [
        ("tesseract", Box::new(|| Ok(pipeline.run_raw(item)?.text()))),
        (
            second_id,
            Box::new(move || {
                if substitute_vote {
                    Ok(pipeline.run_proposed(item)?.result.text())
                } else {
                    Ok(pipeline.run_external(item)?.text())
                }
            }),
        ),
        ("tesseract_preprocess", Box::new(|| Ok(pipeline.run_preprocess(item)?.text()))),
    ];
    let mut failed_engines = Vec::new();
    let seqs: Vec<Vec<String>> = voters
        .iter()
        .map(|(id, run)| match run() {
            Ok(text) => tokenize(&text),
            Err(e) => {
                log::warn!("ground truth voter {id} failed on {}: {e}", item.id);
                failed_engines.push(id.to_string());
                Vec::new()
            }
        })
        .collect();
    let engine_ids: Vec<String> = voters.iter().map(|(id, _)| id.to_string()).collect();
    let gt = vote_sequences([&seqs[0], &seqs[1], &seqs[2]], engine_ids);
    GroundTruth {
        text: gt.text(),
        sidecar: GtSidecar {
            agreement: gt.agreement,
            engine_ids: gt.engine_ids,
            center: gt.center,
            substitute_vote,
            failed_engines,
        },
    }
}

pub fn write_ground_truth(dir: &Path, id: &str, gt: &GroundTruth) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let txt = dir.join(format!("{id}.gt.txt"));
    fs::write(&txt, &gt.text).map_err(|e| HarnessError::io(&txt, e))?;
    let json = dir.join(format!("{id}.gt.json"));
    let body = serde_json::to_string_pretty(&gt.sidecar).map_err(|e| HarnessError::Json(e.to_string()))?;
    fs::write(&json, body).map_err(|e| HarnessError::io(&json, e))
}

pub fn load_ground_truth(dir: &Path, id: &str) -> Result<GroundTruth, HarnessError> {
    let txt = dir.join(format!("{id}.gt.txt"));
    let json = dir.join(format!("{id}.gt.json"));
    if !txt.is_file() || !json.is_file() {
        return Err(HarnessError::MissingGroundTruth(id.to_string()));
    }
    let text = fs::read_to_string(&txt).map_err(|e| HarnessError::io(&txt, e))?;
    let body = fs::read_to_string(&json).map_err(|e| HarnessError::io(&json, e))?;
    let sidecar = serde_json::from_str(&body).map_err(|e| HarnessError::Json(format!("{}: {e}", json.display())))?;
    Ok(GroundTruth { text, sidecar })
}
