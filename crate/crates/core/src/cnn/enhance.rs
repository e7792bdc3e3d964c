use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::EnhanceModel;
use super::tensor::{Batch, TensorMap};
use super::CnnError;
use crate::imagecore::{clahe, sharpen, GrayImage};
use crate::router::EnhancementPlan;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceSettings {
    pub clahe_clip_limit: f64,
    /// CLAHE tile grid as (columns, rows).
    pub clahe_tiles: (usize, usize),
    /// Side of the square tiles inference runs on, excluding the halo.
    pub inference_tile: usize,
}

impl Default for EnhanceSettings {
    fn default() -> Self {
        Self { clahe_clip_limit: 2.0, clahe_tiles: (8, 8), inference_tile: 128 }
    }
}

/// Runs the network over `img` in overlapping tiles. Each tile carries a halo
/// as wide as the network's receptive radius, so the result equals a single
/// whole-image pass.
pub fn predict_image(model: &EnhanceModel, img: &GrayImage, tile: usize) -> Result<GrayImage, CnnError> {
    let tile = tile.max(1);
    let halo = model.blocks().len();
    let full = TensorMap::from_image(img);
    let (w, h) = (img.width(), img.height());
    let cores: Vec<(usize, usize)> =
        (0..h).step_by(tile).flat_map(|y| (0..w).step_by(tile).map(move |x| (x, y))).collect();
    let pieces = cores
        .par_iter()
        .map(|&(x0, y0)| {
            let (x1, y1) = ((x0 + tile).min(w), (y0 + tile).min(h));
            let (ex0, ey0) = (x0.saturating_sub(halo), y0.saturating_sub(halo));
            let (ex1, ey1) = ((x1 + halo).min(w), (y1 + halo).min(h));
            let crop = full.crop(ex0, ey0, ex1 - ex0, ey1 - ey0);
            let out = model.predict(&Batch::single(&crop))?.to_map(0);
            Ok(((x0, y0, x1, y1), out.crop(x0 - ex0, y0 - ey0, x1 - x0, y1 - y0)))
        })
        .collect::<Result<Vec<_>, CnnError>>()?;
    let mut data = vec![0.0; w * h];
    for ((x0, y0, x1, y1), piece) in pieces {
        let pw = x1 - x0;
        for y in y0..y1 {
            let src = &piece.values[(y - y0) * pw..(y - y0 + 1) * pw];
            for (x, v) in (x0..x1).zip(src) {
                data[y * w + x] = v * 255.0;
            }
        }
    }
    Ok(GrayImage::from_raw_clamped(w, h, data))
}

/// Applies an enhancement plan: `cnn_passes` network passes, then optional
/// sharpening, then optional CLAHE. A zero-pass plan returns the input.
pub fn enhance(
    model: &EnhanceModel,
    img: &GrayImage,
    plan: &EnhancementPlan,
    settings: &EnhanceSettings,
) -> Result<GrayImage, CnnError> {
    if plan.cnn_passes == 0 {
        return Ok(img.clone());
    }
    if !model.is_trained() {
        return Err(CnnError::Untrained);
    }
    let mut out = img.clone();
    for _ in 0..plan.cnn_passes {
        out = predict_image(model, &out, settings.inference_tile)?;
    }
    if plan.apply_sharpen {
        out = sharpen(&out);
    }
    if plan.apply_clahe_post {
        let tiles = (
            settings.clahe_tiles.0.min(out.width()),
            settings.clahe_tiles.1.min(out.height()),
        );
        out = clahe(&out, settings.clahe_clip_limit, tiles)?;
    }
    Ok(out)
}
