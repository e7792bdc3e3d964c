use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::model::{mae, mse_loss_batch, EnhanceModel};
use super::tensor::{Batch, TensorMap};
use super::CnnError;
use crate::imagecore::{gaussian_blur, GrayImage};

/// Degradation applied to clean images to build self-supervised pairs.
pub const PAIR_BLUR_KERNEL: usize = 3;
pub const PAIR_BLUR_SIGMA: f64 = 1.0;

/// Blurred input and clean target, both on the `[0, 1]` scale.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: TensorMap,
    pub target: TensorMap,
}

pub fn make_training_pair(img: &GrayImage) -> TrainingPair {
    let blurred = gaussian_blur(img, PAIR_BLUR_KERNEL, PAIR_BLUR_SIGMA).expect("fixed blur parameters are valid");
    TrainingPair { input: TensorMap::from_image(&blurred), target: TensorMap::from_image(img) }
}

/// Cuts every pair into non-overlapping `patch × patch` tiles; leftover
/// borders are dropped and pairs smaller than one tile are skipped.
pub fn extract_patches(pairs: &[TrainingPair], patch: usize) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    for pair in pairs {
        let (h, w) = (pair.input.height, pair.input.width);
        for ty in 0..h / patch {
            for tx in 0..w / patch {
                let (x0, y0) = (tx * patch, ty * patch);
                out.push(TrainingPair {
                    input: pair.input.crop(x0, y0, patch, patch),
                    target: pair.target.crop(x0, y0, patch, patch),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { max_epochs: 50, batch_size: 4, patience: 5, val_fraction: 0.1, seed: 42, adam: AdamConfig::default() }
    }
}

/// Per-epoch losses. Epoch numbers are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training-set MSE before the first update.
    pub initial_train_mse: f64,
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub train_mae: Vec<f64>,
    pub val_mae: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse,train_mae,val_mae\n");
        for i in 0..self.train_mse.len() {
            out.push_str(&format!(
                "{},{:.8},{:.8},{:.8},{:.8}\n",
                i + 1,
                self.train_mse[i],
                self.val_mse[i],
                self.train_mae[i],
                self.val_mae[i]
            ));
        }
        out
    }
}

/// Deterministic train/validation split of `n` items.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), CnnError> {
    if n < 2 {
        return Err(CnnError::InvalidTraining(format!("need at least 2 training pairs, got {n}")));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(CnnError::InvalidTraining(format!("validation fraction {val_fraction} must be in (0, 1)")));
    }
    let n_val = ((n as f64 * val_fraction).round() as usize).max(1);
    if n_val >= n {
        return Err(CnnError::InvalidTraining(format!("split of {n} pairs leaves no training data")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val = idx.split_off(n - n_val);
    Ok((idx, val))
}

fn stack(pairs: &[TrainingPair], idx: &[usize]) -> Result<(Batch, Batch), CnnError> {
    let inputs: Vec<&TensorMap> = idx.iter().map(|&i| &pairs[i].input).collect();
    let targets: Vec<&TensorMap> = idx.iter().map(|&i| &pairs[i].target).collect();
    Ok((Batch::stack(&inputs)?, Batch::stack(&targets)?))
}

/// Trains the standard six-layer network from `config.seed`.
pub fn train(pairs: &[TrainingPair], config: &TrainConfig) -> Result<(EnhanceModel, TrainHistory), CnnError> {
    train_model(EnhanceModel::standard(config.seed), pairs, config)
}

/// Adam on MSE with early stopping on validation MSE. Returns the weights of
/// the best validation epoch.
pub fn train_model(
    mut model: EnhanceModel,
    pairs: &[TrainingPair],
    config: &TrainConfig,
) -> Result<(EnhanceModel, TrainHistory), CnnError> {
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(CnnError::InvalidTraining("batch size and epoch count must be positive".into()));
    }
    for p in pairs {
        if p.input.shape() != p.target.shape() {
            return Err(CnnError::ShapeMismatch("training pair input and target differ".into()));
        }
    }
    let (train_idx, val_idx) = split_indices(pairs.len(), config.val_fraction, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let shapes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(config.adam, &shapes);

    let mut history = TrainHistory { initial_train_mse: f64::NAN, ..Default::default() };
    let mut initial = 0.0;
    for chunk in train_idx.chunks(config.batch_size) {
        let (x, y) = stack(pairs, chunk)?;
        let (pred, _) = model.forward_batch(&x, true)?;
        initial += mse_loss_batch(&pred, &y)?.0 * chunk.len() as f64;
    }
    history.initial_train_mse = initial / train_idx.len() as f64;

    let mut best: Option<(f64, EnhanceModel)> = None;
    let mut since_best = 0;
    let mut order = train_idx.clone();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let (mut sum_mse, mut sum_mae) = (0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let (x, y) = stack(pairs, chunk)?;
            let (pred, cache) = model.forward_batch(&x, true)?;
            let (loss, grad) = mse_loss_batch(&pred, &y)?;
            sum_mse += loss * chunk.len() as f64;
            sum_mae += mae(&pred.values, &y.values) * chunk.len() as f64;
            let grads = model.backward(&cache, &grad)?;
            model.update_running_stats(&cache)?;
            adam.step(&mut model.parameters_mut(), &grads.views())?;
        }
        let (mut val_mse, mut val_mae) = (0.0, 0.0);
        for chunk in val_idx.chunks(config.batch_size) {
            let (x, y) = stack(pairs, chunk)?;
            let pred = model.predict(&x)?;
            val_mse += mse_loss_batch(&pred, &y)?.0 * chunk.len() as f64;
            val_mae += mae(&pred.values, &y.values) * chunk.len() as f64;
        }
        let n_train = train_idx.len() as f64;
        let n_val = val_idx.len() as f64;
        history.train_mse.push(sum_mse / n_train);
        history.train_mae.push(sum_mae / n_train);
        history.val_mse.push(val_mse / n_val);
        history.val_mae.push(val_mae / n_val);
        history.stopped_epoch = epoch;
        let val = val_mse / n_val;
        log::info!(
            "epoch {epoch}: train_mse {:.6} val_mse {:.6}",
            history.train_mse.last().copied().unwrap_or(f64::NAN),
            val
        );
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, model.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    let (_, best_model) = best.expect("at least one epoch ran");
    Ok((best_model, history))
}
