//! Six-layer encoder–decoder enhancement network, trained by self-supervised
//! denoising (blurred copy in, original out).
//!
//! Everything runs in `f64`. Convolutions are 3×3, stride 1, zero "same"
//! padding, so spatial dimensions never change:
//!
//! ```text
//! conv 1→32  BN ReLU
//! conv 32→64 BN ReLU
//! conv 64→64 BN ReLU
//! conv 64→64 BN ReLU
//! conv 64→32 BN ReLU
//! conv 32→1  sigmoid
//! ```

mod adam;
mod enhance;
mod layers;
mod model;
mod serialize;
mod tensor;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use enhance::{enhance, predict_image, EnhanceSettings};
pub use layers::{BatchNormLayer, BnBatchStats, ConvLayer};
pub use model::{mae, mse_loss, mse_loss_batch, Activation, Block, EnhanceModel, ForwardCache, Gradients, STANDARD_CHANNELS};
pub use serialize::{decode_model, encode_model, load_model, save_model};
pub use tensor::{Batch, TensorMap};
pub use train::{
    extract_patches, make_training_pair, split_indices, train, train_model, TrainConfig, TrainHistory, TrainingPair,
    PAIR_BLUR_KERNEL, PAIR_BLUR_SIGMA,
};

use thiserror::Error;

use crate::imagecore::ImageError;

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected {expected} input channel(s), found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("stale or mismatched forward cache: {0}")]
    StaleCache(String),
    #[error("invalid training setup: {0}")]
    InvalidTraining(String),
    #[error("model has no batch-norm running statistics; train it first")]
    Untrained,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
