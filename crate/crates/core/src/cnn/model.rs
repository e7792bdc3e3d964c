use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{BatchNormLayer, BnBatchStats, ConvLayer};
use super::tensor::{Batch, TensorMap};
use super::CnnError;

/// Channel widths of the six-layer enhancement network.
pub const STANDARD_CHANNELS: [usize; 7] = [1, 32, 64, 64, 64, 32, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// conv → optional batch norm → activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub conv: ConvLayer,
    pub bn: Option<BatchNormLayer>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnhanceModel {
    blocks: Vec<Block>,
    /// Bumped on every mutable parameter access so stale caches are caught.
    generation: u64,
}

#[derive(Clone, Debug)]
struct BlockCache {
    input: Batch,
    bn: Option<BnBatchStats>,
}

/// Everything `backward` needs from a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    training: bool,
    blocks: Vec<BlockCache>,
    pre_activation: Batch,
    output: Batch,
}

impl ForwardCache {
    /// Final-layer input to the sigmoid.
    pub fn final_pre_activation(&self) -> &Batch {
        &self.pre_activation
    }
}

/// Parameter gradients in the same order as [`EnhanceModel::parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn views(&self) -> Vec<&[f64]> {
        self.tensors.iter().map(Vec::as_slice).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&g| g == 0.0)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn activate(a: Activation, mut b: Batch) -> Batch {
    match a {
        Activation::Relu => b.values.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Sigmoid => b.values.iter_mut().for_each(|v| *v = sigmoid(*v)),
    }
    b
}

impl EnhanceModel {
    /// The six-layer network with Kaiming initialization from `seed`.
    pub fn standard(seed: u64) -> Self {
        Self::with_channels(&STANDARD_CHANNELS, seed).expect("standard channel list is valid")
    }

    /// Hidden blocks are conv+BN+ReLU; the last block is conv+sigmoid.
    pub fn with_channels(channels: &[usize], seed: u64) -> Result<Self, CnnError> {
        if channels.len() < 2 {
            return Err(CnnError::InvalidArchitecture("need at least one layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = channels.len() - 2;
        let blocks = channels
            .windows(2)
            .enumerate()
            .map(|(i, pair)| Block {
                conv: ConvLayer::kaiming(pair[0], pair[1], &mut rng),
                bn: (i < last).then(|| BatchNormLayer::new(pair[1])),
                activation: if i < last { Activation::Relu } else { Activation::Sigmoid },
            })
            .collect();
        Self::from_blocks(blocks)
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, CnnError> {
        let first = blocks.first().ok_or_else(|| CnnError::InvalidArchitecture("no layers".into()))?;
        if first.conv.in_channels != 1 {
            return Err(CnnError::InvalidArchitecture("first layer must take one channel".into()));
        }
        for pair in blocks.windows(2) {
            if pair[0].conv.out_channels != pair[1].conv.in_channels {
                return Err(CnnError::InvalidArchitecture(format!(
                    "layer outputs {} channels but next layer expects {}",
                    pair[0].conv.out_channels, pair[1].conv.in_channels
                )));
            }
        }
        for b in &blocks {
            if b.conv.weights.len() != b.conv.in_channels * b.conv.out_channels * 9
                || b.conv.bias.len() != b.conv.out_channels
            {
                return Err(CnnError::InvalidArchitecture("conv parameter length mismatch".into()));
            }
            if let Some(bn) = &b.bn {
                if bn.channels() != b.conv.out_channels {
                    return Err(CnnError::InvalidArchitecture("batch norm width mismatch".into()));
                }
            }
        }
        let last = blocks.last().expect("non-empty");
        if last.conv.out_channels != 1 || last.activation != Activation::Sigmoid {
            return Err(CnnError::InvalidArchitecture("final layer must be one channel through a sigmoid".into()));
        }
        Ok(Self { blocks, generation: 0 })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mutable access to the layers; invalidates outstanding caches.
    pub fn blocks_mut(&mut self) -> &mut [Block] {
        self.generation += 1;
        &mut self.blocks
    }

    /// Trained means every batch-norm layer carries running statistics.
    pub fn is_trained(&self) -> bool {
        self.blocks.iter().filter_map(|b| b.bn.as_ref()).all(|bn| bn.has_running_stats)
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for b in &self.blocks {
            out.push(&b.conv.weights);
            out.push(&b.conv.bias);
            if let Some(bn) = &b.bn {
                out.push(&bn.gamma);
                out.push(&bn.beta);
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv.weights);
            out.push(&mut b.conv.bias);
            if let Some(bn) = &mut b.bn {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out
    }

    fn check_input(&self, input: &Batch) -> Result<(), CnnError> {
        if input.channels != 1 {
            return Err(CnnError::ChannelMismatch { expected: 1, found: input.channels });
        }
        if input.samples == 0 || input.height == 0 || input.width == 0 {
            return Err(CnnError::ShapeMismatch("empty input".into()));
        }
        Ok(())
    }

    /// Batched forward pass. Training mode normalizes with batch statistics
    /// (running statistics are left untouched, see
    /// [`update_running_stats`](Self::update_running_stats)); inference mode
    /// uses the running statistics.
    pub fn forward_batch(&self, input: &Batch, training: bool) -> Result<(Batch, ForwardCache), CnnError> {
        self.check_input(input)?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut x = input.clone();
        let mut pre = None;
        for (i, block) in self.blocks.iter().enumerate() {
            let z = block.conv.forward(&x);
            let (y, stats) = match &block.bn {
                Some(bn) if training => {
                    let (y, s) = bn.forward_train(&z);
                    (y, Some(s))
                }
                Some(bn) => (bn.forward_infer(&z), None),
                None => (z, None),
            };
            if i + 1 == self.blocks.len() {
                pre = Some(y.clone());
            }
            let a = activate(block.activation, y);
            caches.push(BlockCache { input: std::mem::replace(&mut x, a), bn: stats });
        }
        let cache = ForwardCache {
            generation: self.generation,
            training,
            blocks: caches,
            pre_activation: pre.expect("at least one block"),
            output: x.clone(),
        };
        Ok((x, cache))
    }

    pub fn forward(&self, input: &TensorMap, training: bool) -> Result<(TensorMap, ForwardCache), CnnError> {
        let (out, cache) = self.forward_batch(&Batch::single(input), training)?;
        Ok((out.to_map(0), cache))
    }

    /// Inference-mode forward without keeping intermediate activations.
    pub fn predict(&self, input: &Batch) -> Result<Batch, CnnError> {
        self.check_input(input)?;
        let mut x = input.clone();
        for block in &self.blocks {
            let z = block.conv.forward(&x);
            let y = match &block.bn {
                Some(bn) => bn.forward_infer(&z),
                None => z,
            };
            x = activate(block.activation, y);
        }
        Ok(x)
    }

    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<(), CnnError> {
        self.check_cache(cache)?;
        for (block, bc) in self.blocks.iter_mut().zip(&cache.blocks) {
            if let (Some(bn), Some(stats)) = (block.bn.as_mut(), bc.bn.as_ref()) {
                bn.update_running(stats);
            }
        }
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<(), CnnError> {
        if !cache.training {
            return Err(CnnError::StaleCache("cache comes from an inference-mode pass".into()));
        }
        if cache.generation != self.generation || cache.blocks.len() != self.blocks.len() {
            return Err(CnnError::StaleCache("model parameters changed since the forward pass".into()));
        }
        Ok(())
    }

    /// Backpropagates `loss_grad` (dLoss/dOutput) through the network.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &Batch) -> Result<Gradients, CnnError> {
        self.check_cache(cache)?;
        if !loss_grad.same_shape(&cache.output) {
            return Err(CnnError::ShapeMismatch("loss gradient does not match network output".into()));
        }
        let mut per_block: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.blocks.len());
        let mut grad = loss_grad.clone();
        for i in (0..self.blocks.len()).rev() {
            let block = &self.blocks[i];
            let bc = &cache.blocks[i];
            let activated = if i + 1 == self.blocks.len() { &cache.output } else { &cache.blocks[i + 1].input };
            match block.activation {
                Activation::Relu => {
                    for (g, a) in grad.values.iter_mut().zip(&activated.values) {
                        if *a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                Activation::Sigmoid => {
                    for (g, s) in grad.values.iter_mut().zip(&activated.values) {
                        *g *= s * (1.0 - s);
                    }
                }
            }
            let mut tensors = Vec::new();
            let mut dw = vec![0.0; block.conv.weights.len()];
            let mut db = vec![0.0; block.conv.bias.len()];
            let mut bn_grads = None;
            let dz = match (&block.bn, &bc.bn) {
                (Some(bn), Some(stats)) => {
                    let mut dgamma = vec![0.0; bn.channels()];
                    let mut dbeta = vec![0.0; bn.channels()];
                    let dz = bn.backward(stats, &grad, &mut dgamma, &mut dbeta);
                    bn_grads = Some((dgamma, dbeta));
                    dz
                }
                (None, _) => grad,
                (Some(_), None) => return Err(CnnError::StaleCache("missing batch statistics".into())),
            };
            let next = block.conv.backward(&bc.input, &dz, &mut dw, &mut db, i > 0);
            tensors.push(dw);
            tensors.push(db);
            if let Some((dgamma, dbeta)) = bn_grads {
                tensors.push(dgamma);
                tensors.push(dbeta);
            }
            per_block.push(tensors);
            grad = match next {
                Some(g) => g,
                None => break,
            };
        }
        per_block.reverse();
        Ok(Gradients { tensors: per_block.into_iter().flatten().collect() })
    }
}

/// Mean squared error and its gradient `2(pred − target)/N`.
pub fn mse_loss(pred: &TensorMap, target: &TensorMap) -> Result<(f64, TensorMap), CnnError> {
    if pred.shape() != target.shape() {
        return Err(CnnError::ShapeMismatch(format!("{:?} vs {:?}", pred.shape(), target.shape())));
    }
    let (loss, grad) = mse_values(&pred.values, &target.values);
    Ok((loss, TensorMap { values: grad, ..pred.clone() }))
}

pub fn mse_loss_batch(pred: &Batch, target: &Batch) -> Result<(f64, Batch), CnnError> {
    if !pred.same_shape(target) {
        return Err(CnnError::ShapeMismatch("prediction and target batches differ".into()));
    }
    let (loss, grad) = mse_values(&pred.values, &target.values);
    Ok((loss, Batch { values: grad, ..pred.clone() }))
}

fn mse_values(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    (loss, grad)
}

pub fn mae(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}
