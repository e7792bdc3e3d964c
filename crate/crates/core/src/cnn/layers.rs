//! 3×3 same-padding convolution and batch normalization, forward and
//! backward. Convolutions go through im2col and a dense GEMM.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::Batch;

pub const KSIZE: usize = 3;
const TAPS: usize = KSIZE * KSIZE;

/// `out_channels × in_channels × 3 × 3` kernels plus one bias per output.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * in_channels * TAPS],
            bias: vec![0.0; out_channels],
        }
    }

    /// Kaiming fan-in initialization: weights ~ N(0, 2 / (in·9)), zero bias.
    pub fn kaiming(in_channels: usize, out_channels: usize, rng: &mut impl Rng) -> Self {
        let std = (2.0 / (in_channels * TAPS) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("finite std");
        let mut layer = Self::zeros(in_channels, out_channels);
        for w in &mut layer.weights {
            *w = normal.sample(rng);
        }
        layer
    }

    fn k(&self) -> usize {
        self.in_channels * TAPS
    }

    pub fn forward(&self, input: &Batch) -> Batch {
        let (h, w) = (input.height, input.width);
        let p = h * w;
        let mut out = Batch::zeros(input.samples, self.out_channels, h, w);
        let mut col = vec![0.0; self.k() * p];
        for s in 0..input.samples {
            im2col(input.sample(s), self.in_channels, h, w, &mut col);
            let dst = &mut out.values[s * self.out_channels * p..(s + 1) * self.out_channels * p];
            for (co, plane) in dst.chunks_mut(p).enumerate() {
                plane.fill(self.bias[co]);
            }
            gemm(
                self.out_channels,
                self.k(),
                p,
                &self.weights,
                (self.k() as isize, 1),
                &col,
                (p as isize, 1),
                dst,
                1.0,
            );
        }
        out
    }

    /// Accumulates weight and bias gradients into `dw`/`db` and returns the
    /// input gradient when `need_input_grad` is set.
    pub fn backward(
        &self,
        input: &Batch,
        grad_out: &Batch,
        dw: &mut [f64],
        db: &mut [f64],
        need_input_grad: bool,
    ) -> Option<Batch> {
        let (h, w) = (input.height, input.width);
        let p = h * w;
        let k = self.k();
        let mut col = vec![0.0; k * p];
        let mut dcol = vec![0.0; k * p];
        let mut grad_in = need_input_grad.then(|| Batch::zeros(input.samples, self.in_channels, h, w));
        for s in 0..input.samples {
            let g = grad_out.sample(s);
            for (co, plane) in g.chunks(p).enumerate() {
                db[co] += plane.iter().sum::<f64>();
            }
            im2col(input.sample(s), self.in_channels, h, w, &mut col);
            // dW[co][kk] += Σ_p g[co][p] · col[kk][p]
            gemm(self.out_channels, p, k, g, (p as isize, 1), &col, (1, p as isize), dw, 1.0);
            if let Some(gi) = grad_in.as_mut() {
                // dcol[kk][p] = Σ_co W[co][kk] · g[co][p]
                gemm(k, self.out_channels, p, &self.weights, (1, k as isize), g, (p as isize, 1), &mut dcol, 0.0);
                let dst = &mut gi.values[s * self.in_channels * p..(s + 1) * self.in_channels * p];
                col2im_add(&dcol, self.in_channels, h, w, dst);
            }
        }
        grad_in
    }
}

/// `c = a·b + beta·c` with arbitrary strides for `a` and `b`; `c` is dense
/// row-major `m × n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    beta: f64,
) {
    assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a` (m×k) and `b`
    // (k×n) for every call site in this module, and `c` holds m×n elements.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Zero-padded 3×3 patches: row `ci·9 + ky·3 + kx`, column = output pixel.
fn im2col(sample: &[f64], channels: usize, h: usize, w: usize, col: &mut [f64]) {
    let p = h * w;
    for ci in 0..channels {
        let plane = &sample[ci * p..(ci + 1) * p];
        for ky in 0..KSIZE {
            for kx in 0..KSIZE {
                let row = &mut col[(ci * TAPS + ky * KSIZE + kx) * p..(ci * TAPS + ky * KSIZE + kx + 1) * p];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    let dst = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => {
                            dst[0] = 0.0;
                            dst[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => dst.copy_from_slice(src),
                        _ => {
                            dst[..w - 1].copy_from_slice(&src[1..]);
                            dst[w - 1] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

fn col2im_add(dcol: &[f64], channels: usize, h: usize, w: usize, dst: &mut [f64]) {
    let p = h * w;
    for ci in 0..channels {
        let plane = &mut dst[ci * p..(ci + 1) * p];
        for ky in 0..KSIZE {
            for kx in 0..KSIZE {
                let row = &dcol[(ci * TAPS + ky * KSIZE + kx) * p..(ci * TAPS + ky * KSIZE + kx + 1) * p];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &row[y * w..(y + 1) * w];
                    let out = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => {
                            for x in 1..w {
                                out[x - 1] += src[x];
                            }
                        }
                        1 => {
                            for x in 0..w {
                                out[x] += src[x];
                            }
                        }
                        _ => {
                            for x in 0..w - 1 {
                                out[x + 1] += src[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    /// Set once running statistics have been accumulated from data.
    pub has_running_stats: bool,
}

/// Per-channel statistics of one training-mode batch-norm evaluation.
#[derive(Clone, Debug)]
pub struct BnBatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub xhat: Batch,
}

impl BatchNormLayer {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: 0.9,
            epsilon: 1e-5,
            has_running_stats: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Normalizes with the batch's own (population) statistics.
    pub fn forward_train(&self, z: &Batch) -> (Batch, BnBatchStats) {
        let c = self.channels();
        let p = z.plane();
        let count = (z.samples * p) as f64;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ch in 0..c {
            let mut sum = 0.0;
            for s in 0..z.samples {
                sum += z.values[(s * c + ch) * p..(s * c + ch + 1) * p].iter().sum::<f64>();
            }
            let m = sum / count;
            let mut sq = 0.0;
            for s in 0..z.samples {
                sq += z.values[(s * c + ch) * p..(s * c + ch + 1) * p].iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            mean[ch] = m;
            var[ch] = sq / count;
        }
        let xhat = self.normalize(z, &mean, &var);
        let y = self.affine(&xhat);
        (y, BnBatchStats { mean, var, xhat })
    }

    pub fn forward_infer(&self, z: &Batch) -> Batch {
        let xhat = self.normalize(z, &self.running_mean, &self.running_var);
        self.affine(&xhat)
    }

    fn normalize(&self, z: &Batch, mean: &[f64], var: &[f64]) -> Batch {
        let c = self.channels();
        let p = z.plane();
        let mut out = z.clone();
        for (i, plane) in out.values.chunks_mut(p).enumerate() {
            let ch = i % c;
            let inv = 1.0 / (var[ch] + self.epsilon).sqrt();
            for v in plane {
                *v = (*v - mean[ch]) * inv;
            }
        }
        out
    }

    fn affine(&self, xhat: &Batch) -> Batch {
        let c = self.channels();
        let p = xhat.plane();
        let mut out = xhat.clone();
        for (i, plane) in out.values.chunks_mut(p).enumerate() {
            let ch = i % c;
            for v in plane {
                *v = self.gamma[ch] * *v + self.beta[ch];
            }
        }
        out
    }

    pub fn update_running(&mut self, stats: &BnBatchStats) {
        for ch in 0..self.channels() {
            if self.has_running_stats {
                self.running_mean[ch] = self.momentum * self.running_mean[ch] + (1.0 - self.momentum) * stats.mean[ch];
                self.running_var[ch] = self.momentum * self.running_var[ch] + (1.0 - self.momentum) * stats.var[ch];
            } else {
                self.running_mean[ch] = stats.mean[ch];
                self.running_var[ch] = stats.var[ch];
            }
        }
        self.has_running_stats = true;
    }

    /// Training-mode backward. Accumulates `dgamma`/`dbeta` and returns the
    /// gradient with respect to the pre-normalization input.
    pub fn backward(&self, stats: &BnBatchStats, grad_y: &Batch, dgamma: &mut [f64], dbeta: &mut [f64]) -> Batch {
        let c = self.channels();
        let p = grad_y.plane();
        let count = (grad_y.samples * p) as f64;
        let mut sum_dxhat = vec![0.0; c];
        let mut sum_dxhat_xhat = vec![0.0; c];
        for (i, (g, xh)) in grad_y.values.chunks(p).zip(stats.xhat.values.chunks(p)).enumerate() {
            let ch = i % c;
            let mut sg = 0.0;
            let mut sgx = 0.0;
            for (gv, xv) in g.iter().zip(xh) {
                sg += gv;
                sgx += gv * xv;
            }
            dbeta[ch] += sg;
            dgamma[ch] += sgx;
            sum_dxhat[ch] += sg * self.gamma[ch];
            sum_dxhat_xhat[ch] += sgx * self.gamma[ch];
        }
        let mut dz = grad_y.clone();
        for (i, (dzp, xh)) in dz.values.chunks_mut(p).zip(stats.xhat.values.chunks(p)).enumerate() {
            let ch = i % c;
            let inv = 1.0 / (stats.var[ch] + self.epsilon).sqrt();
            let scale = inv / count;
            for (d, xv) in dzp.iter_mut().zip(xh) {
                let dxhat = *d * self.gamma[ch];
                *d = scale * (count * dxhat - sum_dxhat[ch] - xv * sum_dxhat_xhat[ch]);
            }
        }
        dz
    }
}
