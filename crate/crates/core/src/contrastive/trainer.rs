//! Desk-scale SimCLR pre-training loop.
//!
//! Each epoch shuffles the dataset, and for every sample draws a fresh view
//! pair from its own random stream (derived from the master seed, the epoch
//! and the sample index). Both views go through the shared encoder and the
//! projector, NT-Xent gradients are backpropagated, and parameters move by
//! momentum SGD under a linear warm-up then cosine learning-rate schedule.
//!
//! Inputs are expected to be z-normalised by the caller.

use rand::seq::SliceRandom;

use super::loss::{nt_xent, EmbeddingBatch, NtXentConfig};
use super::network::{EncoderSpec, SimclrModel};
use crate::augment::ViewPrep;
use crate::cepstrogram::CCGram;
use crate::error::{Error, Result};
use crate::nn::{warmup_cosine_lr, SgdMomentum};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Fraction of epochs spent in linear warm-up.
    pub warmup_fraction: f64,
    pub ntxent: NtXentConfig,
    pub prep: ViewPrep,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 1e-6,
            warmup_fraction: 0.1,
            ntxent: NtXentConfig::default(),
            prep: ViewPrep::default(),
        }
    }
}

impl PretrainConfig {
    pub fn warmup_epochs(&self) -> usize {
        (self.warmup_fraction * self.epochs as f64).ceil() as usize
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub model: SimclrModel,
    /// Mean batch loss per epoch.
    pub history: Vec<f64>,
}

const INIT_STREAM: u64 = 0;
const SHUFFLE_SALT: u64 = 0x5348_5546;
const VIEW_SALT: u64 = 0x5649_4557;

/// Pre-trains a fresh model from `spec` on `dataset`.
pub fn train_simclr(
    dataset: &[CCGram],
    spec: &EncoderSpec,
    config: &PretrainConfig,
    seed: u64,
) -> Result<PretrainOutcome> {
    let model = SimclrModel::init(spec, &mut rng::stream(seed, INIT_STREAM))?;
    continue_simclr(model, dataset, config, seed)
}

/// Runs the pre-training loop starting from `model`.
pub fn continue_simclr(
    mut model: SimclrModel,
    dataset: &[CCGram],
    config: &PretrainConfig,
    seed: u64,
) -> Result<PretrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::Empty("pre-training dataset"));
    }
    if config.batch_size < 2 {
        return Err(Error::InvalidConfig("batch size must be ≥ 2".into()));
    }
    let (rows, cols) = dataset[0].shape();
    if let Some(bad) = dataset.iter().find(|c| c.shape() != (rows, cols)) {
        return Err(Error::InvalidConfig(format!(
            "mixed CCGRAM shapes {:?} and {:?}",
            (rows, cols),
            bad.shape()
        )));
    }
    let input_len = config.prep.output_len(rows, cols);
    if input_len != model.spec.input_dim {
        return Err(Error::DimensionMismatch {
            context: "prepared view vs encoder input",
            expected: model.spec.input_dim,
            actual: input_len,
        });
    }

    let mut optimizer = SgdMomentum::new(config.momentum, config.weight_decay);
    let mut enc_grad = model.encoder.zeros_like();
    let mut proj_grad = model.projector.zeros_like();
    let mut history = Vec::with_capacity(config.epochs);
    let warmup = config.warmup_epochs();
    let batch_size = config.batch_size.min(dataset.len());

    for epoch in 0..config.epochs {
        let lr = warmup_cosine_lr(config.learning_rate, epoch, config.epochs, warmup);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng::stream(rng::derive_seed(seed, SHUFFLE_SALT), epoch as u64));
        let view_seed = rng::derive_seed(rng::derive_seed(seed, VIEW_SALT), epoch as u64);

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(batch_size).filter(|b| b.len() >= 2) {
            let n = batch.len();
            let mut enc_traces = Vec::with_capacity(2 * n);
            let mut proj_traces = Vec::with_capacity(2 * n);
            let mut first = Vec::with_capacity(n);
            let mut second = Vec::with_capacity(n);
            for &idx in batch {
                let mut r = rng::stream(view_seed, idx as u64);
                let (vi, vj) = config.prep.view_pair(&dataset[idx].values, &mut r);
                for (view, sink) in [(vi, &mut first), (vj, &mut second)] {
                    let (h, et) = model.encoder.forward_traced(&view);
                    let (z, pt) = model.projector.forward_traced(&h);
                    enc_traces.push(et);
                    proj_traces.push(pt);
                    sink.push(z);
                }
            }
            // traces were pushed interleaved (i, j, i, j, …); the batch is [i…, j…]
            let out = nt_xent(&EmbeddingBatch::from_views(first, second)?, &config.ntxent)?;
            if !out.loss.is_finite() {
                return Err(Error::NonFinite("NT-Xent loss"));
            }

            enc_grad.fill_zero();
            proj_grad.fill_zero();
            for (s, (et, pt)) in enc_traces.iter().zip(&proj_traces).enumerate() {
                let view = if s % 2 == 0 { s / 2 } else { n + s / 2 };
                let dh = model.projector.backward(pt, &out.grad[view], &mut proj_grad);
                model.encoder.backward(et, &dh, &mut enc_grad);
            }

            let mut params = model.encoder.tensors_mut();
            params.extend(model.projector.tensors_mut());
            let mut grads = enc_grad.tensors();
            grads.extend(proj_grad.tensors());
            optimizer.step(params, grads, lr);

            epoch_loss += out.loss;
            batches += 1;
        }
        if batches == 0 {
            return Err(Error::InvalidConfig("dataset too small for a batch of two".into()));
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() || !model.encoder.is_finite() {
            return Err(Error::NonFinite("pre-training"));
        }
        log::debug!("epoch {epoch}: lr {lr:.3e} loss {mean:.6}");
        history.push(mean);
    }

    Ok(PretrainOutcome { model, history })
}
