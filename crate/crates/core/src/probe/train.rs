//! Softmax-regression probing and encoder fine-tuning.
//!
//! Both train a classification head with cross-entropy and Adam under a
//! cosine-decayed learning rate. The only difference is whether encoder
//! parameters receive updates.

use rand::seq::SliceRandom;

use super::labels::CLASS_COUNT;
use super::metrics::{evaluate_predictions, Metrics};
use crate::error::{Error, Result};
use crate::nn::{cosine_lr, Activation, Adam, Mlp};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
}

impl ProbeConfig {
    /// Linear-probe settings: Adam at 1e-4, 50 epochs, batch 16.
    pub fn linear_probe() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 50,
            batch_size: 16,
            weight_decay: 1e-6,
        }
    }

    /// Fine-tuning settings: Adam at 5e-6, 50 epochs, batch 16.
    pub fn finetune() -> Self {
        Self {
            learning_rate: 5e-6,
            ..Self::linear_probe()
        }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self::linear_probe()
    }
}

/// Classification head over fixed-length feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub head: Mlp,
    pub config: ProbeConfig,
}

impl ProbeModel {
    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        self.head.forward(features)
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        argmax(&self.logits(features))
    }

    pub fn evaluate(&self, features: &[Vec<f64>], labels: &[usize]) -> Result<Metrics> {
        check_features(features, self.head.input_dim())?;
        let pred: Vec<usize> = features.iter().map(|f| self.predict(f)).collect();
        evaluate_predictions(&pred, labels, CLASS_COUNT)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Head with `hidden` ReLU layers ending in four logits.
pub fn init_head(input_dim: usize, hidden: &[usize], seed: u64) -> Mlp {
    let mut dims = vec![input_dim];
    dims.extend(hidden);
    dims.push(CLASS_COUNT);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    Mlp::init(&dims, &acts, &mut rng::stream(seed, 0))
}

fn check_features(features: &[Vec<f64>], dim: usize) -> Result<()> {
    for f in features {
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "feature dimension",
                expected: dim,
                actual: f.len(),
            });
        }
    }
    Ok(())
}

fn check_labels(inputs: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if inputs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "samples vs labels",
            expected: inputs.len(),
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= CLASS_COUNT) {
        return Err(Error::InvalidConfig(format!("label {bad} ≥ {CLASS_COUNT}")));
    }
    Ok(())
}

/// Softmax cross-entropy for one sample; writes `∂/∂logits` into `grad`.
fn cross_entropy(logits: &[f64], label: usize, grad: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (g, &l) in grad.iter_mut().zip(logits) {
        *g = (l - max).exp();
        total += *g;
    }
    for g in grad.iter_mut() {
        *g /= total;
    }
    let loss = max + total.ln() - logits[label];
    grad[label] -= 1.0;
    loss
}

/// Mini-batch Adam training of `head`, optionally also updating `encoder`.
/// Returns the mean training loss of each epoch.
fn fit(
    mut encoder: Option<&mut Mlp>,
    head: &mut Mlp,
    inputs: &[Vec<f64>],
    labels: &[usize],
    config: &ProbeConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    check_labels(inputs, labels)?;
    let in_dim = encoder.as_ref().map_or(head.input_dim(), |e| e.input_dim());
    check_features(inputs, in_dim)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be ≥ 1".into()));
    }

    let steps_per_epoch = inputs.len().div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let mut adam = Adam::new(config.weight_decay);
    let mut head_grad = head.zeros_like();
    let mut enc_grad = encoder.as_ref().map(|e| e.zeros_like());
    let mut dlogits = vec![0.0; CLASS_COUNT];
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.shuffle(&mut rng::stream(seed, 1 + epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            head_grad.fill_zero();
            if let Some(g) = enc_grad.as_mut() {
                g.fill_zero();
            }
            let inv = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                match (encoder.as_deref(), enc_grad.as_mut()) {
                    (Some(enc), Some(eg)) => {
                        let (h, et) = enc.forward_traced(&inputs[i]);
                        let (logits, ht) = head.forward_traced(&h);
                        batch_loss += cross_entropy(&logits, labels[i], &mut dlogits);
                        dlogits.iter_mut().for_each(|g| *g *= inv);
                        let dh = head.backward(&ht, &dlogits, &mut head_grad);
                        enc.backward(&et, &dh, eg);
                    }
                    _ => {
                        let (logits, ht) = head.forward_traced(&inputs[i]);
                        batch_loss += cross_entropy(&logits, labels[i], &mut dlogits);
                        dlogits.iter_mut().for_each(|g| *g *= inv);
                        head.backward(&ht, &dlogits, &mut head_grad);
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite("probe loss"));
            }
            epoch_loss += batch_loss;

            let lr = cosine_lr(config.learning_rate, step, total_steps);
            let mut params = head.tensors_mut();
            let mut grads = head_grad.tensors();
            if let (Some(enc), Some(eg)) = (encoder.as_deref_mut(), enc_grad.as_ref()) {
                params.extend(enc.tensors_mut());
                grads.extend(eg.tensors());
            }
            adam.step(params, grads, lr);
            step += 1;
        }
        history.push(epoch_loss / inputs.len() as f64);
    }
    Ok(history)
}

/// Trains a head with the given hidden widths on frozen features.
pub fn train_head(
    features: &[Vec<f64>],
    labels: &[usize],
    hidden: &[usize],
    config: &ProbeConfig,
    seed: u64,
) -> Result<ProbeModel> {
    let dim = features.first().map(Vec::len).ok_or(Error::Empty("training set"))?;
    let mut head = init_head(dim, hidden, seed);
    fit(None, &mut head, features, labels, config, seed)?;
    Ok(ProbeModel {
        head,
        config: config.clone(),
    })
}

/// Softmax regression (no hidden layer) on frozen features.
pub fn train_linear_probe(
    features: &[Vec<f64>],
    labels: &[usize],
    config: &ProbeConfig,
    seed: u64,
) -> Result<ProbeModel> {
    train_head(features, labels, &[], config, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub train: ProbeConfig,
    /// Hidden widths of the non-linear head.
    pub head_hidden: Vec<usize>,
    /// Keep the encoder fixed (reduces to probing with this head).
    pub freeze_encoder: bool,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            train: ProbeConfig::finetune(),
            head_hidden: vec![64],
            freeze_encoder: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    pub encoder: Mlp,
    pub probe: ProbeModel,
    pub metrics: Metrics,
    pub history: Vec<f64>,
}

impl FinetuneOutcome {
    pub fn predict(&self, input: &[f64]) -> usize {
        self.probe.predict(&self.encoder.forward(input))
    }
}

/// Jointly trains `encoder` and a fresh head on the fine-tune split, then
/// evaluates on the test split. Inputs are flattened, un-augmented views.
pub fn finetune(
    encoder: &Mlp,
    train_inputs: &[Vec<f64>],
    train_labels: &[usize],
    test_inputs: &[Vec<f64>],
    test_labels: &[usize],
    config: &FinetuneConfig,
    seed: u64,
) -> Result<FinetuneOutcome> {
    let mut encoder = encoder.clone();
    let feature_dim = encoder.output_dim();
    let mut head = init_head(feature_dim, &config.head_hidden, seed);
    let history = if config.freeze_encoder {
        check_features(train_inputs, encoder.input_dim())?;
        let features: Vec<Vec<f64>> = train_inputs.iter().map(|x| encoder.forward(x)).collect();
        fit(None, &mut head, &features, train_labels, &config.train, seed)?
    } else {
        fit(Some(&mut encoder), &mut head, train_inputs, train_labels, &config.train, seed)?
    };
    let probe = ProbeModel {
        head,
        config: config.train.clone(),
    };
    check_features(test_inputs, encoder.input_dim())?;
    let test_features: Vec<Vec<f64>> = test_inputs.iter().map(|x| encoder.forward(x)).collect();
    let metrics = probe.evaluate(&test_features, test_labels)?;
    Ok(FinetuneOutcome {
        encoder,
        probe,
        metrics,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_gradient() {
        let logits = [0.2, -1.0, 3.0, 0.5];
        let mut g = [0.0; 4];
        let loss = cross_entropy(&logits, 2, &mut g);
        let h = 1e-6;
        for k in 0..4 {
            let mut up = logits;
            up[k] += h;
            let mut dn = logits;
            dn[k] -= h;
            let mut scratch = [0.0; 4];
            let fd = (cross_entropy(&up, 2, &mut scratch) - cross_entropy(&dn, 2, &mut scratch)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
        assert!(loss > 0.0);
        assert!(g.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn single_class_labels() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1, 1.0 - i as f64 * 0.05]).collect();
        let y = vec![2; 20];
        let cfg = ProbeConfig {
            learning_rate: 0.05,
            epochs: 30,
            ..ProbeConfig::linear_probe()
        };
        let model = train_linear_probe(&x, &y, &cfg, 3).unwrap();
        for f in &x {
            assert_eq!(model.predict(f), 2);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<usize> = (0..10).map(|i| i % 4).collect();
        let cfg = ProbeConfig {
            learning_rate: 0.0,
            weight_decay: 0.0,
            ..ProbeConfig::linear_probe()
        };
        let model = train_linear_probe(&x, &y, &cfg, 9).unwrap();
        assert_eq!(model.head, init_head(2, &[], 9));
    }

    #[test]
    fn bad_labels() {
        let x = vec![vec![1.0]];
        assert!(train_linear_probe(&x, &[4], &ProbeConfig::default(), 0).is_err());
        assert!(train_linear_probe(&x, &[0, 1], &ProbeConfig::default(), 0).is_err());
        assert!(train_linear_probe(&[], &[], &ProbeConfig::default(), 0).is_err());
    }
}
