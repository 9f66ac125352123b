//! Downstream evaluation: quadrant labels, linear probing, fine-tuning and
//! weighted metrics.

mod labels;
mod metrics;
mod train;

pub use labels::{check_rating, quadrant_label, QuadrantLabel, CLASS_COUNT};
pub use metrics::{confusion_matrix, evaluate_predictions, metrics_from_confusion, Metrics};
pub use train::{
    argmax, finetune, init_head, train_head, train_linear_probe, FinetuneConfig, FinetuneOutcome, ProbeConfig,
    ProbeModel,
};

use crate::cepstrogram::CCGram;
use crate::error::Result;
use crate::matrix::Matrix;

/// Row-major flattening of a CCGRAM.
pub fn flatten_features(ccgram: &CCGram) -> Vec<f64> {
    ccgram.values.as_slice().to_vec()
}

/// Inverse of [`flatten_features`].
pub fn unflatten(features: Vec<f64>, rows: usize, cols: usize) -> Result<Matrix> {
    Matrix::from_vec(rows, cols, features)
}
