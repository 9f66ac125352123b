//! Cochlear cepstrogram (CCGRAM) features, masking augmentation and
//! desk-scale contrastive pre-training for speech emotion recognition.
//!
//! Pipeline: [`preprocess`] turns recordings into 3 s segments,
//! [`cepstrogram`] lifts their [`cochlear_transform`] mode energies into an
//! angle × quefrency image, [`augment`] draws masked view pairs,
//! [`contrastive`] trains an encoder with NT-Xent and [`probe`] evaluates
//! frozen or fine-tuned features on arousal/valence quadrants.

pub mod augment;
pub mod cepstrogram;
pub mod cochlear_transform;
pub mod config;
pub mod contrastive;
pub mod datasets;
pub mod error;
pub mod matrix;
pub mod nn;
pub mod plot;
pub mod preprocess;
pub mod probe;
pub mod rng;
pub mod synthetic;
pub mod tonotopy;

pub use augment::{MaskAxis, MaskPolicy, MaskRecord, Transform, ViewPair, ViewPrep};
pub use cepstrogram::{CCGram, CcgramConfig, CcgramExtractor, LiftAxis};
pub use cochlear_transform::{CochlearFilterbank, FrameSpec, ModeEnergies};
pub use config::RunConfig;
pub use contrastive::{EmbeddingBatch, EncoderSpec, NtXentConfig, PretrainConfig, SimclrModel};
pub use datasets::{Checkpoint, FoldAssignment, Manifest, ManifestEntry, Role};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use preprocess::AudioSegment;
pub use probe::{Metrics, ProbeConfig, ProbeModel, QuadrantLabel};
pub use tonotopy::AngleGrid;
