//! SimCLR primitives: cosine similarity, NT-Xent with its gradient, the
//! encoder/projector pair and the pre-training loop.

mod loss;
mod network;
mod trainer;

pub use loss::{
    cosine_similarity, nt_xent, nt_xent_gradient, nt_xent_loss, EmbeddingBatch, NtXentConfig, NtXentOutput,
};
pub use network::{encoder_forward, EncoderSpec, SimclrModel};
pub use trainer::{continue_simclr, train_simclr, PretrainConfig, PretrainOutcome};
