//! Minimal differentiable layers for the fixed architectures used here.
//!
//! There is no autodiff graph: every layer exposes a `forward` that returns a
//! cache and a `backward` that consumes it, accumulating parameter gradients
//! into a [`Gradients`] buffer laid out like the owning [`ParamStore`].

mod adam;
mod checkpoint;
mod lstm;
mod mlp;
pub mod ops;
mod params;

pub use adam::{adam_step, clip_global_norm, AdamConfig, StepReport};
pub use checkpoint::{spec_hash, Checkpoint, ParamRecord, CHECKPOINT_VERSION};
pub use lstm::{BiLstm, BiLstmCache, BiLstmSpec};
pub use mlp::{Activation, Linear, Mlp, MlpCache, MlpSpec};
pub use ops::{entropy, log_softmax, softmax, softmax_cross_entropy};
pub use params::{Gradients, Init, ParamId, ParamStore, Tensor};
