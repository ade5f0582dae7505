//! Dense tensors, reverse-mode differentiation and the Transformer forecaster.

pub mod adam;
pub mod calendar;
pub mod graph;
pub mod tensor;
pub mod train;
pub mod transformer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use calendar::{calendar_encoding, CalendarFeature};
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;
pub use train::{train, train_from, TrainConfig};
pub use transformer::{
    attention_weights, feed_forward, layer_norm, multi_head_attention, scaled_dot_attention,
    AttentionParams, DropoutRng, ModelConfig, ParamStore, TrainedModel,
};
