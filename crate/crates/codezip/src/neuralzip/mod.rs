//! Copy-enhanced encoder-decoder compressor.
//!
//! A single-layer, single-head transformer encoder-decoder trained from
//! scratch on oracle compressions. The decoder's cross-attention row
//! doubles as a pointer: a learned gate interpolates between the
//! vocabulary softmax and a copy distribution over source tokens, so the
//! model can emit tokens it has never seen (out-of-vocabulary identifiers
//! land in per-example extended slots). Requested ratios and task tags
//! enter as literal special tokens at the head of the input sequence.

mod checkpoint;
mod decode;
mod model;
mod train;
mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use decode::{decode, decode_with_stream};
pub use model::{
    aggregate_copy, forward, loss_and_grads, AttnParams, CopyMode, CopyModelParams, FfnParams,
    ForwardOutput, Mat, ModelConfig, Real, StepDistribution,
};
pub use train::{teacher_forced_accuracy, train, StepLog, TrainConfig, TrainReport};
pub use vocab::{encode_input, encode_sample, CopyInfo, EncodedSample, Vocab};
