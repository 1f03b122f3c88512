//! Siamese bidirectional GRU scorer.
//!
//! Both sentences are embedded with their own language's table and encoded
//! by one shared pair of GRU cells (forward and backward). The final states
//! are compared through their element-wise product and absolute difference,
//! and a one-hidden-layer head maps the comparison to a probability.

mod gradient;
mod model;
mod params;
mod scorer;
mod train;

pub use model::{
    encode_sentence, forward_batch, loss_and_grad, match_vectors, predict, score_encoded,
    score_pair, BatchOutput, Regime,
};
pub use gradient::{random_gradient_check, GradCheckSetup};
pub use params::{Dims, ModelParams, Side};
pub use scorer::SiameseScorer;
pub use train::{train, train_with_monitor, EpochStats, HyperParams, Snapshot, TrainHistory};
