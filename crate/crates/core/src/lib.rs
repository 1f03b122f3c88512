//! Parallel sentence extraction from comparable corpora.
//!
//! Two scorers decide whether a cross-language sentence pair is a mutual
//! translation: a siamese bidirectional GRU trained with negative sampling
//! ([`siamese`]) and a feature-based classifier over IBM word alignments
//! ([`baseline`]). [`extraction`] runs either scorer over document pairs and
//! [`eval`] measures them under injected noise.

pub mod baseline;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod nncore;
pub mod scalar;
pub mod seed;
pub mod siamese;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor32 = nncore::Tensor<f32>;
pub type Tensor64 = nncore::Tensor<f64>;
pub type GruParams32 = nncore::GruParams<f32>;
pub type GruParams64 = nncore::GruParams<f64>;
pub type ModelParams32 = siamese::ModelParams<f32>;
pub type ModelParams64 = siamese::ModelParams<f64>;
pub type SiameseScorer32 = siamese::SiameseScorer<f32>;
