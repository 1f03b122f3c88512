//! Neural-network building blocks with hand-written backward passes.

pub mod checkpoint;
mod dropout;
mod gradcheck;
mod gru;
pub(crate) mod init;
mod ops;
mod optim;
mod tensor;

pub use dropout::{dropout, dropout_mask, Mode};
pub use gradcheck::{grad_check, relative_error};
pub use gru::{gru_step, gru_step_backward, gru_step_cached, GruParams, GruStep};
pub use init::{init_uniform, unit_scaling_bound};
pub use ops::{
    add_outer, bce_loss, dense, embed_lookup, matvec, matvec_t_acc, sigmoid, Activation,
    PROB_EPS,
};
pub use optim::{clip_gradients, global_norm, Adam, AdamState, ParamSet};
pub use tensor::Tensor;
