//! Small dense networks with hand-derived gradients and the policy heads
//! built on top of them.

pub mod checkpoint;
mod dist;
mod mlp;

pub use dist::{softmax, Action, DistGrad, DistParams, LOG_STD_MAX, LOG_STD_MIN};
pub use mlp::{ForwardCache, Layer, Mlp};
