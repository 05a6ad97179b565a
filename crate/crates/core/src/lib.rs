//! Multi-type Ehrenfest chain on an extended star graph and its
//! Ornstein-Uhlenbeck limit on the spider.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity,
    clippy::needless_range_loop
)]

pub mod chain;
pub mod check;
pub mod compare;
pub mod diffusion;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod special;
pub mod stationary;
pub mod transient;

pub use chain::{
    build_generator, example_switch_matrix, switch_stationary, transition_rate, ChainState, Generator,
    ModelConfig, ModelParams, SwitchKind, SwitchMatrix, SwitchSpec,
};
pub use error::{Error, Result};
pub use special::SignedLogValue;
