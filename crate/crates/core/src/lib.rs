//! Two-phase multi-objective reinforcement learning: intrinsically
//! motivated skill learning followed by fuzzy policy bootstrapping over a
//! hierarchical deterministic policy-gradient learner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod ddpg;
pub mod env;
pub mod error;
pub mod hddpg;
pub mod metrics;
pub mod morl;
pub mod nn;
pub mod scalar;
pub mod seed;
pub mod skills;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double precision network, the default everywhere in the learners.
pub type Network = nn::Network<f64>;
/// Single precision network.
pub type Network32 = nn::Network<f32>;
pub type Gradients = nn::Gradients<f64>;
pub type AdamState = nn::AdamState<f64>;
