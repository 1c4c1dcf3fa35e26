//! Experiment harness for the two-phase GIM-MORL pipeline: configuration,
//! phase runners, checkpoints, comparison and plot data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod phase1;
pub mod phase2;
pub mod plotdata;
pub mod pool;

pub use compare::{compare_methods, Comparison, MethodResults};
pub use config::{ExperimentConfig, Method, Phase};
pub use error::{HarnessError, Result};
pub use phase1::{run_phase1, Phase1Report};
pub use phase2::{run_phase2, Phase2Report};
