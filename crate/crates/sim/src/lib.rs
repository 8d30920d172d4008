//! Experiment runner, result files and CLI plumbing for the cell-free
//! massive MIMO downlink simulator in [`cfmimo_core`].
//!
//! Drops run in parallel on a rayon pool; each drop draws from its own
//! counter-addressed streams, so results are identical for any worker count.
//! Max-min power control uses a second-order-cone feasibility oracle solved
//! with Clarabel ([`socp`]).

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod output;
pub mod socp;

pub use cfmimo_core as core;
pub use error::RunError;
pub use experiment::{run_experiment, ExperimentOptions, ExperimentResult, Record};
