//! Model core of a Monte Carlo simulator for the downlink of cell-free
//! massive MIMO with conjugate beamforming.
//!
//! The crate compares three levels of user-side channel knowledge:
//!
//! * **statistical CSI**: users decode with `E{a_kk}` only;
//! * **beamforming training**: APs beamform downlink pilots and each user
//!   forms an LMMSE estimate of its effective gain `a_kk`;
//! * **perfect CSI**: a genie bound.
//!
//! Everything here is `no_std` + `alloc` and deterministic: every random
//! draw comes from a counter-addressed stream (see [`rng`]). File formats,
//! threading, the conic solver behind max-min power control and the CLI live
//! in the companion `cfmimo` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod estimation;
pub mod matrix;
pub mod montecarlo;
pub mod power_control;
pub mod rates;
pub mod rng;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use num_complex::Complex64;
pub use power_control::{PowerCoefficients, PowerControlPolicy};
pub use rates::CsiMode;
pub use scenario::{Drop, SystemConfig};
