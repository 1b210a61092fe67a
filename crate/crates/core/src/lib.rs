//! Uplink cell-free massive MIMO simulation.
//!
//! The crate is organised along the processing chain:
//!
//! * [`scenario`]: AP/UE placement, path loss, local-scattering correlation, pilots;
//! * [`channel`]: correlated Rayleigh draws and LMMSE estimation with pilot contamination;
//! * [`combining`]: centralized and local MR / ZF / RZF / MMSE combiners;
//! * [`performance`]: instantaneous and statistical SINR, spectral efficiency;
//! * [`powercontrol`]: max-min fair power control by bisection;
//! * [`costmodel`]: complexity and fronthaul counts;
//! * [`harness`]: Monte-Carlo driver, CDFs and result files.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod combining;
pub mod costmodel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod performance;
pub mod powercontrol;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
