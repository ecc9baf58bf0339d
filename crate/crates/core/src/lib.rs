//! Simulation and optimal control of a trapped ion whose nuclear and
//! electron spins form two qubits.
//!
//! The crate covers the four-level hyperfine model and its basis maps
//! ([`ion`]), rotating-frame and lab-frame pulse propagation ([`control`]),
//! gradient-ascent gate synthesis ([`grape`]), simulated tomography under
//! quasi-static magnetic noise ([`tomography`]), circuits and Grover search
//! ([`algorithms`]), and two-ion entangling sequences ([`multi_ion`]).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod control;
pub mod error;
pub mod grape;
pub mod ion;
pub mod linalg;
pub mod multi_ion;
pub mod tomography;

pub use error::{Error, Result};
