//! Hardware-aware simulation of analog ReRAM crossbars for tactile gesture
//! recognition.
//!
//! The crate covers the full pipeline:
//!
//! * [`tactile`]: smoothing and normalization of 9×9×N taxel pressure series
//!   and the fixed 38-element feature vector.
//! * [`gesturegen`]: a parametric generator for the ten gesture categories,
//!   augmentation, stratified splitting and dataset I/O.
//! * [`device`]: the Soft-Bounds device model, pulse-train traces, trace
//!   fitting and device-to-device population statistics.
//! * [`crossbar`]: analog tiles with noise-free MACs, stochastic
//!   pulse-coincidence updates and program-and-verify deployment.
//! * [`nn`]: fully connected networks, the FP SGD baseline, hardware-aware
//!   noise-injection tuning and Tiki-Taka v2 analog training.
//! * [`cli`]: the `reram-sim` command line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod gesturegen;
pub mod io;
pub mod matrix;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod tactile;

pub use error::{Error, Result};
pub use matrix::Matrix;
