//! Saddle-point escape analysis for gradient descent: benchmark objectives,
//! spectral tools at a saddle, closed-form escape bounds, GD and CCRGD,
//! trajectory diagnostics and an experiment CLI.

pub mod bounds;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod optimizer;
pub mod problem;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
