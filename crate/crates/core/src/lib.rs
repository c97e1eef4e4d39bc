#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the range checks
pub mod config;
pub mod coupling;
pub mod discrete;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod geometry;
pub mod linalg;
pub mod runner;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
