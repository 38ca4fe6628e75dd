//! Argument-principle stability assessment of grey-box 2x2 MIMO systems
//! from sampled frequency responses.

// `!(x > y)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod critical;
pub mod error;
pub mod idta;
pub mod kernels;
pub mod model;
pub mod pipeline;
pub mod poly;
pub mod report;
pub mod sweep;
pub mod synth;
pub mod table_io;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
