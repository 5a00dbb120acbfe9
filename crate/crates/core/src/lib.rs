// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dump;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model_effective;
pub mod model_full;
pub mod numerics;
pub mod pipeline;
pub mod sweep;
pub mod synthesis;
pub mod target;

pub use error::{Error, Result};
