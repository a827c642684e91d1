#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod conditional;
pub mod cli;
pub mod error;
pub mod io;
pub mod joint;
pub mod margins;
pub mod mgp;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
