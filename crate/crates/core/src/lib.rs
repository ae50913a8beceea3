#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dimension;
pub mod error;
pub mod heisenberg;
pub mod hermitian;
pub mod hyperbolic;
pub mod schottky;

pub use error::{Error, Result};
