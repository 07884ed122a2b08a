#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the positive checks
pub mod cli;
pub mod error;
pub mod kernels;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod resolvent;
pub mod spectrum;

pub use error::{Error, Result};
