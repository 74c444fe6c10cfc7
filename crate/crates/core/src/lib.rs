#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod random;
pub mod special;
pub mod model;
pub mod tensor;
pub mod samples;
pub mod gibbs;
pub mod baseline;
pub mod eval;
pub mod diagnostics;
pub mod selftest;

pub use error::{Error, Result};
