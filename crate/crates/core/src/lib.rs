#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classification;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod io;
pub mod ground_state;
pub mod kernels;
pub mod spectral;

pub use error::{Error, Result};
