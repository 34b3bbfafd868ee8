#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bath;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod heom;
pub mod io;
pub mod quadrature;
pub mod response;
pub mod series;

pub use error::{Error, Result};
