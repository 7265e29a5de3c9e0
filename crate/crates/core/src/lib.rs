//! Numerical laboratory for the isoperimetric problem with perimeter
//! density `|x|^p`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domains;
pub mod elcurve;
pub mod error;
pub mod exec;
pub mod hypersphere;
pub mod measures;
pub mod quadrature;
pub mod report;
pub mod variation;
pub mod verifier;

pub use error::{Error, Result};
pub use exec::ExecMode;
