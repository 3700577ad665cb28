//! Numerical calculus of sectorial matrix operators: sector certification,
//! contour-integral functional calculus, sums of resolvent-commuting
//! operators, T-sectoriality witnesses and maximal-regularity constants.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod contour;
pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod linops;
pub mod maxreg;
pub mod report;
pub mod sector;
pub mod sum;
pub mod tsector;

pub use error::{Error, Result};
pub use exec::Exec;
