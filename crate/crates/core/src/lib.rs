//! Rigorous enclosures and radii-polynomial certificates for localized
//! dihedral patterns of the planar Swift-Hohenberg equation.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod bounds;
pub mod certify;
pub mod error;
pub mod interval;
pub mod par;
pub mod quadrature;
pub mod seqspace;
pub mod sh_model;
pub mod symmetry;

pub use error::{Error, Result};
pub use interval::{CInterval, Interval, IntervalMatrix};
