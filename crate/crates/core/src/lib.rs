//! Numerical toolkit for collision-model thermodynamics.
//!
//! Natural units throughout (ħ = k_B = 1) except in [`timescale`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod contact;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod linalg;
pub mod metrology;
pub mod random;
pub mod thermal;
pub mod timescale;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, HermitianOperator, Superoperator};
