//! Augmented pseudostress-velocity mixed finite elements for the stationary
//! convective Brinkman-Forchheimer equations in two dimensions.

// NaN parameters are rejected through negated comparisons
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod bench;
pub mod error;
pub mod estimator;
pub mod forms;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod spaces;
pub mod sparse;
pub mod tensor;
pub mod vtk;

pub use error::{CbfError, Result};
