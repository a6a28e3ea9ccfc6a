//! Ryu and Malitsky–Tam splitting applied to normal cones of subspaces.
//!
//! For closed subspaces `U_1, …, U_n ⊂ R^d` both splitting schemes converge to
//! the projection of (a function of) the starting point onto `U_1 ∩ … ∩ U_n`.
//! This crate provides the operators, closed-form projectors onto their
//! fixed-point sets, linear-rate bounds, and a reproducible experiment harness.

pub mod driver;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod problem;
pub mod splitting;
pub mod subspaces;

pub use driver::{IterationConfig, IterationTrace, RateBounds, Solver, StopRule};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use splitting::{affine_lift, AffineMap, Algorithm, FixDecomposition, MtProblem, RyuProblem, Splitting};
pub use subspaces::{AffineSubspace, Subspace};
