//! Numerical machinery for chain recurrence of automorphism flows on
//! low-dimensional Lie groups: structure-constant Lie algebras, additive
//! Jordan decompositions of derivations, eigenvalue gradings, exponential
//! group charts, sampled chain graphs, and quotient constructions.

pub mod algebra;
pub mod chain;
pub mod error;
pub mod grading;
pub mod group;
pub mod harness;
pub mod jordan;
pub mod linalg;
pub mod quotient;
pub mod tol;

pub use error::LieFlowError;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, LieFlowError>;
