//! Numerical workbench for crossed-product quantum metric spaces built over
//! finitely generated groups: word metrics and balls, horofunctions, stable
//! norms, truncated Dirac operators and the checks that tie them together.

pub mod af;
pub mod error;
pub mod group;
pub mod horoboundary;
pub mod nctorus;
pub mod operator;
pub mod polytope;
pub mod quantum_metric;
pub mod separation;
pub mod stable_norm;
pub mod verify;

pub use error::{Error, Result};
pub use group::{BallTable, GroupElement, GroupKind, GroupSpec, LengthFunction, LengthKind, NormSpec};
