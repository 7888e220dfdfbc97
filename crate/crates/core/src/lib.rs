//! Numerical toolkit for interactions on finite-dimensional C*-algebras,
//! their covariant representations and the crossed products they generate.
//!
//! All checks work up to a [`Tolerance`] on operator norms and return
//! structured reports rather than bare booleans.

pub mod actions;
pub mod algebra;
pub mod circle;
pub mod corpus;
pub mod covariant;
pub mod crossed;
pub mod dynamics;
pub mod encoding;
mod error;
pub mod interactions;
pub mod report;

pub use algebra::{AlgebraElement, ComplexMatrix, FiniteCStarAlgebra, StarAlgebra, Tolerance};
pub use error::{Error, Result};
pub use report::{CheckOutcome, InteractionReport};
