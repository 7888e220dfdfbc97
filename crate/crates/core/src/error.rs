use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::AlgebraElement;

/// Errors raised by the constructors and checks of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("algebras do not match: {left:?} vs {right:?}")]
    AlgebraMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("{what} is not a partial isometry (residual {residual:.3e})")]
    NotPartialIsometry { what: String, residual: f64 },
    #[error("element is not a projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },
    #[error("map does not leave the algebra invariant (off-block residual {residual:.3e})")]
    NotInvariant { residual: f64 },
    #[error("map is not positive: minimum eigenvalue {min_eigenvalue:.3e} at a sampled positive element")]
    NotPositive {
        min_eigenvalue: f64,
        witness: Box<AlgebraElement>,
    },
    #[error("not an interaction: {0}")]
    NotAnInteraction(String),
    #[error("hypothesis {item} failed (residual {residual:.3e}): {detail}")]
    HypothesisFailed {
        item: String,
        residual: f64,
        detail: String,
    },
    #[error("restriction to the corner is singular at x = {x} (smallest singular value {sigma_min:.3e})")]
    SingularRestriction { x: u32, sigma_min: f64 },
    #[error("embedding is not a unital *-monomorphism: {0}")]
    NotMonomorphism(String),
    #[error("gauge parameter {0} is not unimodular")]
    NotUnimodular(Complex64),
    #[error("window {window} too small, element needs at least {required}")]
    WindowTooSmall { window: usize, required: usize },
    #[error("element is not in single-step form: {0}")]
    FormError(String),
    #[error("dynamics hypothesis violated at block {block}: {detail}")]
    HypothesisError { block: usize, detail: String },
    #[error("block {block} has ambiguous image under t[{x}]: candidates {candidates:?}")]
    AmbiguousBlock {
        x: u32,
        block: usize,
        candidates: Vec<usize>,
    },
    #[error("invalid cocycle at t = {point}: {detail}")]
    InvalidCocycle { point: f64, detail: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
