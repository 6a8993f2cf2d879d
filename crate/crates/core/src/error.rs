//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { pos: usize, name: String },

    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },

    #[error("structure matrix is not antisymmetric at entry ({i},{j})")]
    StructureNotAntisymmetric { i: usize, j: usize },

    #[error("model document error: {0}")]
    ModelFormat(String),

    #[error("model `{0}` has not passed verification")]
    UnverifiedModel(String),

    #[error("rewrite bound {bound} exceeded while expressing {what} in the invariants")]
    RewriteBoundExceeded { what: String, bound: u32 },

    #[error("momentum constraint not expressible in the invariants at bound {bound}")]
    ConstraintNotExpressible { bound: u32 },

    #[error("chart unsupported: {0}")]
    ChartUnsupported(String),

    #[error("point not in set (max relation residual {residual:.3e})")]
    PointNotInSet { residual: f64 },

    #[error("maximal rank unavailable for this set")]
    MaximalRankUnavailable,

    #[error("unknown catalog key `{0}`")]
    UnknownCatalogKey(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires a canonical (symplectic) structure")]
    RequiresCanonicalStructure,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
