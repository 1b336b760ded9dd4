//! Exact-arithmetic toolkit for the combinatorial core of level-0 character
//! theory: finite reduced root systems and their Levi/parabolic combinatorics,
//! affine apartment facet geometry with twisted fixed-point polysimplices,
//! the class-function calculus on finite reductive groups (parabolic
//! restriction/induction and cuspidal projection), and the chamber-volume
//! cancellation sums built from solid angles of polyhedral cones.
//!
//! All geometry and all identity checks are carried out in exact rational
//! arithmetic. Floating point appears in exactly one place: the Monte-Carlo
//! estimator for solid angles of cones in dimension ≥ 3, where no exact
//! formula is available.

pub mod apartment;
pub mod exact;
pub mod finclass;
pub mod lp;
pub mod rootsys;
pub mod zcancel;

pub use exact::Q;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported Cartan type: {0}")]
    UnsupportedType(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unbounded region: {0}")]
    Unbounded(String),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("enumeration window insufficient: {0}")]
    WindowInsufficient(String),
    #[error("cache error: {0}")]
    Cache(String),
}
