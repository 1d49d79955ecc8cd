//! Exact scalar arithmetic and truncated cohomology rings.

pub mod linalg;
pub mod poly;
pub mod ratfunc;
pub mod ring;

use thiserror::Error;

pub use poly::QPoly;
pub use ratfunc::RatFuncZ;
pub use ring::{CohElem, Generator, Monomial, RewriteRule, RingPresentation};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

/// Shorthand for `n / d` as a [`Rational`].
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements live in different rings ({0} vs {1})")]
    RingMismatch(String, String),
    #[error("{0} is not a unit: its degree-0 coordinate vanishes")]
    NonUnit(String),
    #[error("invalid ring presentation: {0}")]
    BadPresentation(String),
}
