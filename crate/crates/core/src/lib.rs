//! First occurrence of the increasing pattern 123 in a random permutation.
//!
//! Order the 3-subsets of positions `{a < b < c}` lexicographically; `X` is
//! the least one with `π(a) < π(b) < π(c)`, or `never` if `π` avoids 123.
//! The crate computes the law of `X` three ways:
//!
//! - [`exact`]: closed forms over exact rationals (generic over [`Scalar`]),
//! - [`oracle`]: exhaustive enumeration of `S_n`,
//! - [`montecarlo`]: seeded simulation, including the infinite case where
//!   `π` is a bijection of the positive integers.

pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod oracle;
pub mod pattern;
pub mod scalar;

pub use error::{Error, Result};
pub use exact::SizeSpec;
pub use pattern::{FirstOccurrence, Permutation, Triple};
pub use scalar::Scalar;

/// Arbitrary-precision rational; every public probability has this type.
pub type ExactRational = num_rational::BigRational;
/// Double-precision instantiation of the closed forms.
pub type Approx64 = f64;
/// Single-precision instantiation of the closed forms.
pub type Approx32 = f32;
