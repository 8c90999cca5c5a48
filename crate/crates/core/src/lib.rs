//! Invariant maximal semidefinite subspaces of J-dissipative matrices in
//! finite-dimensional Krein spaces.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod dichotomy;
pub mod dissipativity;
pub mod error;
pub mod interpolation;
pub mod krein;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod semigroup;
