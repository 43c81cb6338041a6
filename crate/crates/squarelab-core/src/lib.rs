//! Exact-arithmetic laboratory for dyadic square functions and Haar shifts.
//!
//! The crate computes, in exact arithmetic over Q(sqrt 2), the local energy
//! of martingale and wavelet square functions of indicator sets, the
//! third-moment polynomial of their Bernoulli randomizations (by closed-form
//! coefficients and by brute-force enumeration), Haar shift operator
//! identities in one and two parameters, and extremal-set searches for the
//! associated sharp constants. A floating-point wavelet filter-bank layer
//! mirrors the exact Haar computations on sampled grids.

pub mod error;
pub mod exact;
pub mod gen;
pub mod haar;
pub mod martingale;
pub mod moment;
pub mod poly;
pub mod search;
pub mod tensor;
pub mod verify;
pub mod wavelet;

pub use error::{Error, Result};
pub use exact::{ExactScalar, Rational};
pub use poly::PolyP;
