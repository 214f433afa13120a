//! Interval exchange transformations with flips: exact arithmetic, Rauzy
//! induction, self-similarity, and affine blow-ups with wandering intervals.
//!
//! The geometric core ([`iet`], [`selfsim`], [`rauzy`]) is generic over
//! [`Scalar`]; the aliases below fix the three scalar types in use.

pub mod denjoy;
pub mod iet;
pub mod io;
pub mod lattice;
pub mod numfield;
pub mod poly;
pub mod rauzy;
pub mod reference;
pub mod scalar;
pub mod search;
pub mod selfsim;
pub mod spectral;

use num_rational::BigRational;

pub use iet::{Aiet, Direction, Iet, PiecewiseMap, SignedPermutation};
pub use numfield::AlgebraicNumber;
pub use poly::IntPolynomial;
pub use scalar::Scalar;
pub use spectral::IntMatrix;

/// IET with lengths in a real number field (certification paths).
pub type ExactIet = Iet<AlgebraicNumber>;
/// IET with rational lengths (Rauzy-graph edges).
pub type RationalIet = Iet<BigRational>;
/// IET in double precision (long orbits).
pub type FloatIet = Iet<f64>;
/// Single-precision IET.
pub type Float32Iet = Iet<f32>;
/// Affine IET in double precision.
pub type FloatAiet = Aiet<f64>;
