//! The self-similar 5-IET with flips used throughout the test-suite and the
//! CLI defaults: lengths are the Perron vector of [`matrix`], and the
//! signed permutation is `(-5,-3,2,1,-4)`.

use std::sync::OnceLock;

use crate::iet::{Iet, SignedPermutation};
use crate::numfield::AlgebraicNumber;
use crate::selfsim::{associated_matrix, substitution_from, Substitution};
use crate::spectral::{perron_data, IntMatrix, SpectralData};

pub const MATRIX: [[i64; 5]; 5] = [
    [2, 4, 6, 5, 2],
    [0, 2, 1, 1, 1],
    [0, 0, 3, 2, 0],
    [1, 2, 2, 2, 1],
    [1, 3, 5, 4, 2],
];

pub const SIGNED_PERMUTATION: [i32; 5] = [-5, -3, 2, 1, -4];

pub fn matrix() -> IntMatrix {
    IntMatrix::new(MATRIX.iter().map(|r| r.to_vec()).collect()).expect("square")
}

pub fn signed_permutation() -> SignedPermutation {
    SignedPermutation::new(SIGNED_PERMUTATION.to_vec()).expect("valid")
}

/// Exact spectral data of [`matrix`], computed once.
pub fn spectral() -> &'static SpectralData {
    static DATA: OnceLock<SpectralData> = OnceLock::new();
    DATA.get_or_init(|| perron_data(&matrix()).expect("reference matrix is quasi-positive"))
}

/// The IET on `[0, 1]` with exact lengths in `Q(theta_1)`.
pub fn exact() -> Iet<AlgebraicNumber> {
    Iet::new(
        spectral().right_vector.clone(),
        signed_permutation(),
        AlgebraicNumber::from_int(0),
    )
    .expect("Perron vector is positive")
}

/// Double-precision copy of [`exact`].
pub fn float() -> Iet<f64> {
    use crate::scalar::Scalar;
    exact().map_scalar(Scalar::as_f64).expect("positive lengths")
}

/// Return-word substitution of the induction on `[0, 1/theta_1]`; its
/// abelianization is [`matrix`].
pub fn substitution() -> Substitution {
    let e = exact();
    let d = AlgebraicNumber::from_int(1) / spectral().theta1.clone();
    let (_, its) = associated_matrix(&e, &AlgebraicNumber::from_int(0), &d).expect("reference IET is self-similar");
    substitution_from(&its).expect("symbols in range")
}
