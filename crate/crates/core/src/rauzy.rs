//! Rauzy induction with flips, computed geometrically.
//!
//! One step compares the last piece `n` with the piece `s` landing in the
//! last slot and induces on `[a, b - min(l_n, l_s)]`. The step is type 0 when
//! `l_n > l_s` and type 1 when `l_n < l_s`.

use std::cmp::Ordering;

use thiserror::Error;

use crate::iet::{Iet, IetError, PiecewiseMap, SignedPermutation};
use crate::scalar::Scalar;
use crate::selfsim::{induce_capped, SelfSimError};
use crate::spectral::IntMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RauzyError {
    #[error("degenerate step {0}: the competing lengths are equal")]
    DegenerateStep(usize),
    #[error("matrix product overflowed")]
    Overflow,
    #[error(transparent)]
    Induce(#[from] SelfSimError),
    #[error(transparent)]
    Iet(#[from] IetError),
}

#[derive(Clone, Debug)]
pub struct RauzyStep<S: Scalar> {
    pub type_bit: u8,
    /// `old_lengths = matrix * new_lengths`.
    pub matrix: IntMatrix,
    pub before: SignedPermutation,
    pub after: SignedPermutation,
    pub after_lengths: Vec<S>,
}

/// One Rauzy step; `index` only labels errors.
pub fn rauzy_step<S: Scalar>(e: &Iet<S>, index: usize) -> Result<(Iet<S>, RauzyStep<S>), RauzyError> {
    let n = e.pieces();
    let last = n - 1;
    let s = e.perm().piece_at_slot(last);
    let ln = &e.lengths()[last];
    let ls = &e.lengths()[s];
    let (type_bit, cut) = match ln.partial_cmp(ls) {
        Some(Ordering::Greater) => (0, ls.clone()),
        Some(Ordering::Less) => (1, ln.clone()),
        _ => return Err(RauzyError::DegenerateStep(index)),
    };
    let b = e.breaks();
    let d = b[n].clone() - cut;
    let induced = induce_capped(e, &b[0], &d, 2)?;
    let matrix = induced.itineraries.matrix(n);
    let next = induced.sub_iet;
    let step = RauzyStep {
        type_bit,
        matrix,
        before: e.perm().clone(),
        after: next.perm().clone(),
        after_lengths: next.lengths().to_vec(),
    };
    Ok((next, step))
}

/// `k` chained steps.
pub fn rauzy_run<S: Scalar>(e: &Iet<S>, k: usize) -> Result<Vec<RauzyStep<S>>, RauzyError> {
    let mut cur = e.clone();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let (next, step) = rauzy_step(&cur, i)?;
        out.push(step);
        cur = next;
    }
    Ok(out)
}

/// A closed induction path returning to a rescaled copy of the start.
#[derive(Clone, Debug)]
pub struct RauzyCycle<S: Scalar> {
    pub steps: Vec<RauzyStep<S>>,
    pub product: IntMatrix,
    /// `initial_lengths = scale * final_lengths`.
    pub scale: S,
}

impl<S: Scalar> RauzyCycle<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn types(&self) -> Vec<u8> {
        self.steps.iter().map(|s| s.type_bit).collect()
    }
}

/// First return of the induction to the initial permutation with exactly
/// proportional lengths, within `max_steps`.
pub fn rauzy_cycle_detect<S: Scalar>(e: &Iet<S>, max_steps: usize) -> Result<Option<RauzyCycle<S>>, RauzyError> {
    let mut cur = e.clone();
    let mut steps = Vec::new();
    for i in 0..max_steps {
        let (next, step) = rauzy_step(&cur, i)?;
        steps.push(step);
        cur = next;
        if cur.perm() == e.perm() {
            if let Some(scale) = proportionality(e.lengths(), cur.lengths()) {
                let product = cycle_matrix(&steps)?;
                return Ok(Some(RauzyCycle { steps, product, scale }));
            }
        }
    }
    Ok(None)
}

/// `r` with `a = r * b` componentwise, if it exists.
pub fn proportionality<S: Scalar>(a: &[S], b: &[S]) -> Option<S> {
    let r = a[0].clone() / b[0].clone();
    a.iter().zip(b).all(|(x, y)| *x == y.clone() * r.clone()).then_some(r)
}

/// Ordered product `M_0 M_1 ... M_{k-1}`.
pub fn cycle_matrix<S: Scalar>(steps: &[RauzyStep<S>]) -> Result<IntMatrix, RauzyError> {
    let n = steps.first().map_or(0, |s| s.matrix.dim());
    steps.iter().try_fold(IntMatrix::identity(n), |acc, s| {
        acc.checked_mul(&s.matrix).ok_or(RauzyError::Overflow)
    })
}

/// Table rows `k,p,t` for steps `0..steps.len()`.
pub fn run_to_csv<S: Scalar>(steps: &[RauzyStep<S>]) -> String {
    let mut out = String::from("k,p,t\n");
    for (k, s) in steps.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", k, s.before.to_words(), s.type_bit));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::iet_make;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sp(v: &[i32]) -> SignedPermutation {
        SignedPermutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn degenerate_two_piece_step() {
        let e = iet_make(vec![q(1, 2), q(1, 2)], sp(&[2, 1]), q(0, 1)).unwrap();
        assert!(matches!(rauzy_step(&e, 0), Err(RauzyError::DegenerateStep(0))));
    }

    #[test]
    fn step_matrix_relates_lengths() {
        let e = iet_make(vec![q(3, 10), q(1, 5), q(2, 7), q(3, 11)], sp(&[-3, 4, -1, 2]), q(0, 1)).unwrap();
        let steps = rauzy_run(&e, 6).unwrap();
        let mut before: Vec<BigRational> = e.lengths().to_vec();
        for st in &steps {
            let m = &st.matrix;
            for i in 0..4 {
                let v = (0..4).fold(q(0, 1), |acc, j| acc + q(m.get(i, j), 1) * &st.after_lengths[j]);
                assert_eq!(v, before[i]);
            }
            before = st.after_lengths.clone();
        }
        assert!(rauzy_run(&e, 0).unwrap().is_empty());
    }

    #[test]
    fn rational_rotation_has_no_cycle() {
        let e = iet_make(vec![q(1, 3), q(2, 3)], sp(&[2, 1]), q(0, 1)).unwrap();
        // (1/3, 2/3) -> (1/3, 1/3) after one step, then the step degenerates
        let r = rauzy_cycle_detect(&e, 10);
        assert!(matches!(r, Err(RauzyError::DegenerateStep(1))));
    }
}
