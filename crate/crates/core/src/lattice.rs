//! Exact one-sided orbits of an IET.
//!
//! A point is `origin + sum c_i * lambda_i` with integer `c`, approached
//! from the right or from the left. One-sided points never sit on a
//! discontinuity, so orbits of breakpoints (such as `0+`) are defined for
//! all times. Comparisons use a certified double-precision sign with an
//! exact fallback.

use std::cmp::Ordering;

use crate::iet::{Iet, IetError, PiecewiseMap};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OneSided {
    pub coeffs: Vec<i64>,
    /// `true` for `x+` (limit from the right).
    pub right: bool,
}

impl OneSided {
    pub fn left_end(n: usize) -> Self {
        OneSided {
            coeffs: vec![0; n],
            right: true,
        }
    }
}

/// An IET prepared for lattice arithmetic on its lengths.
pub struct LatticeIet<'a, S: Scalar> {
    e: &'a Iet<S>,
    approx: Vec<(f64, f64)>,
    breaks: Vec<Vec<i64>>,
    slots: Vec<Vec<i64>>,
}

impl<'a, S: Scalar> LatticeIet<'a, S> {
    /// `approx[i]` is a double approximation of `lambda_i` with an absolute
    /// error bound.
    pub fn new(e: &'a Iet<S>, approx: Vec<(f64, f64)>) -> Self {
        let n = e.pieces();
        let breaks = (0..=n).map(|k| (0..n).map(|i| i64::from(i < k)).collect()).collect();
        let slots = (0..=n)
            .map(|j| {
                let mut c = vec![0; n];
                for s in 0..j {
                    c[e.perm().piece_at_slot(s)] = 1;
                }
                c
            })
            .collect();
        LatticeIet {
            e,
            approx,
            breaks,
            slots,
        }
    }

    pub fn iet(&self) -> &Iet<S> {
        self.e
    }

    /// Sign of `sum c_i lambda_i`.
    pub fn sign(&self, c: &[i64]) -> Ordering {
        if c.iter().all(|&x| x == 0) {
            return Ordering::Equal;
        }
        let mut v = 0.0;
        let mut err = 0.0;
        for (&ci, &(a, e)) in c.iter().zip(&self.approx) {
            let cf = ci as f64;
            v += cf * a;
            err += cf.abs() * (e + a.abs() * f64::EPSILON);
        }
        err += (c.len() as f64) * v.abs() * f64::EPSILON;
        if v > err {
            Ordering::Greater
        } else if v < -err {
            Ordering::Less
        } else {
            S::combination_sign(c, self.e.lengths())
        }
    }

    fn cmp_to(&self, p: &OneSided, v: &[i64]) -> Ordering {
        let d: Vec<i64> = p.coeffs.iter().zip(v).map(|(a, b)| a - b).collect();
        match self.sign(&d) {
            Ordering::Equal if p.right => Ordering::Greater,
            Ordering::Equal => Ordering::Less,
            o => o,
        }
    }

    /// Order of two one-sided points (`x-` before `x+`).
    pub fn cmp(&self, p: &OneSided, q: &OneSided) -> Ordering {
        let d: Vec<i64> = p.coeffs.iter().zip(&q.coeffs).map(|(a, b)| a - b).collect();
        match self.sign(&d) {
            Ordering::Equal => p.right.cmp(&q.right),
            o => o,
        }
    }

    /// Order of a one-sided point against a lattice value.
    pub fn cmp_value(&self, p: &OneSided, v: &[i64]) -> Ordering {
        self.cmp_to(p, v)
    }

    fn find(&self, bounds: &[Vec<i64>], p: &OneSided) -> Result<usize, IetError> {
        let n = bounds.len() - 1;
        if self.cmp_to(p, &bounds[0]) == Ordering::Less || self.cmp_to(p, &bounds[n]) == Ordering::Greater {
            return Err(IetError::OutOfDomain);
        }
        let (mut lo, mut hi) = (0, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cmp_to(p, &bounds[mid]) == Ordering::Greater {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Piece (0-based) containing the one-sided point.
    pub fn locate(&self, p: &OneSided) -> Result<usize, IetError> {
        self.find(&self.breaks, p)
    }

    pub fn forward(&self, p: &OneSided) -> Result<(usize, OneSided), IetError> {
        let i = self.locate(p)?;
        let j = self.e.perm().slot(i);
        let off = p.coeffs.iter().zip(&self.breaks[i]).map(|(a, b)| a - b);
        let q = if self.e.perm().flipped(i) {
            OneSided {
                coeffs: self.slots[j + 1].iter().zip(off).map(|(s, o)| s - o).collect(),
                right: !p.right,
            }
        } else {
            OneSided {
                coeffs: self.slots[j].iter().zip(off).map(|(s, o)| s + o).collect(),
                right: p.right,
            }
        };
        Ok((i, q))
    }

    pub fn inverse(&self, p: &OneSided) -> Result<(usize, OneSided), IetError> {
        let j = self.find(&self.slots, p)?;
        let i = self.e.perm().piece_at_slot(j);
        let q = if self.e.perm().flipped(i) {
            OneSided {
                coeffs: self.breaks[i]
                    .iter()
                    .zip(&self.slots[j + 1])
                    .zip(&p.coeffs)
                    .map(|((b, s), c)| b + s - c)
                    .collect(),
                right: !p.right,
            }
        } else {
            OneSided {
                coeffs: self.breaks[i]
                    .iter()
                    .zip(&p.coeffs)
                    .zip(&self.slots[j])
                    .map(|((b, c), s)| b + c - s)
                    .collect(),
                right: p.right,
            }
        };
        Ok((i, q))
    }

    /// Double-precision value of the point (the side is ignored).
    pub fn value(&self, p: &OneSided) -> f64 {
        self.e.origin().as_f64()
            + p.coeffs
                .iter()
                .zip(&self.approx)
                .map(|(&c, &(a, _))| c as f64 * a)
                .sum::<f64>()
    }

    /// Coefficients of breakpoint `x_k`.
    pub fn break_coeffs(&self, k: usize) -> &[i64] {
        &self.breaks[k]
    }

    /// Coefficients of slot boundary `s_j`.
    pub fn slot_coeffs(&self, j: usize) -> &[i64] {
        &self.slots[j]
    }
}

/// Orbit `E^m(p)` for `m` in `lo..=hi` (`lo <= 0 <= hi`) with the piece of
/// each point; index `m - lo`.
pub fn one_sided_orbit<S: Scalar>(
    l: &LatticeIet<'_, S>,
    p: &OneSided,
    lo: i64,
    hi: i64,
) -> Result<(Vec<OneSided>, Vec<usize>), IetError> {
    assert!(lo <= 0 && hi >= 0);
    let mut back = Vec::with_capacity((-lo) as usize);
    let mut cur = p.clone();
    for _ in 0..(-lo) {
        let (_, q) = l.inverse(&cur)?;
        back.push(q.clone());
        cur = q;
    }
    back.reverse();
    let mut pts = back;
    pts.push(p.clone());
    let mut cur = p.clone();
    for _ in 0..hi {
        let (_, q) = l.forward(&cur)?;
        pts.push(q.clone());
        cur = q;
    }
    let syms = pts.iter().map(|q| l.locate(q)).collect::<Result<Vec<_>, _>>()?;
    Ok((pts, syms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::{iet_make, Direction, SignedPermutation};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn approx(e: &Iet<BigRational>) -> Vec<(f64, f64)> {
        e.lengths().iter().map(|l| (l.as_f64(), 1e-17)).collect()
    }

    #[test]
    fn agrees_with_interior_evaluation() {
        let e = iet_make(
            vec![q(2, 7), q(1, 5), q(3, 11), q(1, 9)],
            SignedPermutation::new(vec![-4, 2, -1, 3]).unwrap(),
            q(0, 1),
        )
        .unwrap();
        let l = LatticeIet::new(&e, approx(&e));
        // piece 1 is flipped onto the last slot, so 0+ lands at the right end from the left
        let (i, p1) = l.forward(&OneSided::left_end(4)).unwrap();
        assert_eq!(i, 0);
        assert!(!p1.right);
        assert!((l.value(&p1) - e.total_length().as_f64()).abs() < 1e-15);
        let (_, back) = l.inverse(&p1).unwrap();
        assert_eq!(back, OneSided::left_end(4));
        // a lattice point inside a piece follows the ordinary map
        let p = OneSided {
            coeffs: vec![1, 0, 1, 0],
            right: true,
        };
        let x = &e.lengths()[0] + &e.lengths()[2] + q(1, 10_000);
        let (_, img) = l.forward(&p).unwrap();
        let y = e.eval(&x, Direction::Forward).unwrap();
        assert!((l.value(&img) - y.as_f64()).abs() < 1e-3);
    }

    #[test]
    fn orbit_round_trip() {
        let e = iet_make(
            vec![q(2, 7), q(1, 5), q(3, 11), q(1, 9)],
            SignedPermutation::new(vec![-4, 2, -1, 3]).unwrap(),
            q(0, 1),
        )
        .unwrap();
        let l = LatticeIet::new(&e, approx(&e));
        let (pts, syms) = one_sided_orbit(&l, &OneSided::left_end(4), -30, 30).unwrap();
        assert_eq!(pts.len(), 61);
        assert_eq!(syms.len(), 61);
        for w in pts.windows(2) {
            assert_eq!(l.forward(&w[0]).unwrap().1, w[1]);
        }
    }
}
