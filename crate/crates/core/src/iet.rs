//! Interval exchange transformations with flips, and their affine cousins.
//!
//! Pieces are numbered `0..n` internally and printed `1..n`. Piece `i` is the
//! open interval `(x_i, x_{i+1})` of the D-vector. The signed permutation
//! sends piece `i` onto image slot `pi(i)`, reversing it when `tau_i = -1`.
//! Slot `j` has the length of the piece that lands there; slots tile the
//! domain left to right.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IetError {
    #[error("invalid signed permutation: {0}")]
    InvalidPermutation(String),
    #[error("length of piece {0} is not positive")]
    NonpositiveLength(usize),
    #[error("{lengths} lengths for a permutation of size {perm}")]
    LengthMismatch { lengths: usize, perm: usize },
    #[error("point lies on the discontinuity set (breakpoint {0})")]
    AtDiscontinuity(usize),
    #[error("point lies outside the domain")]
    OutOfDomain,
    #[error("affine pieces do not tile the domain: {0}")]
    BadAffineLayout(String),
}

/// A permutation of `{1..n}` with a sign per entry.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct SignedPermutation {
    entries: Vec<i32>,
}

impl SignedPermutation {
    pub fn new(entries: Vec<i32>) -> Result<Self, IetError> {
        let n = entries.len();
        if n == 0 {
            return Err(IetError::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &e in &entries {
            let a = e.unsigned_abs() as usize;
            if e == 0 || a > n || seen[a - 1] {
                return Err(IetError::InvalidPermutation(format!("{entries:?}")));
            }
            seen[a - 1] = true;
        }
        Ok(SignedPermutation { entries })
    }

    /// Recombine a permutation (1-based images) and a flips vector.
    pub fn compose(pi: &[usize], tau: &[i8]) -> Result<Self, IetError> {
        if pi.len() != tau.len() {
            return Err(IetError::InvalidPermutation("pi and tau differ in length".into()));
        }
        Self::new(
            pi.iter()
                .zip(tau)
                .map(|(&p, &t)| p as i32 * i32::from(t.signum()))
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        SignedPermutation {
            entries: (1..=n as i32).collect(),
        }
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 0-based slot of 0-based piece `i`.
    pub fn slot(&self, i: usize) -> usize {
        self.entries[i].unsigned_abs() as usize - 1
    }

    /// 0-based piece landing in 0-based slot `j`.
    pub fn piece_at_slot(&self, j: usize) -> usize {
        self.entries
            .iter()
            .position(|e| e.unsigned_abs() as usize == j + 1)
            .expect("valid permutation")
    }

    pub fn flipped(&self, i: usize) -> bool {
        self.entries[i] < 0
    }

    pub fn has_flip(&self) -> bool {
        self.entries.iter().any(|&e| e < 0)
    }

    /// Irreducible: no proper prefix `{1..k}` of pieces maps onto slots `{1..k}`.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut max = 0;
        for k in 0..n - 1 {
            max = max.max(self.slot(k));
            if max == k {
                return false;
            }
        }
        true
    }

    /// Space-separated rendering, e.g. `-5 -3 2 1 -4`.
    pub fn to_words(&self) -> String {
        let v: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        v.join(" ")
    }
}

/// Split into the permutation (1-based images) and the flips vector.
pub fn perm_decompose(sp: &SignedPermutation) -> (Vec<usize>, Vec<i8>) {
    let pi = sp.entries.iter().map(|e| e.unsigned_abs() as usize).collect();
    let tau = sp.entries.iter().map(|&e| if e < 0 { -1 } else { 1 }).collect();
    (pi, tau)
}

impl TryFrom<Vec<i32>> for SignedPermutation {
    type Error = IetError;
    fn try_from(v: Vec<i32>) -> Result<Self, IetError> {
        SignedPermutation::new(v)
    }
}

impl From<SignedPermutation> for Vec<i32> {
    fn from(p: SignedPermutation) -> Self {
        p.entries
    }
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        write!(f, "({})", v.join(","))
    }
}

impl fmt::Debug for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for SignedPermutation {
    type Err = IetError;
    fn from_str(s: &str) -> Result<Self, IetError> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let entries: Result<Vec<i32>, _> = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect();
        Self::new(entries.map_err(|e| IetError::InvalidPermutation(e.to_string()))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Common interface of IETs and AIETs for orbit routines.
pub trait PiecewiseMap<S: Scalar> {
    fn pieces(&self) -> usize;

    /// Breakpoints `x_0 < ... < x_n`.
    fn breaks(&self) -> &[S];

    fn eval(&self, x: &S, dir: Direction) -> Result<S, IetError>;

    /// Piece containing `x` in its interior.
    fn locate(&self, x: &S) -> Result<usize, IetError> {
        locate_in(self.breaks(), x)
    }
}

/// Index `i` with `b_i < x < b_{i+1}`.
pub(crate) fn locate_in<S: Scalar>(b: &[S], x: &S) -> Result<usize, IetError> {
    let n = b.len() - 1;
    if *x < b[0] || *x > b[n] {
        return Err(IetError::OutOfDomain);
    }
    // binary search for the last breakpoint <= x
    let (mut lo, mut hi) = (0usize, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if b[mid] <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if b[lo] == *x {
        return Err(IetError::AtDiscontinuity(lo));
    }
    if b[hi] == *x {
        return Err(IetError::AtDiscontinuity(hi));
    }
    Ok(lo)
}

/// An interval exchange with flips over the scalar type `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iet<S: Scalar> {
    lengths: Vec<S>,
    perm: SignedPermutation,
    origin: S,
    breaks: Vec<S>,
    slots: Vec<S>,
}

/// Validate and lay out an IET.
pub fn iet_make<S: Scalar>(lengths: Vec<S>, perm: SignedPermutation, origin: S) -> Result<Iet<S>, IetError> {
    Iet::new(lengths, perm, origin)
}

impl<S: Scalar> Iet<S> {
    pub fn new(lengths: Vec<S>, perm: SignedPermutation, origin: S) -> Result<Self, IetError> {
        if lengths.len() != perm.len() {
            return Err(IetError::LengthMismatch {
                lengths: lengths.len(),
                perm: perm.len(),
            });
        }
        if let Some(i) = lengths.iter().position(|l| !l.is_strictly_positive()) {
            return Err(IetError::NonpositiveLength(i));
        }
        let n = lengths.len();
        let mut breaks = Vec::with_capacity(n + 1);
        breaks.push(origin.clone());
        for l in &lengths {
            let last = breaks.last().unwrap().clone();
            breaks.push(last + l.clone());
        }
        let mut slots = Vec::with_capacity(n + 1);
        slots.push(origin.clone());
        for j in 0..n {
            let last = slots.last().unwrap().clone();
            slots.push(last + lengths[perm.piece_at_slot(j)].clone());
        }
        // The right end is shared exactly.
        slots[n] = breaks[n].clone();
        Ok(Iet {
            lengths,
            perm,
            origin,
            breaks,
            slots,
        })
    }

    pub fn lengths(&self) -> &[S] {
        &self.lengths
    }

    pub fn perm(&self) -> &SignedPermutation {
        &self.perm
    }

    pub fn origin(&self) -> &S {
        &self.origin
    }

    /// Slot boundaries `s_0 < ... < s_n` of the image partition.
    pub fn slot_breaks(&self) -> &[S] {
        &self.slots
    }

    pub fn total_length(&self) -> S {
        self.breaks[self.breaks.len() - 1].clone() - self.origin.clone()
    }

    /// Image of piece `i` restricted to the point `x` (no location check).
    pub fn apply_on_piece(&self, i: usize, x: &S) -> S {
        let j = self.perm.slot(i);
        let off = x.clone() - self.breaks[i].clone();
        if self.perm.flipped(i) {
            self.slots[j + 1].clone() - off
        } else {
            self.slots[j].clone() + off
        }
    }

    /// Same IET with every scalar mapped through `f` (e.g. to floats).
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<Iet<T>, IetError> {
        Iet::new(
            self.lengths.iter().map(&f).collect(),
            self.perm.clone(),
            f(&self.origin),
        )
    }

    /// Permutation recomputed from images of piece midpoints.
    pub fn midpoint_permutation(&self) -> SignedPermutation {
        let n = self.pieces();
        let two = S::from_int(2);
        let mids: Vec<S> = (0..n)
            .map(|i| (self.breaks[i].clone() + self.breaks[i + 1].clone()) / two.clone())
            .collect();
        let imgs: Vec<S> = mids
            .iter()
            .enumerate()
            .map(|(i, m)| self.apply_on_piece(i, m))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| imgs[a].partial_cmp(&imgs[b]).unwrap_or(Ordering::Equal));
        let mut pi = vec![0usize; n];
        for (rank, &i) in order.iter().enumerate() {
            pi[i] = rank + 1;
        }
        // Orientation from a second interior point of each piece.
        let three = S::from_int(3);
        let tau: Vec<i8> = (0..n)
            .map(|i| {
                let q = self.breaks[i].clone() + self.lengths[i].clone() / three.clone();
                if self.apply_on_piece(i, &q) < imgs[i] {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SignedPermutation::compose(&pi, &tau).expect("ranks form a permutation")
    }
}

impl<S: Scalar> PiecewiseMap<S> for Iet<S> {
    fn pieces(&self) -> usize {
        self.lengths.len()
    }

    fn breaks(&self) -> &[S] {
        &self.breaks
    }

    fn eval(&self, x: &S, dir: Direction) -> Result<S, IetError> {
        match dir {
            Direction::Forward => {
                let i = locate_in(&self.breaks, x)?;
                Ok(self.apply_on_piece(i, x))
            }
            Direction::Inverse => {
                let j = locate_in(&self.slots, x)?;
                let i = self.perm.piece_at_slot(j);
                Ok(if self.perm.flipped(i) {
                    self.breaks[i].clone() + (self.slots[j + 1].clone() - x.clone())
                } else {
                    self.breaks[i].clone() + (x.clone() - self.slots[j].clone())
                })
            }
        }
    }
}

/// Forward or inverse image of a single point.
pub fn iet_eval<S: Scalar, M: PiecewiseMap<S>>(map: &M, x: &S, dir: Direction) -> Result<S, IetError> {
    map.eval(x, dir)
}

/// Piecewise affine map with flips: piece `i` maps by
/// `y = anchor_i + slope_i * (x - b_i)`, with `|slope_i| = exp(log_slope_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aiet<S: Scalar> {
    breaks: Vec<S>,
    perm: SignedPermutation,
    anchors: Vec<S>,
    slopes: Vec<S>,
    /// Image interval of each piece, sorted by slot: (lo, hi, piece).
    images: Vec<(S, S, usize)>,
}

impl<S: Scalar> Aiet<S> {
    /// Build from breakpoints, the signed permutation and signed slopes;
    /// image slots are laid out left to right from `breaks[0]`.
    pub fn from_slopes(breaks: Vec<S>, perm: SignedPermutation, slope_magnitudes: Vec<S>) -> Result<Self, IetError> {
        let n = perm.len();
        if breaks.len() != n + 1 || slope_magnitudes.len() != n {
            return Err(IetError::LengthMismatch {
                lengths: breaks.len().saturating_sub(1),
                perm: n,
            });
        }
        let lens: Vec<S> = (0..n).map(|i| breaks[i + 1].clone() - breaks[i].clone()).collect();
        let mut slot_lo = vec![S::zero(); n + 1];
        slot_lo[0] = breaks[0].clone();
        for j in 0..n {
            let i = perm.piece_at_slot(j);
            slot_lo[j + 1] = slot_lo[j].clone() + slope_magnitudes[i].clone() * lens[i].clone();
        }
        let mut anchors = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let j = perm.slot(i);
            if perm.flipped(i) {
                anchors.push(slot_lo[j + 1].clone());
                slopes.push(-slope_magnitudes[i].clone());
            } else {
                anchors.push(slot_lo[j].clone());
                slopes.push(slope_magnitudes[i].clone());
            }
        }
        Self::from_parts(breaks, perm, anchors, slopes)
    }

    /// Build from explicit anchors (image of each left endpoint) and signed slopes.
    pub fn from_parts(
        breaks: Vec<S>,
        perm: SignedPermutation,
        anchors: Vec<S>,
        slopes: Vec<S>,
    ) -> Result<Self, IetError> {
        Self::from_parts_within(breaks, perm, anchors, slopes, S::zero())
    }

    /// As [`Aiet::from_parts`], accepting overlaps of consecutive image slots
    /// up to `overlap`.
    pub fn from_parts_within(
        breaks: Vec<S>,
        perm: SignedPermutation,
        anchors: Vec<S>,
        slopes: Vec<S>,
        overlap: S,
    ) -> Result<Self, IetError> {
        let n = perm.len();
        if breaks.len() != n + 1 || anchors.len() != n || slopes.len() != n {
            return Err(IetError::LengthMismatch {
                lengths: breaks.len().saturating_sub(1),
                perm: n,
            });
        }
        for i in 0..n {
            if breaks[i + 1] <= breaks[i] {
                return Err(IetError::NonpositiveLength(i));
            }
            let flipped = slopes[i] < S::zero();
            if slopes[i] == S::zero() || flipped != perm.flipped(i) {
                return Err(IetError::BadAffineLayout(format!("slope sign of piece {}", i + 1)));
            }
        }
        let mut images: Vec<(S, S, usize)> = (0..n)
            .map(|i| {
                let a = anchors[i].clone();
                let b = anchors[i].clone() + slopes[i].clone() * (breaks[i + 1].clone() - breaks[i].clone());
                if a < b {
                    (a, b, i)
                } else {
                    (b, a, i)
                }
            })
            .collect();
        images.sort_by_key(|im| perm.slot(im.2));
        for w in images.windows(2) {
            if w[0].1.clone() - w[1].0.clone() > overlap {
                return Err(IetError::BadAffineLayout("image slots overlap".into()));
            }
        }
        Ok(Aiet {
            breaks,
            perm,
            anchors,
            slopes,
            images,
        })
    }

    /// The IET viewed as an AIET with unit slopes.
    pub fn from_iet(e: &Iet<S>) -> Self {
        // image slots are taken from the IET itself so that rounding cannot
        // make neighbours overlap
        let n = e.pieces();
        let mut anchors = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let j = e.perm.slot(i);
            if e.perm.flipped(i) {
                anchors.push(e.slots[j + 1].clone());
                slopes.push(-S::one());
            } else {
                anchors.push(e.slots[j].clone());
                slopes.push(S::one());
            }
        }
        let mut images: Vec<(S, S, usize)> = (0..n)
            .map(|i| {
                let j = e.perm.slot(i);
                (e.slots[j].clone(), e.slots[j + 1].clone(), i)
            })
            .collect();
        images.sort_by_key(|im| e.perm.slot(im.2));
        Aiet {
            breaks: e.breaks.clone(),
            perm: e.perm.clone(),
            anchors,
            slopes,
            images,
        }
    }

    pub fn perm(&self) -> &SignedPermutation {
        &self.perm
    }

    pub fn anchors(&self) -> &[S] {
        &self.anchors
    }

    /// Signed slopes `tau_i * exp(gamma_i)`.
    pub fn slopes(&self) -> &[S] {
        &self.slopes
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breaks
    }

    /// Largest overlap (positive) or gap (negative) between consecutive
    /// image slots, in double precision.
    pub fn layout_defect(&self) -> f64 {
        self.images
            .windows(2)
            .map(|w| w[0].1.as_f64() - w[1].0.as_f64())
            .fold(0.0, |a: f64, d| if d.abs() > a.abs() { d } else { a })
    }

    /// `gamma_i = ln |slope_i|`.
    pub fn log_slopes(&self) -> Vec<f64> {
        self.slopes.iter().map(|s| s.as_f64().abs().ln()).collect()
    }
}

impl<S: Scalar> PiecewiseMap<S> for Aiet<S> {
    fn pieces(&self) -> usize {
        self.perm.len()
    }

    fn breaks(&self) -> &[S] {
        &self.breaks
    }

    fn eval(&self, x: &S, dir: Direction) -> Result<S, IetError> {
        match dir {
            Direction::Forward => {
                let i = locate_in(&self.breaks, x)?;
                Ok(self.anchors[i].clone() + self.slopes[i].clone() * (x.clone() - self.breaks[i].clone()))
            }
            Direction::Inverse => {
                for (k, (lo, hi, i)) in self.images.iter().enumerate() {
                    if x == lo || x == hi {
                        return Err(IetError::AtDiscontinuity(k));
                    }
                    if lo < x && x < hi {
                        let i = *i;
                        return Ok(
                            self.breaks[i].clone() + (x.clone() - self.anchors[i].clone()) / self.slopes[i].clone()
                        );
                    }
                }
                Err(IetError::OutOfDomain)
            }
        }
    }
}

/// Finite orbit piece with the visited symbols (1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSegment<S> {
    pub points: Vec<S>,
    pub word: Vec<usize>,
    /// Index into `points` of the first point on the discontinuity set.
    pub terminated_at_discontinuity: Option<usize>,
}

/// Iterate `steps` times, stopping early at the discontinuity set.
pub fn iet_orbit<S: Scalar, M: PiecewiseMap<S>>(map: &M, x: &S, steps: usize, dir: Direction) -> OrbitSegment<S> {
    let mut points = vec![x.clone()];
    let mut word = Vec::with_capacity(steps);
    for k in 0..steps {
        let cur = &points[k];
        let next = map.locate(cur).and_then(|i| {
            word.push(i + 1);
            map.eval(cur, dir)
        });
        match next {
            Ok(y) => points.push(y),
            Err(_) => {
                return OrbitSegment {
                    points,
                    word,
                    terminated_at_discontinuity: Some(k),
                }
            }
        }
    }
    OrbitSegment {
        points,
        word,
        terminated_at_discontinuity: None,
    }
}

/// Symbols of the pieces containing `E^k(x)`, `k = 0..steps`.
pub fn iet_itinerary<S: Scalar, M: PiecewiseMap<S>>(map: &M, x: &S, steps: usize) -> Vec<usize> {
    let seg = iet_orbit(map, x, steps, Direction::Forward);
    seg.word
}
