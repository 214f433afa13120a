//! First-return maps, self-similarity and the substitution read off itineraries.

use std::fmt;

use thiserror::Error;

use crate::iet::{Iet, IetError, PiecewiseMap, SignedPermutation};
use crate::scalar::Scalar;
use crate::spectral::IntMatrix;

/// Default cap on the first-return time of any piece.
pub const RETURN_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelfSimError {
    #[error("first return exceeds {0} steps")]
    ReturnTimeCapExceeded(usize),
    #[error("inducing interval is empty or leaves the domain")]
    BadInterval,
    #[error("no symbol can seed a fixed point on the {0} side")]
    NoFixedSeed(&'static str),
    #[error("cylinder of the word is empty (first failure at position {0})")]
    EmptyCylinder(usize),
    #[error("symbol {0} is outside the alphabet")]
    BadSymbol(usize),
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// Itineraries `I(i)` of the induced pieces and their return times `N_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItinerarySet {
    /// `words[i][k]` is the (1-based) piece of `E` containing `E^k` of piece `i`,
    /// for `k = 0..N_i`.
    pub words: Vec<Vec<usize>>,
    pub exponents: Vec<usize>,
}

impl ItinerarySet {
    /// `A[j][i]` = occurrences of symbol `j + 1` in `I(i)`.
    pub fn matrix(&self, alphabet: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(alphabet);
        for (i, w) in self.words.iter().enumerate() {
            for &s in w {
                m.set(s - 1, i, m.get(s - 1, i) + 1);
            }
        }
        m
    }

    /// Table rows `i,N_i,I(i)` with space-separated words.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,N_i,I(i)\n");
        for (i, (w, n)) in self.words.iter().zip(&self.exponents).enumerate() {
            let w: Vec<String> = w.iter().map(ToString::to_string).collect();
            out.push_str(&format!("{},{},{}\n", i + 1, n, w.join(" ")));
        }
        out
    }
}

/// First-return map of `E` to `J = [c, d]`.
#[derive(Clone, Debug)]
pub struct InducedMap<S: Scalar> {
    pub c: S,
    pub d: S,
    pub sub_iet: Iet<S>,
    /// First-return time of each induced piece.
    pub return_times: Vec<usize>,
    pub itineraries: ItinerarySet,
}

struct Active<S> {
    lo: S,
    hi: S,
    /// Current image is `s * x + t` on `[lo, hi]`.
    s: i8,
    t: S,
    word: Vec<usize>,
}

impl<S: Scalar> Active<S> {
    fn image(&self) -> (S, S) {
        let a = self.apply(&self.lo);
        let b = self.apply(&self.hi);
        if self.s > 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn apply(&self, x: &S) -> S {
        if self.s > 0 {
            x.clone() + self.t.clone()
        } else {
            self.t.clone() - x.clone()
        }
    }

    fn preimage(&self, y: &S) -> S {
        if self.s > 0 {
            y.clone() - self.t.clone()
        } else {
            self.t.clone() - y.clone()
        }
    }

    /// Restrict to the part whose image lies in `[u, v]`.
    fn restrict(&self, u: &S, v: &S) -> Self {
        let (a, b) = (self.preimage(u), self.preimage(v));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Active {
            lo,
            hi,
            s: self.s,
            t: self.t.clone(),
            word: self.word.clone(),
        }
    }
}

/// Affine form `y = s * x + t` of `E` on piece `i`.
fn piece_map<S: Scalar>(e: &Iet<S>, i: usize) -> (i8, S) {
    let j = e.perm().slot(i);
    let b = e.breaks()[i].clone();
    let slots = e.slot_breaks();
    if e.perm().flipped(i) {
        (-1, slots[j + 1].clone() + b)
    } else {
        (1, slots[j].clone() - b)
    }
}

/// Induced map on `[c, d]` with the default return cap.
pub fn induce<S: Scalar>(e: &Iet<S>, c: &S, d: &S) -> Result<InducedMap<S>, SelfSimError> {
    induce_capped(e, c, d, RETURN_CAP)
}

/// Induced map on `[c, d]`: `J` is split into maximal intervals of constant
/// itinerary by pushing it forward and cutting at breakpoints and at `c`, `d`.
pub fn induce_capped<S: Scalar>(e: &Iet<S>, c: &S, d: &S, cap: usize) -> Result<InducedMap<S>, SelfSimError> {
    let b = e.breaks();
    let n = e.pieces();
    if !(c < d) || *c < b[0] || *d > b[n] {
        return Err(SelfSimError::BadInterval);
    }
    let maps: Vec<(i8, S)> = (0..n).map(|i| piece_map(e, i)).collect();
    let mut active = vec![Active {
        lo: c.clone(),
        hi: d.clone(),
        s: 1,
        t: S::zero(),
        word: Vec::new(),
    }];
    let mut done: Vec<Active<S>> = Vec::new();
    let mut steps = 0;
    while !active.is_empty() {
        if steps == cap {
            return Err(SelfSimError::ReturnTimeCapExceeded(cap));
        }
        steps += 1;
        let mut next = Vec::new();
        for item in active {
            let (u, v) = item.image();
            // split at the breakpoints strictly inside the image
            let mut cuts = vec![u.clone()];
            cuts.extend(b.iter().filter(|x| u < **x && **x < v).cloned());
            cuts.push(v.clone());
            for w in cuts.windows(2) {
                let mut part = item.restrict(&w[0], &w[1]);
                let i = crate::iet::locate_in(b, &((w[0].clone() + w[1].clone()) / S::from_int(2)))?;
                part.word.push(i + 1);
                let (s, t) = &maps[i];
                part.t = if *s > 0 {
                    part.t.clone() + t.clone()
                } else {
                    t.clone() - part.t.clone()
                };
                part.s *= *s;
                // split the new image at c and d
                let (u2, v2) = part.image();
                let mut cuts2 = vec![u2.clone()];
                cuts2.extend([c, d].into_iter().filter(|x| u2 < **x && **x < v2).cloned());
                cuts2.push(v2.clone());
                for w2 in cuts2.windows(2) {
                    let piece = part.restrict(&w2[0], &w2[1]);
                    if *c <= w2[0] && w2[1] <= *d {
                        done.push(piece);
                    } else {
                        next.push(piece);
                    }
                }
            }
        }
        active = next;
    }
    done.sort_by(|x, y| x.lo.partial_cmp(&y.lo).expect("comparable"));
    assemble(c, d, done)
}

fn assemble<S: Scalar>(c: &S, d: &S, done: Vec<Active<S>>) -> Result<InducedMap<S>, SelfSimError> {
    let m = done.len();
    let lengths: Vec<S> = done.iter().map(|p| p.hi.clone() - p.lo.clone()).collect();
    let mut by_image: Vec<usize> = (0..m).collect();
    let images: Vec<(S, S)> = done.iter().map(Active::image).collect();
    by_image.sort_by(|&x, &y| images[x].0.partial_cmp(&images[y].0).expect("comparable"));
    let mut slot_of = vec![0usize; m];
    for (rank, &p) in by_image.iter().enumerate() {
        slot_of[p] = rank + 1;
    }
    let tau: Vec<i8> = done.iter().map(|p| p.s).collect();
    let perm = SignedPermutation::compose(&slot_of, &tau)?;
    let sub = Iet::new(lengths, perm, c.clone())?;
    // the pieces and their images must both tile J
    debug_assert!(done.windows(2).all(|w| w[0].hi == w[1].lo));
    debug_assert!(by_image.windows(2).all(|w| images[w[0]].1 == images[w[1]].0));
    debug_assert!(done.last().is_none_or(|p| p.hi == *d));
    let words: Vec<Vec<usize>> = done.iter().map(|p| p.word.clone()).collect();
    let exponents: Vec<usize> = words.iter().map(Vec::len).collect();
    Ok(InducedMap {
        c: c.clone(),
        d: d.clone(),
        sub_iet: sub,
        return_times: exponents.clone(),
        itineraries: ItinerarySet { words, exponents },
    })
}

/// Whether induced pieces and their images tile `J` exactly.
pub fn tiles_exactly<S: Scalar>(m: &InducedMap<S>) -> bool {
    let e = &m.sub_iet;
    let b = e.breaks();
    let s = e.slot_breaks();
    b[0] == m.c && b[b.len() - 1] == m.d && s[0] == m.c && s[s.len() - 1] == m.d
}

/// The affine rescaling `L(x) = (x - c) * scale + a` with `L(J) = [a, b]`.
#[derive(Clone, Debug)]
pub struct SelfSimilarity<S: Scalar> {
    pub c: S,
    pub d: S,
    pub scale: S,
    pub induced: InducedMap<S>,
}

impl<S: Scalar> SelfSimilarity<S> {
    pub fn rescale(&self, x: &S, origin: &S) -> S {
        (x.clone() - self.c.clone()) * self.scale.clone() + origin.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    PieceCount {
        expected: usize,
        found: usize,
    },
    Permutation {
        expected: SignedPermutation,
        found: SignedPermutation,
    },
    /// First index whose induced length is not the scaled original.
    Length(usize),
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::PieceCount { expected, found } => {
                write!(f, "induced map has {found} pieces, expected {expected}")
            }
            Mismatch::Permutation { expected, found } => {
                write!(f, "induced permutation {found} differs from {expected}")
            }
            Mismatch::Length(i) => write!(f, "length {} is not proportional", i + 1),
        }
    }
}

/// Certify `E` self-similar on `J`, or name the first mismatch.
pub fn self_similarity_check<S: Scalar>(
    e: &Iet<S>,
    c: &S,
    d: &S,
) -> Result<Result<SelfSimilarity<S>, Mismatch>, SelfSimError> {
    let induced = induce(e, c, d)?;
    let sub = &induced.sub_iet;
    if sub.pieces() != e.pieces() {
        return Ok(Err(Mismatch::PieceCount {
            expected: e.pieces(),
            found: sub.pieces(),
        }));
    }
    if sub.perm() != e.perm() {
        return Ok(Err(Mismatch::Permutation {
            expected: e.perm().clone(),
            found: sub.perm().clone(),
        }));
    }
    let scale = e.total_length() / (d.clone() - c.clone());
    for (i, (a, b)) in e.lengths().iter().zip(sub.lengths()).enumerate() {
        if *a != b.clone() * scale.clone() {
            return Ok(Err(Mismatch::Length(i)));
        }
    }
    Ok(Ok(SelfSimilarity {
        c: c.clone(),
        d: d.clone(),
        scale,
        induced,
    }))
}

/// Matrix associated to `(E, J)` together with the itineraries.
pub fn associated_matrix<S: Scalar>(e: &Iet<S>, c: &S, d: &S) -> Result<(IntMatrix, ItinerarySet), SelfSimError> {
    let m = induce(e, c, d)?;
    let its = m.itineraries;
    Ok((its.matrix(e.pieces()), its))
}

/// A substitution on the alphabet `{1..n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    images: Vec<Vec<usize>>,
}

pub fn substitution_from(its: &ItinerarySet) -> Result<Substitution, SelfSimError> {
    Substitution::new(its.words.clone())
}

impl Substitution {
    pub fn new(images: Vec<Vec<usize>>) -> Result<Self, SelfSimError> {
        let n = images.len();
        for w in &images {
            if let Some(&s) = w.iter().find(|&&s| s == 0 || s > n) {
                return Err(SelfSimError::BadSymbol(s));
            }
        }
        Ok(Substitution { images })
    }

    pub fn alphabet(&self) -> usize {
        self.images.len()
    }

    /// `sigma(a)` for a 1-based symbol.
    pub fn image(&self, a: usize) -> &[usize] {
        &self.images[a - 1]
    }

    pub fn apply(&self, w: &[usize]) -> Vec<usize> {
        w.iter().flat_map(|&a| self.images[a - 1].iter().copied()).collect()
    }

    /// `M[j][i]` = occurrences of `j` in `sigma(i)`.
    pub fn abelianization(&self) -> IntMatrix {
        ItinerarySet {
            words: self.images.clone(),
            exponents: self.images.iter().map(Vec::len).collect(),
        }
        .matrix(self.alphabet())
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, w)| w == &[i + 1])
    }

    /// Smallest symbol whose image starts with itself and grows.
    pub fn forward_seed(&self) -> Option<usize> {
        (1..=self.alphabet()).find(|&a| self.image(a).first() == Some(&a) && self.image(a).len() > 1)
    }

    /// Smallest symbol whose image ends with itself and grows.
    pub fn backward_seed(&self) -> Option<usize> {
        (1..=self.alphabet()).find(|&b| self.image(b).last() == Some(&b) && self.image(b).len() > 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Forward,
    Backward,
    TwoSided,
}

/// Prefix and/or suffix of the fixed points of `sigma`, read in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedWord {
    /// Suffix of `sigma^inf(b)`, ending at the gluing point.
    pub left: Vec<usize>,
    /// Prefix of `sigma^inf(a)`, starting at the gluing point.
    pub right: Vec<usize>,
    pub seed_backward: Option<usize>,
    pub seed_forward: Option<usize>,
}

/// `length` symbols on each requested side of the fixed point.
pub fn fixed_word(sigma: &Substitution, side: Side, length: usize) -> Result<FixedWord, SelfSimError> {
    let mut out = FixedWord {
        left: Vec::new(),
        right: Vec::new(),
        seed_backward: None,
        seed_forward: None,
    };
    if matches!(side, Side::Forward | Side::TwoSided) {
        let a = sigma.forward_seed().ok_or(SelfSimError::NoFixedSeed("forward"))?;
        let mut w = vec![a];
        while w.len() < length {
            w = sigma.apply(&w);
        }
        w.truncate(length);
        out.right = w;
        out.seed_forward = Some(a);
    }
    if matches!(side, Side::Backward | Side::TwoSided) {
        let b = sigma.backward_seed().ok_or(SelfSimError::NoFixedSeed("backward"))?;
        let mut w = vec![b];
        while w.len() < length {
            w = sigma.apply(&w);
        }
        out.left = w[w.len() - length..].to_vec();
        out.seed_backward = Some(b);
    }
    Ok(out)
}

/// Open interval of points whose itinerary starts with `word`.
pub fn cylinder_locate<S: Scalar>(e: &Iet<S>, word: &[usize]) -> Result<(S, S), SelfSimError> {
    let n = e.pieces();
    if word.is_empty() {
        return Err(SelfSimError::EmptyCylinder(0));
    }
    if let Some(&s) = word.iter().find(|&&s| s == 0 || s > n) {
        return Err(SelfSimError::BadSymbol(s));
    }
    let b = e.breaks();
    let slots = e.slot_breaks();
    let last = word[word.len() - 1] - 1;
    let (mut lo, mut hi) = (b[last].clone(), b[last + 1].clone());
    for k in (0..word.len() - 1).rev() {
        let i = word[k] - 1;
        let j = e.perm().slot(i);
        // intersect with the slot E(piece i), then pull back
        let u = if slots[j] > lo { slots[j].clone() } else { lo };
        let v = if slots[j + 1] < hi { slots[j + 1].clone() } else { hi };
        if !(u < v) {
            return Err(SelfSimError::EmptyCylinder(k));
        }
        let (s, t) = piece_map(e, i);
        let (pu, pv) = if s > 0 {
            (u - t.clone(), v - t)
        } else {
            (t.clone() - v, t - u)
        };
        lo = pu;
        hi = pv;
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::{iet_make, Direction};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sp(v: &[i32]) -> SignedPermutation {
        SignedPermutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn induce_on_full_domain_is_identity_operation() {
        let e = iet_make(vec![q(1, 3), q(1, 4), q(5, 12)], sp(&[-3, 1, 2]), q(0, 1)).unwrap();
        let m = induce(&e, &q(0, 1), &q(1, 1)).unwrap();
        assert_eq!(m.sub_iet, e);
        assert_eq!(m.return_times, vec![1, 1, 1]);
        assert!(tiles_exactly(&m));
    }

    #[test]
    fn rotation_half_on_left_half() {
        let e = iet_make(vec![q(1, 2), q(1, 2)], sp(&[2, 1]), q(0, 1)).unwrap();
        let m = induce(&e, &q(0, 1), &q(1, 2)).unwrap();
        assert_eq!(m.sub_iet.pieces(), 1);
        assert_eq!(m.return_times, vec![2]);
        assert_eq!(m.itineraries.words, vec![vec![1, 2]]);
    }

    #[test]
    fn induced_map_agrees_with_iterated_map() {
        let e = iet_make(vec![q(2, 7), q(1, 5), q(3, 11), q(1, 9)], sp(&[-4, 2, -1, 3]), q(0, 1)).unwrap();
        let c = q(1, 10);
        let d = q(3, 5);
        let m = induce(&e, &c, &d).unwrap();
        for k in 1..40 {
            let x = &c + (&d - &c) * q(k, 40) + q(1, 1000);
            let Ok(piece) = m.sub_iet.locate(&x) else { continue };
            let mut y = x.clone();
            for _ in 0..m.return_times[piece] {
                y = e.eval(&y, Direction::Forward).unwrap();
            }
            assert_eq!(y, m.sub_iet.eval(&x, Direction::Forward).unwrap());
        }
    }

    #[test]
    fn fixed_words() {
        let s = Substitution::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        let w = fixed_word(&s, Side::Forward, 3).unwrap();
        assert_eq!(w.right, vec![1, 2, 2]);
        assert_eq!(w.seed_forward, Some(1));
        let id = Substitution::new(vec![vec![1]]).unwrap();
        assert!(id.is_identity());
        assert_eq!(
            fixed_word(&id, Side::Forward, 2),
            Err(SelfSimError::NoFixedSeed("forward"))
        );
    }

    #[test]
    fn cylinder_of_single_symbol_is_the_piece() {
        let e = iet_make(vec![q(1, 3), q(2, 3)], sp(&[-2, 1]), q(0, 1)).unwrap();
        assert_eq!(cylinder_locate(&e, &[1]).unwrap(), (q(0, 1), q(1, 3)));
        // piece 1 lands on (2/3, 1), inside piece 2
        assert_eq!(cylinder_locate(&e, &[1, 2]).unwrap(), (q(0, 1), q(1, 3)));
        assert_eq!(cylinder_locate(&e, &[1, 1]), Err(SelfSimError::EmptyCylinder(0)));
    }
}
