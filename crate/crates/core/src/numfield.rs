//! Exact arithmetic in a real number field `Q(theta)`.
//!
//! An [`AlgebraicNumber`] stores rational coordinates in the power basis
//! `1, theta, ..., theta^(d-1)` together with a shared [`Embedding`]: an
//! isolating rational interval for the designated real root `theta`. Signs
//! are decided by interval evaluation over that interval, refining it by
//! bisection until zero is excluded. Refinement is shared through a lock, so
//! every number built on the same embedding benefits from earlier work.
//!
//! Numbers without an embedding are plain rationals and coerce into any
//! field on contact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::{bisect_root, sign_of, IntPolynomial, RatPoly, RootInterval, SturmSequence};
use crate::scalar::{rational_to_f64, Scalar};
use crate::spectral::{factor_rational, FactorError};

/// Largest number of decimals `nf_decimal` will render.
pub const MAX_DIGITS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumFieldError {
    #[error("minimal polynomial must be nonconstant")]
    ConstantPolynomial,
    #[error("polynomial {0} is reducible over the rationals")]
    ReduciblePolynomial(String),
    #[error("no root of the minimal polynomial in the bracket")]
    NoRoot,
    #[error("bracket contains {0} roots; narrow it")]
    AmbiguousRoot(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different fields or embeddings")]
    FieldMismatch,
    #[error("requested {0} digits, cap is {MAX_DIGITS}")]
    DigitsOutOfRange(usize),
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// `Q[t]/(m)` for a monic irreducible `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberField {
    minpoly: IntPolynomial,
    monic: RatPoly,
}

impl NumberField {
    /// Build the field, rejecting constant or reducible polynomials.
    pub fn new(minpoly: &IntPolynomial) -> Result<Arc<Self>, NumFieldError> {
        if minpoly.degree().unwrap_or(0) == 0 {
            return Err(NumFieldError::ConstantPolynomial);
        }
        let prim = minpoly.primitive_part();
        let factors = factor_rational(&prim)?;
        if factors.len() != 1 || factors[0].1 != 1 {
            return Err(NumFieldError::ReduciblePolynomial(prim.to_string()));
        }
        Ok(Arc::new(Self::new_unchecked(prim)))
    }

    /// Skip the irreducibility proof; callers must already hold one.
    pub(crate) fn new_unchecked(minpoly: IntPolynomial) -> Self {
        let prim = minpoly.primitive_part();
        let monic = prim.to_rat().monic();
        NumberField { minpoly: prim, monic }
    }

    /// The defining polynomial (primitive, positive leading coefficient).
    pub fn minimal_polynomial(&self) -> &IntPolynomial {
        &self.minpoly
    }

    pub fn monic_polynomial(&self) -> &RatPoly {
        &self.monic
    }

    pub fn degree(&self) -> usize {
        self.minpoly.degree().unwrap_or(0)
    }

    fn reduce(&self, mut c: Vec<BigRational>) -> Vec<BigRational> {
        let d = self.degree();
        let m = self.monic.coeffs();
        while c.len() > d {
            let top = c.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let k = c.len() - d;
            for (j, mj) in m.iter().enumerate().take(d) {
                c[k + j] -= &top * mj;
            }
        }
        c.resize(d, BigRational::zero());
        c
    }
}

#[derive(Debug, Clone)]
struct Refined {
    iv: RootInterval,
    mid: f64,
    rad: f64,
}

impl Refined {
    fn new(iv: RootInterval) -> Self {
        let mid = rational_to_f64(&iv.midpoint());
        let half = rational_to_f64(&(iv.width() / BigRational::from_integer(2.into())));
        let rad = half.abs() + mid.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE;
        Refined { iv, mid, rad }
    }
}

/// A field together with one designated real root.
#[derive(Debug)]
pub struct Embedding {
    field: Arc<NumberField>,
    declared: RootInterval,
    refined: RwLock<Refined>,
}

impl Embedding {
    fn new(field: Arc<NumberField>, iv: RootInterval) -> Arc<Self> {
        Arc::new(Embedding {
            field,
            refined: RwLock::new(Refined::new(iv.clone())),
            declared: iv,
        })
    }

    /// Rebuild an embedding from a serialized interval, checking that it
    /// isolates exactly one root.
    pub fn from_interval(
        field: Arc<NumberField>,
        lo: BigRational,
        hi: BigRational,
    ) -> Result<Arc<Self>, NumFieldError> {
        if lo == hi {
            if field.minpoly.eval(&lo).is_zero() {
                return Ok(Self::new(field, RootInterval { lo, hi }));
            }
            return Err(NumFieldError::NoRoot);
        }
        let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
        let sturm = SturmSequence::new(&field.minpoly);
        let n = sturm.count(&lo, &hi);
        let hi_root = field.minpoly.eval(&hi).is_zero();
        let lo_root = field.minpoly.eval(&lo).is_zero();
        match n {
            0 if !lo_root => Err(NumFieldError::NoRoot),
            1 if !hi_root && !lo_root => Ok(Self::new(field, RootInterval { lo, hi })),
            _ if field.degree() == 1 => {
                let r = -field.monic.coeffs()[0].clone();
                Ok(Self::new(field, RootInterval { lo: r.clone(), hi: r }))
            }
            0 => Err(NumFieldError::NoRoot),
            n => Err(NumFieldError::AmbiguousRoot(n.max(2))),
        }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    /// The interval the embedding was created with (stable across refinement).
    pub fn declared_interval(&self) -> &RootInterval {
        &self.declared
    }

    /// Snapshot of the current, possibly refined, isolating interval.
    pub fn current_interval(&self) -> RootInterval {
        self.refined.read().unwrap().iv.clone()
    }

    fn snapshot(&self) -> Refined {
        self.refined.read().unwrap().clone()
    }

    /// Bisect the isolating interval `steps` times (no-op for exact roots).
    pub fn refine(&self, steps: usize) {
        let mut guard = self.refined.write().unwrap();
        let mut iv = guard.iv.clone();
        for _ in 0..steps {
            bisect_root(&self.field.monic, &mut iv);
        }
        *guard = Refined::new(iv);
    }

    /// Whether two embeddings denote the same root of the same polynomial.
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        if Arc::ptr_eq(self, other) {
            return true;
        }
        if self.field.minpoly != other.field.minpoly {
            return false;
        }
        let a = self.current_interval();
        let b = other.current_interval();
        let lo = if a.lo > b.lo { a.lo.clone() } else { b.lo.clone() };
        let hi = if a.hi < b.hi { a.hi.clone() } else { b.hi.clone() };
        lo < hi || (lo == hi && a.is_exact() && b.is_exact())
    }
}

/// An element of `Q(theta)` with a designated real embedding, or a bare
/// rational.
#[derive(Clone)]
pub struct AlgebraicNumber {
    emb: Option<Arc<Embedding>>,
    coords: Vec<BigRational>,
}

/// Build a field from `minpoly`, verifying irreducibility.
pub fn nf_field_make(minpoly: &IntPolynomial) -> Result<Arc<NumberField>, NumFieldError> {
    NumberField::new(minpoly)
}

/// The generator of `field` at the unique root inside `(lo, hi)`.
pub fn nf_root(field: &Arc<NumberField>, lo: &BigRational, hi: &BigRational) -> Result<AlgebraicNumber, NumFieldError> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if field.degree() == 1 {
        let r = -field.monic.coeffs()[0].clone();
        if &r < lo || &r > hi {
            return Err(NumFieldError::NoRoot);
        }
        let emb = Embedding::new(field.clone(), RootInterval { lo: r.clone(), hi: r });
        return Ok(AlgebraicNumber::generator(emb));
    }
    let sturm = SturmSequence::new(&field.minpoly);
    let roots = crate::poly::isolate_roots_in(&sturm, lo, hi);
    let mut roots = roots.into_iter();
    match (roots.next(), roots.next()) {
        (None, _) => Err(NumFieldError::NoRoot),
        (Some(iv), None) => Ok(AlgebraicNumber::generator(Embedding::new(field.clone(), iv))),
        (Some(_), Some(_)) => Err(NumFieldError::AmbiguousRoot(2 + roots.count())),
    }
}

/// Arithmetic selector for [`nf_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn nf_arith(a: &AlgebraicNumber, b: &AlgebraicNumber, op: ArithOp) -> Result<AlgebraicNumber, NumFieldError> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
        ArithOp::Mul => a.checked_mul(b),
        ArithOp::Div => a.checked_div(b),
    }
}

pub fn nf_compare(a: &AlgebraicNumber, b: &AlgebraicNumber) -> Result<Ordering, NumFieldError> {
    Ok(a.checked_sub(b)?.signum())
}

pub fn nf_decimal(a: &AlgebraicNumber, digits: usize) -> Result<String, NumFieldError> {
    a.to_decimal(digits)
}

impl AlgebraicNumber {
    pub fn from_rational(r: BigRational) -> Self {
        AlgebraicNumber {
            emb: None,
            coords: vec![r],
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    /// `theta` itself for the given embedding.
    pub fn generator(emb: Arc<Embedding>) -> Self {
        let d = emb.field.degree();
        if d == 1 {
            let r = -emb.field.monic.coeffs()[0].clone();
            return AlgebraicNumber {
                emb: Some(emb),
                coords: vec![r],
            };
        }
        let mut coords = vec![BigRational::zero(); d];
        coords[1] = BigRational::one();
        AlgebraicNumber { emb: Some(emb), coords }
    }

    /// Element with the given power-basis coordinates.
    pub fn from_coords(emb: Arc<Embedding>, coords: Vec<BigRational>) -> Result<Self, NumFieldError> {
        let d = emb.field.degree();
        if coords.len() > d {
            let c = emb.field.reduce(coords);
            return Ok(AlgebraicNumber {
                emb: Some(emb),
                coords: c,
            });
        }
        let mut coords = coords;
        coords.resize(d, BigRational::zero());
        Ok(AlgebraicNumber { emb: Some(emb), coords })
    }

    pub fn embedding(&self) -> Option<&Arc<Embedding>> {
        self.emb.as_ref()
    }

    pub fn field(&self) -> Option<&Arc<NumberField>> {
        self.emb.as_ref().map(|e| &e.field)
    }

    /// Power-basis coordinates (a single entry for bare rationals).
    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    /// The rational value if the number lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coords.iter().skip(1).all(Zero::is_zero) {
            return Some(self.coords.first().cloned().unwrap_or_else(BigRational::zero));
        }
        if let Some(e) = &self.emb {
            if e.field.degree() == 1 {
                return Some(self.coords[0].clone());
            }
        }
        None
    }

    /// Coordinates padded into the power basis of `emb`.
    fn coerced(&self, emb: &Arc<Embedding>) -> Vec<BigRational> {
        let d = emb.field.degree();
        let mut c = self.coords.clone();
        c.resize(d.max(c.len()), BigRational::zero());
        c
    }

    fn common(&self, other: &Self) -> Result<Option<Arc<Embedding>>, NumFieldError> {
        match (&self.emb, &other.emb) {
            (None, None) => Ok(None),
            (Some(e), None) | (None, Some(e)) => Ok(Some(e.clone())),
            (Some(a), Some(b)) => {
                if a.same_as(b) {
                    Ok(Some(a.clone()))
                } else {
                    Err(NumFieldError::FieldMismatch)
                }
            }
        }
    }

    fn pair(
        &self,
        other: &Self,
    ) -> Result<(Option<Arc<Embedding>>, Vec<BigRational>, Vec<BigRational>), NumFieldError> {
        let emb = self.common(other)?;
        match &emb {
            None => Ok((None, self.coords.clone(), other.coords.clone())),
            Some(e) => Ok((emb.clone(), self.coerced(e), other.coerced(e))),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, NumFieldError> {
        let (emb, a, b) = self.pair(other)?;
        let coords = a.into_iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(AlgebraicNumber { emb, coords })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, NumFieldError> {
        let (emb, a, b) = self.pair(other)?;
        let coords = a.into_iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(AlgebraicNumber { emb, coords })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, NumFieldError> {
        let (emb, a, b) = self.pair(other)?;
        match &emb {
            None => Ok(AlgebraicNumber {
                emb,
                coords: vec![&a[0] * &b[0]],
            }),
            Some(e) => {
                // Scalar shortcut when one side is rational.
                if b.iter().skip(1).all(Zero::is_zero) {
                    let k = &b[0];
                    let coords = a.iter().map(|x| x * k).collect();
                    return Ok(AlgebraicNumber { emb, coords });
                }
                if a.iter().skip(1).all(Zero::is_zero) {
                    let k = &a[0];
                    let coords = b.iter().map(|x| x * k).collect();
                    return Ok(AlgebraicNumber { emb, coords });
                }
                let mut prod = vec![BigRational::zero(); a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        if !y.is_zero() {
                            prod[i + j] += x * y;
                        }
                    }
                }
                let coords = e.field.reduce(prod);
                Ok(AlgebraicNumber { emb, coords })
            }
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inverse(&self) -> Result<Self, NumFieldError> {
        if self.is_zero() {
            return Err(NumFieldError::DivisionByZero);
        }
        let Some(e) = &self.emb else {
            return Ok(AlgebraicNumber {
                emb: None,
                coords: vec![self.coords[0].recip()],
            });
        };
        if self.coords.iter().skip(1).all(Zero::is_zero) {
            let mut c = vec![BigRational::zero(); e.field.degree()];
            c[0] = self.coords[0].recip();
            return Ok(AlgebraicNumber {
                emb: self.emb.clone(),
                coords: c,
            });
        }
        // s * a + t * m = 1  =>  s = a^{-1} mod m
        let m = e.field.monic.clone();
        let a = RatPoly::new(self.coords.clone());
        let (mut r0, mut r1) = (m, a);
        let (mut s0, mut s1) = (RatPoly::default(), RatPoly::new(vec![BigRational::one()]));
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            let s2 = s0.sub(&q.mul(&s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
        }
        // r0 is a nonzero constant since m is irreducible.
        let k = r0.coeffs()[0].recip();
        let inv = s0.scale(&k);
        Self::from_coords(e.clone(), inv.coeffs().to_vec())
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, NumFieldError> {
        self.common(other)?;
        self.checked_mul(&other.inverse()?)
    }

    pub fn is_zero_exact(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Certified f64 sign, if the fast path can decide it.
    fn fast_sign(&self, r: &Refined) -> Option<Ordering> {
        let mut v = 0.0f64;
        let mut mag = 0.0f64;
        let mut deriv = 0.0f64;
        let big_r = r.mid.abs() + r.rad;
        let mut pow = 1.0f64;
        let mut cs = Vec::with_capacity(self.coords.len());
        for (i, c) in self.coords.iter().enumerate() {
            let cf = rational_to_f64(c);
            if !cf.is_finite() {
                return None;
            }
            cs.push(cf);
            mag += cf.abs() * pow;
            if i > 0 {
                deriv += cf.abs() * i as f64 * big_r.powi(i as i32 - 1);
            }
            pow *= big_r;
        }
        for cf in cs.iter().rev() {
            v = v * r.mid + cf;
        }
        let err = deriv * r.rad + mag * 1e-13 + f64::MIN_POSITIVE;
        if !v.is_finite() || !err.is_finite() {
            return None;
        }
        if v > err {
            Some(Ordering::Greater)
        } else if v < -err {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Rational enclosure of the value over the interval `iv`.
    fn enclose(&self, iv: &RootInterval) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for c in self.coords.iter().rev() {
            // [lo, hi] * [iv.lo, iv.hi] + c
            let cands = [&lo * &iv.lo, &lo * &iv.hi, &hi * &iv.lo, &hi * &iv.hi];
            let mut nlo = cands[0].clone();
            let mut nhi = cands[0].clone();
            for x in &cands[1..] {
                if *x < nlo {
                    nlo = x.clone();
                }
                if *x > nhi {
                    nhi = x.clone();
                }
            }
            lo = nlo + c;
            hi = nhi + c;
        }
        (lo, hi)
    }

    /// Exact sign in the designated embedding.
    pub fn signum(&self) -> Ordering {
        if self.is_zero_exact() {
            return Ordering::Equal;
        }
        let Some(emb) = &self.emb else {
            return sign_of(&self.coords[0]).cmp(&0);
        };
        if let Some(r) = self.as_rational() {
            if emb.field.degree() == 1 {
                let theta = &emb.declared.lo;
                let v = self
                    .enclose(&RootInterval {
                        lo: theta.clone(),
                        hi: theta.clone(),
                    })
                    .0;
                return sign_of(&v).cmp(&0);
            }
            return sign_of(&r).cmp(&0);
        }
        loop {
            let snap = emb.snapshot();
            if let Some(s) = self.fast_sign(&snap) {
                return s;
            }
            let (lo, hi) = self.enclose(&snap.iv);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            emb.refine(16);
        }
    }

    /// Rational interval of width at most `tol` containing the value.
    pub fn enclosure(&self, tol: &BigRational) -> (BigRational, BigRational) {
        let Some(emb) = &self.emb else {
            return (self.coords[0].clone(), self.coords[0].clone());
        };
        loop {
            let iv = emb.current_interval();
            let (lo, hi) = self.enclose(&iv);
            if &(&hi - &lo) <= tol {
                return (lo, hi);
            }
            emb.refine(16);
        }
    }

    /// Correctly rounded decimal rendering (ties away from zero).
    pub fn to_decimal(&self, digits: usize) -> Result<String, NumFieldError> {
        if digits > MAX_DIGITS {
            return Err(NumFieldError::DigitsOutOfRange(digits));
        }
        let scale = BigRational::from_integer(BigInt::from(10).pow(digits as u32));
        let half = BigRational::new(1.into(), 2.into());
        let round = |x: &BigRational| -> BigInt {
            let y = x * &scale;
            if y.is_negative() {
                -((-y) + &half).floor().to_integer()
            } else {
                (y + &half).floor().to_integer()
            }
        };
        let mut tol = BigRational::new(1.into(), BigInt::from(10).pow(digits as u32 + 2));
        let n = loop {
            let (lo, hi) = self.enclosure(&tol);
            let (a, b) = (round(&lo), round(&hi));
            if a == b {
                break a;
            }
            tol /= BigRational::from_integer(1024.into());
        };
        Ok(format_scaled(&n, digits))
    }

    /// Sum of `coeffs[i] * basis[i]` with a certified sign fast path that
    /// avoids building the exact combination when possible.
    fn combination_sign_fast(coeffs: &[i64], basis: &[Self]) -> Ordering {
        let approx: Vec<(f64, f64)> = basis.iter().map(|b| b.f64_with_error()).collect();
        let mut v = 0.0;
        let mut err = 0.0;
        for (c, (x, e)) in coeffs.iter().zip(&approx) {
            let cf = *c as f64;
            v += cf * x;
            err += cf.abs() * (e + x.abs() * 4.0 * f64::EPSILON);
        }
        err += v.abs() * 4.0 * f64::EPSILON * coeffs.len() as f64;
        if v > err {
            Ordering::Greater
        } else if v < -err {
            Ordering::Less
        } else {
            <Self as Scalar>::combination(coeffs, basis).signum()
        }
    }

    /// Approximation and an absolute error bound.
    pub fn f64_with_error(&self) -> (f64, f64) {
        let tol = BigRational::new(1.into(), BigInt::from(2).pow(70));
        let v = self.to_f64_accurate();
        let (lo, hi) = self.enclosure(&tol);
        let e = rational_to_f64(&(&hi - &lo)) + v.abs() * f64::EPSILON;
        (v, e)
    }

    fn to_f64_accurate(&self) -> f64 {
        if let Some(r) = self.as_rational() {
            if self.emb.as_ref().is_none_or(|e| e.field.degree() > 1) {
                return rational_to_f64(&r);
            }
        }
        let Some(emb) = &self.emb else {
            return rational_to_f64(&self.coords[0]);
        };
        let snap = emb.snapshot();
        if let Some(s) = self.fast_sign(&snap) {
            // Relative accuracy is good when the fast path already separates
            // the value from zero by a wide margin.
            let mut v = 0.0;
            for c in self.coords.iter().rev() {
                v = v * snap.mid + rational_to_f64(c);
            }
            if snap.rad < 1e-40 && s != Ordering::Equal {
                return v;
            }
        }
        let mut tol_exp = 64u32;
        loop {
            let tol = BigRational::new(1.into(), BigInt::from(2).pow(tol_exp));
            let (lo, hi) = self.enclosure(&tol);
            let mid = (&lo + &hi) / BigRational::from_integer(2.into());
            let v = rational_to_f64(&mid);
            let w = rational_to_f64(&(&hi - &lo));
            if v == 0.0 && lo.is_zero() && hi.is_zero() {
                return 0.0;
            }
            if w <= v.abs() * 1e-17 || tol_exp > 2000 {
                return v;
            }
            tol_exp += 64;
        }
    }
}

fn format_scaled(n: &BigInt, digits: usize) -> String {
    let neg = n.is_negative();
    let mut s = n.abs().to_string();
    if digits > 0 {
        if s.len() <= digits {
            s = "0".repeat(digits + 1 - s.len()) + &s;
        }
        s.insert(s.len() - digits, '.');
    }
    if neg {
        format!("-{s}")
    } else {
        s
    }
}

impl fmt::Debug for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = self.coords.iter().map(ToString::to_string).collect();
        match self.to_decimal(12) {
            Ok(d) => write!(f, "{d} [{}]", coords.join(", ")),
            Err(_) => write!(f, "[{}]", coords.join(", ")),
        }
    }
}

impl fmt::Display for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(12);
        match self.to_decimal(digits) {
            Ok(d) => f.write_str(&d),
            Err(e) => write!(f, "<{e}>"),
        }
    }
}

impl PartialEq for AlgebraicNumber {
    fn eq(&self, other: &Self) -> bool {
        match self.pair(other) {
            Ok((_, a, b)) => a == b,
            Err(_) => false,
        }
    }
}

impl PartialOrd for AlgebraicNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.checked_sub(other).ok().map(|d| d.signum())
    }
}

macro_rules! forward_op {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr for AlgebraicNumber {
            type Output = AlgebraicNumber;
            fn $m(self, rhs: Self) -> Self {
                self.$checked(&rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl<'a> $tr<&'a AlgebraicNumber> for &'a AlgebraicNumber {
            type Output = AlgebraicNumber;
            fn $m(self, rhs: &'a AlgebraicNumber) -> AlgebraicNumber {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

forward_op!(Add, add, checked_add);
forward_op!(Sub, sub, checked_sub);
forward_op!(Mul, mul, checked_mul);
forward_op!(Div, div, checked_div);

impl Neg for AlgebraicNumber {
    type Output = AlgebraicNumber;
    fn neg(self) -> Self {
        AlgebraicNumber {
            emb: self.emb,
            coords: self.coords.into_iter().map(|c| -c).collect(),
        }
    }
}

impl Zero for AlgebraicNumber {
    fn zero() -> Self {
        Self::from_int(0)
    }

    fn is_zero(&self) -> bool {
        self.is_zero_exact()
    }
}

impl One for AlgebraicNumber {
    fn one() -> Self {
        Self::from_int(1)
    }
}

impl Scalar for AlgebraicNumber {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    fn as_f64(&self) -> f64 {
        self.to_f64_accurate()
    }

    fn is_strictly_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    fn combination_sign(coeffs: &[i64], basis: &[Self]) -> Ordering {
        Self::combination_sign_fast(coeffs, basis)
    }
}

/// The ring `Q(theta)[u] / q(theta, u)` with `q = (m(u) - m(theta)) / (u - theta)`.
///
/// Every root `u` of `q` is a conjugate of `theta` distinct from it, so an
/// identity that reduces to zero here holds for every such pair, in
/// particular for two distinct real roots of the same minimal polynomial.
#[derive(Debug, Clone)]
pub struct ConjugatePair {
    theta: AlgebraicNumber,
    /// Monic divisor coefficients in `u`, ascending, leading one omitted.
    q: Vec<AlgebraicNumber>,
}

impl ConjugatePair {
    pub fn new(theta: &AlgebraicNumber) -> Result<Self, NumFieldError> {
        let emb = theta.embedding().ok_or(NumFieldError::FieldMismatch)?;
        let m = emb.field.monic.coeffs().to_vec();
        let d = m.len() - 1;
        let mut q = Vec::with_capacity(d.saturating_sub(1));
        // coefficient of u^j is sum_{k>j} m_k theta^(k-1-j)
        for j in 0..d.saturating_sub(1) {
            let mut acc = AlgebraicNumber::zero();
            let mut pow = AlgebraicNumber::one();
            for mk in m.iter().skip(j + 1) {
                acc = acc.checked_add(&pow.checked_mul(&AlgebraicNumber::from_rational(mk.clone()))?)?;
                pow = pow.checked_mul(theta)?;
            }
            q.push(acc);
        }
        Ok(ConjugatePair {
            theta: theta.clone(),
            q,
        })
    }

    /// Lift an element of the conjugate field (given by rational power-basis
    /// coordinates) to a polynomial in `u`.
    pub fn lift_conjugate(&self, coords: &[BigRational]) -> Vec<AlgebraicNumber> {
        self.reduce(
            coords
                .iter()
                .map(|c| AlgebraicNumber::from_rational(c.clone()))
                .collect(),
        )
    }

    pub fn lift_base(&self, a: &AlgebraicNumber) -> Vec<AlgebraicNumber> {
        vec![a.clone()]
    }

    fn reduce(&self, mut p: Vec<AlgebraicNumber>) -> Vec<AlgebraicNumber> {
        let d = self.q.len();
        while p.len() > d {
            let top = p.pop().unwrap();
            if top.is_zero_exact() {
                continue;
            }
            let k = p.len() - d;
            for (j, qj) in self.q.iter().enumerate() {
                p[k + j] = &p[k + j] - &(&top * qj);
            }
        }
        p
    }

    pub fn mul(&self, a: &[AlgebraicNumber], b: &[AlgebraicNumber]) -> Vec<AlgebraicNumber> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut prod = vec![AlgebraicNumber::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                prod[i + j] = &prod[i + j] + &(x * y);
            }
        }
        self.reduce(prod)
    }

    pub fn add(&self, a: &[AlgebraicNumber], b: &[AlgebraicNumber]) -> Vec<AlgebraicNumber> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(AlgebraicNumber::zero);
                let y = b.get(i).cloned().unwrap_or_else(AlgebraicNumber::zero);
                &x + &y
            })
            .collect()
    }

    pub fn is_zero(&self, a: &[AlgebraicNumber]) -> bool {
        a.iter().all(AlgebraicNumber::is_zero_exact)
    }

    pub fn theta(&self) -> &AlgebraicNumber {
        &self.theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn quartic() -> Arc<NumberField> {
        nf_field_make(&IntPolynomial::from_i64(&[1, -8, 18, -10, 1])).unwrap()
    }

    #[test]
    fn field_make_cases() {
        assert_eq!(quartic().degree(), 4);
        assert_eq!(nf_field_make(&IntPolynomial::from_i64(&[-3, 1])).unwrap().degree(), 1);
        assert!(matches!(
            nf_field_make(&IntPolynomial::from_i64(&[-1, 0, 1])),
            Err(NumFieldError::ReduciblePolynomial(_))
        ));
        assert_eq!(
            nf_field_make(&IntPolynomial::from_i64(&[5])).unwrap_err(),
            NumFieldError::ConstantPolynomial
        );
    }

    #[test]
    fn root_selection() {
        let k = quartic();
        let t1 = nf_root(&k, &q(7, 1), &q(8, 1)).unwrap();
        let iv = t1.embedding().unwrap().current_interval();
        t1.embedding().unwrap().refine(8);
        let iv2 = t1.embedding().unwrap().current_interval();
        assert!(iv2.lo >= iv.lo && iv2.hi <= iv.hi);
        assert!(iv2.lo >= q(78, 10) && iv2.hi <= q(79, 10));
        let t2 = nf_root(&k, &q(15, 10), &q(17, 10)).unwrap();
        assert_eq!(t2.to_decimal(3).unwrap(), "1.588");
        assert_eq!(nf_root(&k, &q(100, 1), &q(101, 1)).unwrap_err(), NumFieldError::NoRoot);
        assert!(matches!(
            nf_root(&k, &q(0, 1), &q(1, 1)),
            Err(NumFieldError::AmbiguousRoot(2))
        ));
    }

    #[test]
    fn arithmetic_examples() {
        let k = quartic();
        let t = nf_root(&k, &q(7, 1), &q(8, 1)).unwrap();
        let inv = t.inverse().unwrap();
        assert_eq!(&t * &inv, AlgebraicNumber::one());
        assert_eq!(&t + &AlgebraicNumber::zero(), t);
        let t4 = &(&t * &t) * &(&t * &t);
        let expect: Vec<BigRational> = [-1, 8, -18, 10].iter().map(|&c| q(c, 1)).collect();
        assert_eq!(t4.coords(), &expect[..]);
        assert_eq!(
            AlgebraicNumber::zero().inverse().unwrap_err(),
            NumFieldError::DivisionByZero
        );
    }

    #[test]
    fn comparisons_and_decimals() {
        let k = quartic();
        let t = nf_root(&k, &q(7, 1), &q(8, 1)).unwrap();
        assert_eq!(
            nf_compare(&t, &AlgebraicNumber::from_int(7)).unwrap(),
            Ordering::Greater
        );
        assert_eq!(nf_compare(&t, &t).unwrap(), Ordering::Equal);
        assert_eq!(t.to_decimal(3).unwrap(), "7.829");
        assert_eq!(AlgebraicNumber::from_rational(q(1, 2)).to_decimal(3).unwrap(), "0.500");
        assert_eq!(AlgebraicNumber::from_rational(q(-1, 3)).to_decimal(2).unwrap(), "-0.33");
        assert!(t.to_decimal(MAX_DIGITS + 1).is_err());
        let long = t.to_decimal(60).unwrap();
        assert!(long.starts_with("7.82939515292"));
    }

    #[test]
    fn mismatched_embeddings_are_rejected() {
        let k = quartic();
        let t1 = nf_root(&k, &q(7, 1), &q(8, 1)).unwrap();
        let t2 = nf_root(&k, &q(15, 10), &q(17, 10)).unwrap();
        assert_eq!(t1.checked_add(&t2).unwrap_err(), NumFieldError::FieldMismatch);
        assert_eq!(
            nf_arith(&t1, &t2, ArithOp::Mul).unwrap_err(),
            NumFieldError::FieldMismatch
        );
    }

    #[test]
    fn degree_one_field_behaves_like_rationals() {
        let k = nf_field_make(&IntPolynomial::from_i64(&[-3, 1])).unwrap();
        let t = nf_root(&k, &q(0, 1), &q(10, 1)).unwrap();
        assert_eq!(t.to_decimal(2).unwrap(), "3.00");
        assert_eq!(t.as_rational(), Some(q(3, 1)));
        assert_eq!((&t * &t).signum(), Ordering::Greater);
    }

    #[test]
    fn conjugate_pair_kills_difference() {
        let k = quartic();
        let t1 = nf_root(&k, &q(7, 1), &q(8, 1)).unwrap();
        let pair = ConjugatePair::new(&t1).unwrap();
        // u^4 - 10u^3 + 18u^2 - 8u + 1 reduces to zero in the quotient
        let m = pair.lift_conjugate(&[q(1, 1), q(-8, 1), q(18, 1), q(-10, 1), q(1, 1)]);
        assert!(pair.is_zero(&m));
        // theta + u + (sum of the other two) = 10, so theta + u is not zero
        let u = pair.lift_conjugate(&[q(0, 1), q(1, 1)]);
        let s = pair.add(&u, &pair.lift_base(&t1));
        assert!(!pair.is_zero(&s));
    }
}
