//! Exact spectral data of nonnegative integer matrices.
//!
//! Characteristic polynomials are computed by fraction-free elimination over
//! `Z[t]`, factored over the rationals, and their real roots isolated with
//! Sturm sequences. Eigenvectors are solved exactly over the number field of
//! the eigenvalue.

mod factor;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factor::{
    complex_roots, divisors, factor_rational, landau_mignotte, possible_factor_degrees, rational_roots,
    squarefree_decomposition, FactorError, DEGREE_CAP,
};

use crate::numfield::{AlgebraicNumber, ConjugatePair, Embedding, NumFieldError, NumberField};
use crate::poly::{isolate_roots, IntPolynomial, RootInterval};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has a negative entry")]
    NegativeEntry,
    #[error("matrix is not quasi-positive: no power up to {0} is positive")]
    NotQuasiPositive(usize),
    #[error("value is not an eigenvalue: the kernel is trivial")]
    NotAnEigenvalue,
    #[error("integer overflow in matrix product")]
    Overflow,
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    NumField(#[from] NumFieldError),
}

/// A square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, SpectralError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SpectralError::NotSquare);
        }
        Ok(IntMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n.max(1)).map(<[i64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Product with overflow detection.
    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    let v = out.data[i * n + j].checked_add(a.checked_mul(b)?)?;
                    out.data[i * n + j] = v;
                }
            }
        }
        Some(out)
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0)
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|&x| x > 0)
    }

    /// Whether some power `M^k`, `k <= n^2 - 2n + 2`, has all entries positive.
    pub fn is_quasi_positive(&self) -> bool {
        self.quasi_positive_power().is_some()
    }

    /// Smallest `k` with `M^k > 0`, searched up to the primitivity bound.
    pub fn quasi_positive_power(&self) -> Option<usize> {
        let n = self.n;
        if n == 0 || !self.is_nonnegative() {
            return None;
        }
        let bound = primitivity_bound(n);
        let pattern: Vec<bool> = self.data.iter().map(|&x| x > 0).collect();
        let mut cur = pattern.clone();
        for k in 1..=bound {
            if cur.iter().all(|&b| b) {
                return Some(k);
            }
            let mut next = vec![false; n * n];
            for i in 0..n {
                for l in 0..n {
                    if !cur[i * n + l] {
                        continue;
                    }
                    for j in 0..n {
                        if pattern[l * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
            cur = next;
        }
        None
    }

    fn to_algebraic(&self) -> Vec<Vec<AlgebraicNumber>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| AlgebraicNumber::from_int(self.get(i, j))).collect())
            .collect()
    }
}

/// `n^2 - 2n + 2`: every primitive `n x n` pattern is positive by this power.
pub fn primitivity_bound(n: usize) -> usize {
    (n * n + 2).saturating_sub(2 * n).max(1)
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = SpectralError;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        IntMatrix::new(rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.rows()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>4}")).collect();
            write!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

/// `det(tI - M)` by Bareiss elimination over `Z[t]`.
///
/// The `k`-th pivot is the leading principal minor of `tI - M` of size
/// `k + 1`, monic in `t`, so no pivoting is needed.
pub fn char_poly(m: &IntMatrix) -> IntPolynomial {
    let n = m.dim();
    if n == 0 {
        return IntPolynomial::one();
    }
    let mut a: Vec<Vec<IntPolynomial>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = BigInt::from(-m.get(i, j));
                    if i == j {
                        IntPolynomial::new(vec![c, BigInt::one()])
                    } else {
                        IntPolynomial::new(vec![c])
                    }
                })
                .collect()
        })
        .collect();
    let mut prev = IntPolynomial::one();
    for k in 0..n - 1 {
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k].mul(&a[i][j]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone()
}

/// One interval per distinct real root, ascending and Sturm-certified.
pub fn isolate_real_roots(p: &IntPolynomial) -> Vec<RootInterval> {
    isolate_roots(p)
}

/// A real root together with the index of its irreducible factor.
#[derive(Clone, Debug)]
pub struct RealRoot {
    pub value: AlgebraicNumber,
    pub factor: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub char_poly: IntPolynomial,
    pub factors: Vec<(IntPolynomial, usize)>,
    /// Ascending.
    pub real_roots: Vec<RealRoot>,
    pub theta1: AlgebraicNumber,
    pub right_vector: Vec<AlgebraicNumber>,
}

impl SpectralData {
    /// Index into `real_roots` of the Perron root.
    pub fn perron_index(&self) -> usize {
        self.real_roots.len() - 1
    }
}

/// Factor and isolate every real root, each embedded in the field of its
/// owning factor.
pub fn real_spectrum(p: &IntPolynomial) -> Result<(Vec<(IntPolynomial, usize)>, Vec<RealRoot>), SpectralError> {
    let factors = factor_rational(p)?;
    let mut roots = Vec::new();
    for (idx, (f, _)) in factors.iter().enumerate() {
        let field = Arc::new(NumberField::new_unchecked(f.clone()));
        for iv in isolate_roots(f) {
            let emb = Embedding::from_interval(field.clone(), iv.lo, iv.hi)?;
            roots.push(RealRoot {
                value: AlgebraicNumber::generator(emb),
                factor: idx,
            });
        }
    }
    roots.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or_else(|| cmp_roots(a, b)));
    Ok((factors, roots))
}

fn cmp_roots(a: &RealRoot, b: &RealRoot) -> Ordering {
    // Roots of different factors are distinct; compare isolating intervals.
    let ea = a.value.embedding().map(|e| e.clone());
    let eb = b.value.embedding().map(|e| e.clone());
    let (ea, eb) = match (ea, eb) {
        (Some(x), Some(y)) => (x, y),
        _ => return Ordering::Equal,
    };
    loop {
        let ia = ea.current_interval();
        let ib = eb.current_interval();
        if ia.hi < ib.lo || (ia.hi == ib.lo && !(ia.is_exact() && ib.is_exact())) {
            return Ordering::Less;
        }
        if ib.hi < ia.lo || (ib.hi == ia.lo && !(ia.is_exact() && ib.is_exact())) {
            return Ordering::Greater;
        }
        ea.refine(8);
        eb.refine(8);
    }
}

/// Strict comparison of two real roots that may live in different fields.
pub fn compare_real(a: &AlgebraicNumber, b: &AlgebraicNumber) -> Ordering {
    if let Some(o) = a.partial_cmp(b) {
        return o;
    }
    cmp_roots(
        &RealRoot {
            value: a.clone(),
            factor: 0,
        },
        &RealRoot {
            value: b.clone(),
            factor: 1,
        },
    )
}

/// Perron root and probability eigenvector of a quasi-positive matrix.
pub fn perron_data(m: &IntMatrix) -> Result<SpectralData, SpectralError> {
    let n = m.dim();
    if !m.is_nonnegative() {
        return Err(SpectralError::NegativeEntry);
    }
    if !m.is_quasi_positive() {
        return Err(SpectralError::NotQuasiPositive(primitivity_bound(n)));
    }
    let cp = char_poly(m);
    let (factors, real_roots) = real_spectrum(&cp)?;
    // Primitive matrices have a simple dominant real root; the largest real
    // root is therefore the Perron root.
    let top = real_roots.last().expect("Perron root is real");
    debug_assert_eq!(factors[top.factor].1, 1);
    let theta1 = top.value.clone();
    let kernel = kernel(&shifted(&m.to_algebraic(), &theta1));
    let mut v = kernel.into_iter().next().ok_or(SpectralError::NotAnEigenvalue)?;
    let sum = v.iter().fold(AlgebraicNumber::zero(), |acc, x| &acc + x);
    for x in v.iter_mut() {
        *x = &*x / &sum;
    }
    debug_assert!(v.iter().all(|x| x.signum() == Ordering::Greater));
    Ok(SpectralData {
        char_poly: cp,
        factors,
        real_roots,
        theta1,
        right_vector: v,
    })
}

fn shifted(a: &[Vec<AlgebraicNumber>], theta: &AlgebraicNumber) -> Vec<Vec<AlgebraicNumber>> {
    let mut out = a.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = &row[i] - theta;
    }
    out
}

/// Basis of the right kernel by exact Gauss–Jordan elimination.
pub fn kernel(a: &[Vec<AlgebraicNumber>]) -> Vec<Vec<AlgebraicNumber>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m = a.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero_exact()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inverse().expect("pivot is nonzero");
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero_exact() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] = &m[i][j] - &d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![AlgebraicNumber::zero(); cols];
            v[f] = AlgebraicNumber::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// Left eigenvector for `theta`, scaled so its entry of largest absolute
/// value (first such index) equals `+1`.
pub fn eigen_left(m: &IntMatrix, theta: &AlgebraicNumber) -> Result<Vec<AlgebraicNumber>, SpectralError> {
    let at = m.transpose().to_algebraic();
    let k = kernel(&shifted(&at, theta));
    let w = k.into_iter().next().ok_or(SpectralError::NotAnEigenvalue)?;
    let mut best = 0;
    for i in 1..w.len() {
        let a = abs(&w[i]);
        let b = abs(&w[best]);
        if a > b {
            best = i;
        }
    }
    let scale = w[best].clone();
    Ok(w.iter().map(|x| x / &scale).collect())
}

fn abs(x: &AlgebraicNumber) -> AlgebraicNumber {
    if x.signum() == Ordering::Less {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Exact test of `sum w_i a_i = 0` where `w` and `a` may lie in the fields
/// of two distinct conjugate embeddings of the same minimal polynomial.
pub fn pairing_is_zero(w: &[AlgebraicNumber], a: &[AlgebraicNumber]) -> Result<bool, SpectralError> {
    let direct = w.iter().zip(a).try_fold(AlgebraicNumber::zero(), |acc, (x, y)| {
        acc.checked_add(&x.checked_mul(y)?)
    });
    match direct {
        Ok(s) => return Ok(s.is_zero_exact()),
        Err(NumFieldError::FieldMismatch) => {}
        Err(e) => return Err(e.into()),
    }
    let ea = a
        .iter()
        .find_map(|x| x.embedding().cloned())
        .ok_or(NumFieldError::FieldMismatch)?;
    let ew = w
        .iter()
        .find_map(|x| x.embedding().cloned())
        .ok_or(NumFieldError::FieldMismatch)?;
    if ea.field().minimal_polynomial() != ew.field().minimal_polynomial() {
        return Err(NumFieldError::FieldMismatch.into());
    }
    let pair = ConjugatePair::new(&AlgebraicNumber::generator(ea))?;
    let mut acc = Vec::new();
    for (x, y) in w.iter().zip(a) {
        let lifted = pair.lift_conjugate(x.coords());
        let term = pair.mul(&lifted, &pair.lift_base(y));
        acc = pair.add(&acc, &term);
    }
    Ok(pair.is_zero(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenReason {
    Qualifies,
    NotQuasiPositive,
    NotConjugate,
    NoRealTheta2Gt1,
}

impl fmt::Display for ScreenReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScreenReason::Qualifies => "qualifies",
            ScreenReason::NotQuasiPositive => "not_quasi_positive",
            ScreenReason::NotConjugate => "not_conjugate",
            ScreenReason::NoRealTheta2Gt1 => "no_real_theta2_gt1",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScreenVerdict {
    pub qualifies: bool,
    pub theta1: AlgebraicNumber,
    pub theta2: Option<AlgebraicNumber>,
    pub reason: ScreenReason,
}

/// Whether `M` is quasi-positive with a real eigenvalue `1 < theta2 < theta1`
/// conjugate to the Perron root `theta1`.
pub fn conjugate_screen(m: &IntMatrix) -> Result<ScreenVerdict, SpectralError> {
    if !m.is_nonnegative() {
        return Err(SpectralError::NegativeEntry);
    }
    let cp = char_poly(m);
    let (_, roots) = real_spectrum(&cp)?;
    let top = roots.last().expect("nonnegative matrices have a real spectral radius");
    let theta1 = top.value.clone();
    if !m.is_quasi_positive() {
        return Ok(ScreenVerdict {
            qualifies: false,
            theta1,
            theta2: None,
            reason: ScreenReason::NotQuasiPositive,
        });
    }
    let one = AlgebraicNumber::one();
    let above_one: Vec<&RealRoot> = roots[..roots.len() - 1]
        .iter()
        .filter(|r| compare_real(&r.value, &one) == Ordering::Greater)
        .collect();
    let conj = above_one.iter().rev().find(|r| r.factor == top.factor);
    Ok(match (conj, above_one.last()) {
        (Some(r), _) => ScreenVerdict {
            qualifies: true,
            theta1,
            theta2: Some(r.value.clone()),
            reason: ScreenReason::Qualifies,
        },
        (None, Some(r)) => ScreenVerdict {
            qualifies: false,
            theta1,
            theta2: Some(r.value.clone()),
            reason: ScreenReason::NotConjugate,
        },
        (None, None) => ScreenVerdict {
            qualifies: false,
            theta1,
            theta2: None,
            reason: ScreenReason::NoRealTheta2Gt1,
        },
    })
}

/// Sum of rational interval enclosures of all real roots, for trace checks.
pub fn root_sum_enclosure(roots: &[RealRoot], tol: &BigRational) -> (BigRational, BigRational) {
    roots
        .iter()
        .fold((BigRational::zero(), BigRational::zero()), |(lo, hi), r| {
            let (a, b) = r.value.enclosure(tol);
            (lo + a, hi + b)
        })
}

/// Whether every other real root is strictly smaller than `theta1` in
/// absolute value, judged from isolating intervals.
pub fn dominates_real_roots(data: &SpectralData) -> bool {
    let t = &data.theta1;
    data.real_roots[..data.perron_index()]
        .iter()
        .all(|r| compare_real(&r.value, t) == Ordering::Less && compare_real(&(-r.value.clone()), t) == Ordering::Less)
}
