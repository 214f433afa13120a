//! Factorization of integer polynomials over the rationals.
//!
//! Pipeline per squarefree part: rational roots from certified real-root
//! isolation, then factor degrees ruled out by distinct-degree factorization
//! modulo small primes, then candidate factors assembled from numerical
//! complex roots and confirmed by exact division. When no candidate
//! survives for a degree that is still possible, a Kronecker search over
//! divisor values bounded by Landau–Mignotte settles it.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{isolate_roots, IntPolynomial, RatPoly};

/// Largest degree accepted by [`factor_rational`].
pub const DEGREE_CAP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactorError {
    #[error("polynomial of degree {0} exceeds the factorization cap of {DEGREE_CAP}")]
    DegreeCapExceeded(usize),
    #[error("cannot factor the zero polynomial")]
    ZeroPolynomial,
}

/// Irreducible factors with multiplicities. Each factor is primitive with a
/// positive leading coefficient; constants are dropped. Factors are sorted
/// by degree, then by coefficients.
pub fn factor_rational(p: &IntPolynomial) -> Result<Vec<(IntPolynomial, usize)>, FactorError> {
    let deg = p.degree().ok_or(FactorError::ZeroPolynomial)?;
    if deg > DEGREE_CAP {
        return Err(FactorError::DegreeCapExceeded(deg));
    }
    let mut out = Vec::new();
    for (part, mult) in squarefree_decomposition(&p.primitive_part()) {
        for f in factor_squarefree(&part) {
            out.push((f, mult));
        }
    }
    out.sort_by(|a, b| {
        a.0.degree()
            .cmp(&b.0.degree())
            .then_with(|| a.0.coeffs().cmp(b.0.coeffs()))
    });
    Ok(out)
}

fn normalize(p: IntPolynomial) -> IntPolynomial {
    let p = p.primitive_part();
    if p.leading().is_negative() {
        p.neg()
    } else {
        p
    }
}

/// Yun's algorithm: `p = prod a_i^i` with pairwise coprime squarefree `a_i`.
pub fn squarefree_decomposition(p: &IntPolynomial) -> Vec<(IntPolynomial, usize)> {
    let mut out = Vec::new();
    if p.degree().unwrap_or(0) == 0 {
        return out;
    }
    let f = p.to_rat();
    let df = f.derivative();
    let a0 = f.gcd(&df);
    let mut b = f.div_rem(&a0).0;
    let mut c = df.div_rem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    loop {
        let a = b.gcd(&d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((normalize(a.to_primitive_int()), i));
        }
        b = b.div_rem(&a).0;
        if b.degree().unwrap_or(0) == 0 {
            break;
        }
        c = d.div_rem(&a).0;
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

fn factor_squarefree(p: &IntPolynomial) -> Vec<IntPolynomial> {
    let mut out = Vec::new();
    let mut rest = normalize(p.clone());
    for r in rational_roots(&rest) {
        let lin = normalize(IntPolynomial::new(vec![-r.numer().clone(), r.denom().clone()]));
        rest = rest.div_exact(&lin).expect("rational root divides");
        out.push(lin);
    }
    split_no_linear(rest, &mut out);
    out
}

/// Rational roots of a squarefree polynomial, ascending.
pub fn rational_roots(p: &IntPolynomial) -> Vec<BigRational> {
    let mut roots = Vec::new();
    if p.degree().unwrap_or(0) == 0 {
        return roots;
    }
    let lead = p.leading().abs();
    let dens = divisors(&lead);
    let rp = p.to_rat();
    // Distinct rationals with denominators dividing `lead` are 1/lead^2 apart.
    let sep = BigRational::new(BigInt::one(), &lead * &lead);
    for mut iv in isolate_roots(p) {
        if iv.is_exact() {
            roots.push(iv.lo.clone());
            continue;
        }
        while iv.width() >= sep && !iv.is_exact() {
            crate::poly::bisect_root(&rp, &mut iv);
        }
        if iv.is_exact() {
            roots.push(iv.lo.clone());
            continue;
        }
        'den: for b in &dens {
            let bq = BigRational::from_integer(b.clone());
            let lo = (&iv.lo * &bq).ceil().to_integer();
            let hi = (&iv.hi * &bq).floor().to_integer();
            let mut a = lo;
            while a <= hi {
                let cand = BigRational::new(a.clone(), b.clone());
                if p.eval(&cand).is_zero() {
                    roots.push(cand);
                    break 'den;
                }
                a += 1;
            }
        }
    }
    roots.sort();
    roots.dedup();
    roots
}

fn split_no_linear(f: IntPolynomial, out: &mut Vec<IntPolynomial>) {
    let m = f.degree().unwrap_or(0);
    if m == 0 {
        return;
    }
    if m <= 3 {
        out.push(f);
        return;
    }
    let possible = possible_factor_degrees(&f);
    for k in 2..=m / 2 {
        if !possible.contains(&k) {
            continue;
        }
        let found = numeric_factor(&f, k).or_else(|| kronecker_factor(&f, k));
        if let Some(g) = found {
            let h = f.div_exact(&g).expect("candidate factor divides");
            // `g` has minimal degree among factors, hence is irreducible.
            out.push(normalize(g));
            split_no_linear(normalize(h), out);
            return;
        }
    }
    out.push(f);
}

/// Degrees `k` in `1..deg` still compatible with every reduction pattern.
pub fn possible_factor_degrees(f: &IntPolynomial) -> BTreeSet<usize> {
    let n = f.degree().unwrap_or(0);
    let mut possible: BTreeSet<usize> = (1..n).collect();
    let mut used = 0;
    for &p in SMALL_PRIMES {
        if used >= 12 || possible.is_empty() {
            break;
        }
        let Some(pattern) = ddf_pattern(f, p) else {
            continue;
        };
        used += 1;
        let mut sums = BTreeSet::from([0usize]);
        for d in pattern {
            let next: Vec<usize> = sums.iter().map(|s| s + d).collect();
            sums.extend(next);
        }
        possible.retain(|k| sums.contains(k));
    }
    possible
}

const SMALL_PRIMES: &[u64] = &[
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199,
];

type Fp = Vec<u64>;

fn fp_trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn fp_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn fp_rem(a: &Fp, m: &Fp, p: u64) -> Fp {
    let mut a = fp_trim(a.clone());
    let dm = m.len() - 1;
    let inv = fp_pow(m[dm], p - 2, p);
    while a.len() > dm {
        let top = a.len() - 1;
        let c = a[top] * inv % p;
        if c != 0 {
            for j in 0..=dm {
                let idx = top - dm + j;
                a[idx] = (a[idx] + p - c * m[j] % p) % p;
            }
        }
        a.pop();
        a = fp_trim(a);
    }
    a
}

fn fp_mulmod(a: &Fp, b: &Fp, m: &Fp, p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    fp_rem(&prod, m, p)
}

fn fp_gcd(a: &Fp, b: &Fp, p: u64) -> Fp {
    let mut a = fp_trim(a.clone());
    let mut b = fp_trim(b.clone());
    while !b.is_empty() {
        let r = fp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    if let Some(&l) = a.last() {
        let inv = fp_pow(l, p - 2, p);
        for c in a.iter_mut() {
            *c = *c * inv % p;
        }
    }
    a
}

fn fp_div(a: &Fp, m: &Fp, p: u64) -> Fp {
    let mut a = fp_trim(a.clone());
    let dm = m.len() - 1;
    if a.len() <= dm {
        return Vec::new();
    }
    let inv = fp_pow(m[dm], p - 2, p);
    let mut q = vec![0u64; a.len() - dm];
    while a.len() > dm {
        let top = a.len() - 1;
        let c = a[top] * inv % p;
        q[top - dm] = c;
        for j in 0..=dm {
            let idx = top - dm + j;
            a[idx] = (a[idx] + p - c * m[j] % p) % p;
        }
        a.pop();
    }
    q
}

/// Degrees of the irreducible factors of `f mod p`, or `None` when the
/// reduction drops degree or is not squarefree.
fn ddf_pattern(f: &IntPolynomial, p: u64) -> Option<Vec<usize>> {
    let pb = BigInt::from(p);
    let mut g: Fp = f.coeffs().iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect();
    g = fp_trim(g);
    if g.len() != f.coeffs().len() {
        return None;
    }
    let dg: Fp = fp_trim((1..g.len()).map(|i| g[i] * (i as u64 % p) % p).collect());
    if fp_gcd(&g, &dg, p).len() != 1 {
        return None;
    }
    let mut pattern = Vec::new();
    let x: Fp = vec![0, 1];
    let mut h = x.clone();
    let mut i = 1;
    while g.len() > 2 * i {
        // h = x^(p^i) mod g
        let mut base = h.clone();
        let mut acc: Fp = vec![1];
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = fp_mulmod(&acc, &base, &g, p);
            }
            base = fp_mulmod(&base, &base, &g, p);
            e >>= 1;
        }
        h = acc;
        let mut diff = h.clone();
        diff.resize(diff.len().max(2), 0);
        diff[1] = (diff[1] + p - 1) % p;
        let d = fp_gcd(&fp_trim(diff), &g, p);
        let dd = d.len() - 1;
        if dd > 0 {
            for _ in 0..dd / i {
                pattern.push(i);
            }
            g = fp_div(&g, &d, p);
            h = fp_rem(&h, &g, p);
        }
        i += 1;
    }
    if g.len() > 1 {
        pattern.push(g.len() - 1);
    }
    Some(pattern)
}

/// Complex roots by the Aberth–Ehrlich iteration.
pub fn complex_roots(f: &IntPolynomial) -> Vec<Complex64> {
    let c: Vec<f64> = f.coeffs().iter().map(|x| x.to_f64().unwrap_or(f64::MAX)).collect();
    let n = c.len() - 1;
    let lead = c[n];
    let mono: Vec<Complex64> = c.iter().map(|x| Complex64::new(x / lead, 0.0)).collect();
    let radius = 1.0 + mono[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(radius * 0.7, ang)
        })
        .collect();
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for a in mono.iter().rev() {
            d = d * x + v;
            v = v * x + a;
        }
        (v, d)
    };
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (v, d) = eval(z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn numeric_factor(f: &IntPolynomial, k: usize) -> Option<IntPolynomial> {
    let roots = complex_roots(f);
    let n = roots.len();
    let leads = divisors(&f.leading().abs());
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        // Expand prod (t - z_i) over the chosen subset.
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &i in &idx {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (j, c) in coeffs.iter().enumerate() {
                next[j + 1] += c;
                next[j] -= c * roots[i];
            }
            coeffs = next;
        }
        if coeffs.iter().all(|c| c.im.abs() < 1e-6 * (1.0 + c.re.abs())) {
            for l in &leads {
                let lf = l.to_f64().unwrap_or(f64::MAX);
                let ints: Option<Vec<BigInt>> = coeffs
                    .iter()
                    .map(|c| {
                        let v = c.re * lf;
                        if v.abs() < 1e15 && (v - v.round()).abs() < 1e-4 * (1.0 + v.abs()).sqrt() {
                            Some(BigInt::from(v.round() as i64))
                        } else {
                            None
                        }
                    })
                    .collect();
                if let Some(ints) = ints {
                    let g = IntPolynomial::new(ints);
                    if g.degree() == Some(k) && f.div_exact(&g).is_some() {
                        return Some(g);
                    }
                }
            }
        }
        // next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Landau–Mignotte bound on the coefficients of a degree-`k` factor.
pub fn landau_mignotte(f: &IntPolynomial, k: usize) -> BigInt {
    let norm = f.norm2_ceil();
    let binom_max = (0..=k).map(|j| binomial(k, j)).max().unwrap_or(1);
    norm * BigInt::from(binom_max)
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

/// Exhaustive search for a degree-`k` factor: `g(x_i)` divides `f(x_i)` at
/// `k + 1` integer points, and `g` is recovered by interpolation.
fn kronecker_factor(f: &IntPolynomial, k: usize) -> Option<IntPolynomial> {
    let bound = landau_mignotte(f, k);
    let mut pts: Vec<(BigInt, BigInt)> = (-30i64..=30)
        .map(|x| {
            let xb = BigInt::from(x);
            let v = f.eval_int(&xb);
            (xb, v)
        })
        .filter(|(_, v)| !v.is_zero())
        .collect();
    pts.sort_by(|a, b| a.1.abs().cmp(&b.1.abs()).then(a.0.abs().cmp(&b.0.abs())));
    pts.truncate(k + 1);
    let choices: Vec<Vec<BigInt>> = pts
        .iter()
        .map(|(_, v)| {
            let ds = divisors(&v.abs());
            ds.iter().flat_map(|d| [d.clone(), -d.clone()]).collect()
        })
        .collect();
    let xs: Vec<BigRational> = pts.iter().map(|(x, _)| BigRational::from_integer(x.clone())).collect();
    let mut sel = vec![0usize; k + 1];
    loop {
        let ys: Vec<BigRational> = sel
            .iter()
            .zip(&choices)
            .map(|(&i, c)| BigRational::from_integer(c[i].clone()))
            .collect();
        if let Some(g) = interpolate(&xs, &ys).to_int() {
            if g.degree() == Some(k)
                && g.leading().is_positive()
                && g.coeffs().iter().all(|c| c.abs() <= bound)
                && f.div_exact(&g).is_some()
            {
                return Some(g);
            }
        }
        let mut i = 0;
        loop {
            if i == sel.len() {
                return None;
            }
            sel[i] += 1;
            if sel[i] < choices[i].len() {
                break;
            }
            sel[i] = 0;
            i += 1;
        }
    }
}

fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> RatPoly {
    let mut acc = RatPoly::default();
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        let mut basis = RatPoly::new(vec![BigRational::one()]);
        let mut den = BigRational::one();
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                basis = basis.mul(&RatPoly::new(vec![-xj.clone(), BigRational::one()]));
                den *= xi - xj;
            }
        }
        let term = basis.scale(&(yi / den));
        acc = acc.sub(&term.scale(&-BigRational::one()));
    }
    acc
}

/// Positive divisors by trial division, ascending.
pub fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    if n.is_zero() {
        return vec![BigInt::one()];
    }
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut m = n.clone();
    let mut d = BigInt::from(2);
    while &d * &d <= m {
        let mut e = 0;
        while (&m % &d).is_zero() {
            m /= &d;
            e += 1;
        }
        if e > 0 {
            primes.push((d.clone(), e));
        }
        d += if d == BigInt::from(2) { 1 } else { 2 };
    }
    if m > BigInt::one() {
        primes.push((m, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in primes {
        let mut next = Vec::new();
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    divs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    fn product(fs: &[(IntPolynomial, usize)]) -> IntPolynomial {
        fs.iter()
            .fold(IntPolynomial::one(), |acc, (f, m)| acc.mul(&f.pow(*m as u32)))
    }

    #[test]
    fn reference_char_poly_splits_into_two() {
        // (t - 1)(t^4 - 10t^3 + 18t^2 - 8t + 1)
        let p = poly(&[-1, 9, -26, 28, -11, 1]);
        let fs = factor_rational(&p).unwrap();
        assert_eq!(fs, vec![(poly(&[-1, 1]), 1), (poly(&[1, -8, 18, -10, 1]), 1)]);
    }

    #[test]
    fn quartic_is_irreducible() {
        let q = poly(&[1, -8, 18, -10, 1]);
        assert_eq!(factor_rational(&q).unwrap(), vec![(q, 1)]);
    }

    #[test]
    fn difference_of_squares() {
        let fs = factor_rational(&poly(&[-1, 0, 1])).unwrap();
        assert_eq!(fs, vec![(poly(&[-1, 1]), 1), (poly(&[1, 1]), 1)]);
    }

    #[test]
    fn product_of_quadratics_without_rational_roots() {
        // (t^2 - 2)(t^2 + t + 1)(t^2 - 3t + 5)
        let a = poly(&[-2, 0, 1]);
        let b = poly(&[1, 1, 1]);
        let c = poly(&[5, -3, 1]);
        let p = a.mul(&b).mul(&c);
        let fs = factor_rational(&p).unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(product(&fs), p);
    }

    #[test]
    fn repeated_and_nonmonic_factors() {
        // (2t - 1)^2 (3t^2 + 1) (t^4 + 1)
        let a = poly(&[-1, 2]);
        let b = poly(&[1, 0, 3]);
        let c = poly(&[1, 0, 0, 0, 1]);
        let p = a.pow(2).mul(&b).mul(&c).mul(&poly(&[-6]));
        let fs = factor_rational(&p).unwrap();
        assert!(fs.contains(&(a.clone(), 2)));
        assert!(fs.contains(&(b.clone(), 1)));
        assert!(fs.contains(&(c.clone(), 1)));
        assert_eq!(product(&fs), p.primitive_part());
    }

    #[test]
    fn kronecker_agrees_with_numeric_search() {
        let p = poly(&[-2, 0, 1]).mul(&poly(&[3, 0, 1]));
        let g = kronecker_factor(&p, 2).unwrap();
        assert!(p.div_exact(&g).is_some());
        assert_eq!(kronecker_factor(&poly(&[1, -8, 18, -10, 1]), 2), None);
    }

    #[test]
    fn degree_cap() {
        let p = poly(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(factor_rational(&p), Err(FactorError::DegreeCapExceeded(9)));
    }

    #[test]
    fn divisor_listing() {
        let d: Vec<i64> = divisors(&BigInt::from(12))
            .iter()
            .map(|x| x.to_i64().unwrap())
            .collect();
        assert_eq!(d, vec![1, 2, 3, 4, 6, 12]);
    }
}
