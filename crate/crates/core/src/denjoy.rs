//! Denjoy blow-up of a self-similar IET with flips.
//!
//! The orbit of a point `p` of `E` is replaced by a sequence of gaps with
//! `g_{n+1} = exp(w_{a_n}) g_n`, where `a_n` is the piece of `E^n(p)` and `w`
//! is a left eigenvector of the self-similarity matrix for a second real
//! eigenvalue `1 < theta_2 < theta_1`. Collapsing the gaps gives back `E`; the
//! map carrying gap `n` onto gap `n + 1` extends to an affine IET `T` whose
//! gaps are wandering intervals.
//!
//! `p = E^c(0+)` is taken on the exact one-sided orbit of the left end of the
//! domain, with `c` a local maximum of the log-gap profile `U` over a window,
//! so that every kept gap is smaller than `g_0 = 1`.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{Aiet, Iet, IetError, PiecewiseMap, SignedPermutation};
use crate::lattice::{LatticeIet, OneSided};
use crate::numfield::AlgebraicNumber;
use crate::scalar::Scalar;
use crate::selfsim::{fixed_word, SelfSimError, Side, Substitution};
use crate::spectral::{conjugate_screen, eigen_left, pairing_is_zero, IntMatrix, ScreenReason, SpectralError};

#[derive(Debug, Error)]
pub enum DenjoyError {
    #[error("matrix does not pass the screen: {0}")]
    NotQualified(ScreenReason),
    #[error("neither sign of the log-slope vector gives decaying sums within the horizon")]
    SignSelectionFailed,
    #[error("orbit symbol {orbit} differs from word symbol {word} at index {index}")]
    WordMismatch { index: i64, orbit: usize, word: usize },
    #[error("orbit hit a discontinuity after {0} reseeds")]
    DiscontinuityHit(usize),
    #[error("gap {0} is not smaller than the gap at the blow-up point")]
    DivergentGaps(i64),
    #[error("word too short for index {0}")]
    WordTooShort(i64),
    #[error("at least 10000 steps are required, got {0}")]
    TooFewSteps(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    SelfSim(#[from] SelfSimError),
    #[error(transparent)]
    Iet(#[from] IetError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenjoyParams {
    /// Gaps kept on each side of the blow-up point.
    pub gaps: usize,
    /// Half-width of the window in which the blow-up point is a maximum of `U`.
    pub window: usize,
    /// Orbit indices searched for the blow-up point.
    pub horizon: usize,
    /// First index used in the decay-exponent fit.
    pub kappa_from: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DenjoyParams {
    fn default() -> Self {
        DenjoyParams {
            gaps: 5000,
            window: 100_000,
            horizon: 1_000_000,
            kappa_from: 1000,
            samples: 100,
            seed: 0x5eed,
        }
    }
}

/// Bi-infinite word read off the fixed points of a substitution; index 0 is
/// the first symbol of the forward fixed point.
#[derive(Clone, Debug)]
pub struct TwoSidedWord {
    backward: Vec<usize>,
    forward: Vec<usize>,
}

impl TwoSidedWord {
    pub fn new(sigma: &Substitution, length: usize) -> Result<Self, DenjoyError> {
        let fw = fixed_word(sigma, Side::TwoSided, length)?;
        let mut backward = fw.left;
        backward.reverse();
        Ok(TwoSidedWord {
            backward,
            forward: fw.right,
        })
    }

    /// 1-based symbol at index `m`.
    pub fn symbol(&self, m: i64) -> Option<usize> {
        if m >= 0 {
            self.forward.get(m as usize).copied()
        } else {
            self.backward.get((-m - 1) as usize).copied()
        }
    }

    pub fn reach(&self) -> (i64, i64) {
        (-(self.backward.len() as i64), self.forward.len() as i64 - 1)
    }

    /// `U_m` for `m` in `lo..=hi`, with `U_0 = 0` and `U_{m+1} = U_m + w_{a_m}`.
    pub fn log_profile(&self, w: &[f64], lo: i64, hi: i64) -> Result<Vec<f64>, DenjoyError> {
        let (a, b) = self.reach();
        if lo < a {
            return Err(DenjoyError::WordTooShort(lo));
        }
        if hi > b + 1 {
            return Err(DenjoyError::WordTooShort(hi));
        }
        let (l, h) = (lo.min(0), hi.max(0));
        let mut u = vec![0.0; (h - l + 1) as usize];
        let z = (-l) as usize;
        for m in 0..h as usize {
            u[z + m + 1] = u[z + m] + w[self.forward[m] - 1];
        }
        for k in 1..=((-l) as usize) {
            u[z - k] = u[z - k + 1] - w[self.backward[k - 1] - 1];
        }
        Ok(u[(lo - l) as usize..=(hi - l) as usize].to_vec())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BirkhoffProfile {
    pub sums: Vec<f64>,
    pub kappa: f64,
    pub decaying: bool,
}

/// Partial sums `S_k` of `w` along `word` (1-based symbols) for `k = 0..=n`,
/// the exponent of `max_{j<=k} (-S_j) ~ c k^kappa` fitted on log-spaced
/// `k >= k0`, and whether the upper envelope of `S` decreases to negative
/// values over dyadic blocks.
pub fn birkhoff_profile(word: &[usize], w: &[f64], n: usize) -> BirkhoffProfile {
    birkhoff_profile_from(word, w, n, 10)
}

pub fn birkhoff_profile_from(word: &[usize], w: &[f64], n: usize, k0: usize) -> BirkhoffProfile {
    assert!(word.len() >= n, "word shorter than the requested horizon");
    let mut sums = Vec::with_capacity(n + 1);
    sums.push(0.0);
    for &a in &word[..n] {
        let last = *sums.last().expect("nonempty");
        sums.push(last + w[a - 1]);
    }
    let kappa = fit_exponent(&sums, k0.max(1), n);
    let decaying = envelope_decreasing(&sums);
    BirkhoffProfile { sums, kappa, decaying }
}

fn fit_exponent(sums: &[f64], k0: usize, k1: usize) -> f64 {
    if k1 <= k0 {
        return f64::NAN;
    }
    let mut rm = vec![f64::NEG_INFINITY; sums.len()];
    for k in 1..sums.len() {
        rm[k] = rm[k - 1].max(-sums[k]);
    }
    let (l0, l1) = ((k0 as f64).ln(), (k1 as f64).ln());
    let mut ks: Vec<usize> = (0..200)
        .map(|j| (l0 + (l1 - l0) * j as f64 / 199.0).exp().round() as usize)
        .collect();
    ks.dedup();
    let pts: Vec<(f64, f64)> = ks
        .into_iter()
        .filter(|&k| k >= 1 && k < sums.len() && rm[k] > 0.0)
        .map(|k| ((k as f64).ln(), rm[k].ln()))
        .collect();
    if pts.len() < 10 {
        return f64::NAN;
    }
    least_squares_slope(&pts)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// The upper envelope on `(K/2, K]` is negative and below the one on
/// `(0, K/16]`, and the running maximum of `-S` keeps growing.
fn envelope_decreasing(sums: &[f64]) -> bool {
    let k = sums.len() - 1;
    if k < 16 {
        return false;
    }
    let top = |lo: usize, hi: usize| sums[lo + 1..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let deep = |hi: usize| sums[1..=hi].iter().copied().fold(f64::NEG_INFINITY, |a, s| a.max(-s));
    let late = top(k / 2, k);
    late < 0.0 && late < top(0, k / 16) && deep(k) > deep(k / 16)
}

#[derive(Clone, Debug)]
pub struct LogSlopeVector {
    /// `+-` the normalized left eigenvector, in `Q(theta_2)`.
    pub exact: Vec<AlgebraicNumber>,
    pub w: Vec<f64>,
    pub sign: i8,
    pub theta2: AlgebraicNumber,
    /// `w^T A = theta_2 w^T`, checked exactly.
    pub eigen_identity: bool,
    /// `<w, alpha> = 0`, checked exactly.
    pub orthogonal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupPoint {
    /// `p = E^center(0+)`.
    pub center: i64,
    /// Gap mass beyond `gaps` within the window, relative to the window mass.
    pub window_tail: f64,
    pub kappa_forward: f64,
    pub kappa_backward: f64,
}

impl BlowupPoint {
    pub fn kappa(&self) -> f64 {
        0.5 * (self.kappa_forward + self.kappa_backward)
    }
}

/// Normalized left eigenvector of `a` for the second real eigenvalue, and
/// the sign and blow-up point minimizing the truncated gap mass among
/// window maxima whose profiles decay in both directions.
pub fn log_slope_select(
    a: &IntMatrix,
    alpha: &[AlgebraicNumber],
    word: &TwoSidedWord,
    params: &DenjoyParams,
) -> Result<(LogSlopeVector, BlowupPoint), DenjoyError> {
    let verdict = conjugate_screen(a)?;
    let theta2 = match (verdict.qualifies, verdict.theta2) {
        (true, Some(t)) => t,
        _ => return Err(DenjoyError::NotQualified(verdict.reason)),
    };
    let base = eigen_left(a, &theta2)?;
    let eigen_identity = is_left_eigenvector(a, &base, &theta2);
    let orthogonal = pairing_is_zero(&base, alpha)?;
    let base_f: Vec<f64> = base.iter().map(Scalar::as_f64).collect();

    let mut best: Option<(f64, i8, BlowupPoint)> = None;
    for sign in [1i8, -1] {
        let w: Vec<f64> = base_f.iter().map(|x| f64::from(sign) * x).collect();
        if let Some(bp) = best_center(word, &w, params)? {
            if best.as_ref().is_none_or(|b| bp.window_tail < b.0) {
                best = Some((bp.window_tail, sign, bp));
            }
        }
    }
    let (_, sign, bp) = best.ok_or(DenjoyError::SignSelectionFailed)?;
    let exact: Vec<AlgebraicNumber> = if sign > 0 {
        base
    } else {
        base.into_iter().map(|x| -x).collect()
    };
    let w = exact.iter().map(Scalar::as_f64).collect();
    Ok((
        LogSlopeVector {
            exact,
            w,
            sign,
            theta2,
            eigen_identity,
            orthogonal,
        },
        bp,
    ))
}

fn is_left_eigenvector(a: &IntMatrix, w: &[AlgebraicNumber], theta: &AlgebraicNumber) -> bool {
    let n = a.dim();
    (0..n).all(|i| {
        let lhs = (0..n).fold(AlgebraicNumber::zero(), |acc, j| {
            acc + &w[j] * &AlgebraicNumber::from_int(a.get(j, i))
        });
        let rhs = theta * &w[i];
        (lhs - rhs).is_zero_exact()
    })
}

fn best_center(word: &TwoSidedWord, w: &[f64], params: &DenjoyParams) -> Result<Option<BlowupPoint>, DenjoyError> {
    let h = params.horizon as i64;
    let win = params.window.max(params.gaps);
    let u = word.log_profile(w, -h, h)?;
    let mut best: Option<BlowupPoint> = None;
    for q in window_maxima(&u, win) {
        let fw: Vec<f64> = (0..=win).map(|k| u[q + k] - u[q]).collect();
        let bw: Vec<f64> = (0..=win).map(|k| u[q - k] - u[q]).collect();
        if !(envelope_decreasing(&fw) && envelope_decreasing(&bw)) {
            continue;
        }
        let inner: f64 = (q - params.gaps..=q + params.gaps).map(|m| (u[m] - u[q]).exp()).sum();
        let all: f64 = (q - win..=q + win).map(|m| (u[m] - u[q]).exp()).sum();
        let window_tail = 1.0 - inner / all;
        if best.as_ref().is_none_or(|b| window_tail < b.window_tail) {
            best = Some(BlowupPoint {
                center: q as i64 - h,
                window_tail,
                kappa_forward: fit_exponent(&fw, params.kappa_from, win),
                kappa_backward: fit_exponent(&bw, params.kappa_from, win),
            });
        }
    }
    Ok(best)
}

/// Indices `q` with `w <= q < len - w` and `u[q] = max u[q-w..=q+w]`.
pub fn window_maxima(u: &[f64], w: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut dq: VecDeque<usize> = VecDeque::new();
    for r in 0..u.len() {
        while dq.back().is_some_and(|&b| u[b] <= u[r]) {
            dq.pop_back();
        }
        dq.push_back(r);
        if r >= 2 * w {
            let l = r - 2 * w;
            while dq.front().is_some_and(|&f| f < l) {
                dq.pop_front();
            }
            let q = r - w;
            if u[q] >= u[*dq.front().expect("nonempty")] {
                out.push(q);
            }
        }
    }
    out
}

/// Truncated blow-up; per-gap vectors are indexed by `n + N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapSystem {
    pub n_max: usize,
    /// `p = E^center(0+)`; zero for hand-built systems.
    pub center: i64,
    pub w: Vec<f64>,
    /// 1-based symbol `a_n`.
    pub symbols: Vec<usize>,
    pub orbit_points: Vec<f64>,
    /// Rank of each orbit point in the order of the interval; equal ranks
    /// mean equal points.
    pub rank: Vec<usize>,
    /// `ln g_n` with `g_0 = 1`.
    pub log_gaps: Vec<f64>,
    /// `g_n / total_gap`.
    pub gaps: Vec<f64>,
    pub positions: Vec<f64>,
    /// `sum g_n` with `g_0 = 1`.
    pub total_gap: f64,
    /// Blown-up images of the breakpoints and slot boundaries of `E`.
    pub blown_breaks: Vec<f64>,
    pub blown_slots: Vec<f64>,
    /// Estimated mass of the omitted gaps relative to all gaps.
    pub tail: f64,
}

impl GapSystem {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index(&self, n: i64) -> usize {
        (n + self.n_max as i64) as usize
    }

    /// Gap indices sorted by position.
    pub fn order(&self) -> Vec<usize> {
        let mut ord: Vec<usize> = (0..self.len()).collect();
        ord.sort_by(|&a, &b| {
            self.positions[a]
                .total_cmp(&self.positions[b])
                .then(self.rank[a].cmp(&self.rank[b]))
        });
        ord
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,symbol,orbit_point,gap_length,position\n");
        for k in 0..self.len() {
            let n = k as i64 - self.n_max as i64;
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e}",
                n, self.symbols[k], self.orbit_points[k], self.gaps[k], self.positions[k]
            );
        }
        out
    }
}

/// `pos(n) = sum of normalized g_m over m with rank(m) < rank(n)`.
pub fn positions_from_ranks(rank: &[usize], gaps: &[f64]) -> Vec<f64> {
    let mut ord: Vec<usize> = (0..rank.len()).collect();
    ord.sort_by_key(|&k| rank[k]);
    let mut pos = vec![0.0; rank.len()];
    let mut acc = 0.0;
    let mut i = 0;
    while i < ord.len() {
        let mut j = i;
        while j < ord.len() && rank[ord[j]] == rank[ord[i]] {
            pos[ord[j]] = acc;
            j += 1;
        }
        for &k in &ord[i..j] {
            acc += gaps[k];
        }
        i = j;
    }
    pos
}

/// Double approximations of the lengths of an exact IET with error bounds.
pub fn lattice_approximations(e: &Iet<AlgebraicNumber>) -> Vec<(f64, f64)> {
    e.lengths().iter().map(AlgebraicNumber::f64_with_error).collect()
}

/// Blow up the orbit of `p = E^center(0+)` on `[-n, n]`, checking every
/// visited symbol against `word`. The tail is measured on `[-window, window]`
/// and extrapolated with a stretched-exponential fit of the upper envelope.
pub fn gap_system_build<S: Scalar>(
    lat: &LatticeIet<'_, S>,
    word: &TwoSidedWord,
    w: &[f64],
    center: i64,
    n: usize,
    window: usize,
) -> Result<GapSystem, DenjoyError> {
    let ni = n as i64;
    let pieces = lat.iet().pieces();
    let check = |m: i64, piece: usize| -> Result<(), DenjoyError> {
        let ws = word.symbol(m).ok_or(DenjoyError::WordTooShort(m))?;
        if ws != piece + 1 {
            return Err(DenjoyError::WordMismatch {
                index: m,
                orbit: piece + 1,
                word: ws,
            });
        }
        Ok(())
    };

    // walk from 0+ to the first kept index
    let start = center - ni;
    let mut cur = OneSided::left_end(pieces);
    let mut m = 0i64;
    while m < start {
        let (i, q) = lat.forward(&cur)?;
        check(m, i)?;
        cur = q;
        m += 1;
    }
    while m > start {
        let (i, q) = lat.inverse(&cur)?;
        check(m - 1, i)?;
        cur = q;
        m -= 1;
    }
    let mut points = Vec::with_capacity(2 * n + 1);
    let mut symbols = Vec::with_capacity(2 * n + 1);
    for k in 0..=2 * n {
        let i = lat.locate(&cur)?;
        check(start + k as i64, i)?;
        symbols.push(i + 1);
        points.push(cur.clone());
        if k < 2 * n {
            cur = lat.forward(&cur)?.1;
        }
    }

    let mut log_gaps = vec![0.0; 2 * n + 1];
    for k in n..2 * n {
        log_gaps[k + 1] = log_gaps[k] + w[symbols[k] - 1];
    }
    for k in (0..n).rev() {
        log_gaps[k] = log_gaps[k + 1] - w[symbols[k] - 1];
    }
    if let Some(k) = (0..log_gaps.len()).find(|&k| k != n && log_gaps[k] > 0.0) {
        return Err(DenjoyError::DivergentGaps(k as i64 - ni));
    }
    let raw: Vec<f64> = log_gaps.iter().map(|x| x.exp()).collect();
    let total_gap: f64 = raw.iter().sum();
    let gaps: Vec<f64> = raw.iter().map(|g| g / total_gap).collect();

    let mut ord: Vec<usize> = (0..points.len()).collect();
    ord.sort_by(|&a, &b| lat.cmp(&points[a], &points[b]));
    let mut rank = vec![0; points.len()];
    for k in 1..ord.len() {
        let same = lat.cmp(&points[ord[k - 1]], &points[ord[k]]) == Ordering::Equal;
        rank[ord[k]] = rank[ord[k - 1]] + usize::from(!same);
    }
    let positions = positions_from_ranks(&rank, &gaps);
    let blown = |v: &[i64]| -> f64 {
        // number of sorted points below v, then the mass before them
        let below = ord.partition_point(|&k| lat.cmp_value(&points[k], v) == Ordering::Less);
        ord[..below].iter().map(|&k| gaps[k]).sum()
    };
    let blown_breaks = (0..=pieces).map(|k| blown(lat.break_coeffs(k))).collect();
    let blown_slots = (0..=pieces).map(|j| blown(lat.slot_coeffs(j))).collect();

    let tail = tail_estimate(word, w, center, n, window.max(n), total_gap)?;
    Ok(GapSystem {
        n_max: n,
        center,
        w: w.to_vec(),
        symbols,
        orbit_points: points.iter().map(|p| lat.value(p)).collect(),
        rank,
        log_gaps,
        gaps,
        positions,
        total_gap,
        blown_breaks,
        blown_slots,
        tail,
    })
}

fn tail_estimate(
    word: &TwoSidedWord,
    w: &[f64],
    center: i64,
    n: usize,
    win: usize,
    inner: f64,
) -> Result<f64, DenjoyError> {
    let (a, b) = word.reach();
    let win = win.min((center - a) as usize).min((b + 1 - center) as usize);
    if win <= n {
        return Ok(1.0);
    }
    let wi = win as i64;
    let u = word.log_profile(w, center - wi, center + wi)?;
    let c = win;
    let mut outer = 0.0;
    for k in n + 1..=win {
        outer += (u[c + k] - u[c]).exp() + (u[c - k] - u[c]).exp();
    }
    let fw: Vec<f64> = (0..=win).map(|k| u[c + k] - u[c]).collect();
    let bw: Vec<f64> = (0..=win).map(|k| u[c - k] - u[c]).collect();
    let beyond = envelope_tail(&fw) + envelope_tail(&bw);
    Ok((outer + beyond) / (inner + outer + beyond))
}

/// `sum_{k > K} exp(-c k^kappa)` for the fit `-max_{j>=k} S_j ~ c k^kappa`
/// on the last decade of `S`.
fn envelope_tail(s: &[f64]) -> f64 {
    let k = s.len() - 1;
    let mut env = vec![0.0; s.len()];
    env[k] = s[k];
    for j in (0..k).rev() {
        env[j] = s[j].max(env[j + 1]);
    }
    let pts: Vec<(f64, f64)> = (0..100)
        .map(|j| (k / 10) + j * (k - k / 10) / 99)
        .filter(|&j| j >= 1 && env[j] < 0.0)
        .map(|j| ((j as f64).ln(), (-env[j]).ln()))
        .collect();
    if pts.len() < 10 {
        return f64::INFINITY;
    }
    let kappa = least_squares_slope(&pts);
    if !(kappa > 0.0) {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let lc = pts.iter().map(|p| p.1 - kappa * p.0).sum::<f64>() / n;
    let c = lc.exp();
    // trapezoid on a geometric grid
    let f = |x: f64| (-c * x.powf(kappa)).exp();
    let (mut x, mut acc) = (k as f64, 0.0);
    loop {
        let x2 = x * 1.01;
        let (fa, fb) = (f(x), f(x2));
        acc += 0.5 * (fa + fb) * (x2 - x);
        x = x2;
        if fb < 1e-300 || x > 1e300 {
            break;
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct AietApprox {
    /// `None` when some piece of `E` receives no gap (for instance `N = 0`).
    pub aiet: Option<Aiet<f64>>,
    pub flips: Vec<bool>,
    /// `tau_i exp(w_i)`.
    pub slopes: Vec<f64>,
    pub truncation_tail: f64,
    /// Indices `+-N`, excluded from certification.
    pub boundary: (i64, i64),
}

/// Affine IET carrying gap `n` onto gap `n + 1`: breakpoints and slot
/// anchors are the blown-up breakpoints and slot boundaries of `E`.
pub fn aiet_from_gaps(gs: &GapSystem, perm: &SignedPermutation) -> AietApprox {
    let n = perm.len();
    let flips: Vec<bool> = (0..n).map(|i| perm.flipped(i)).collect();
    let slopes: Vec<f64> = (0..n)
        .map(|i| if flips[i] { -gs.w[i].exp() } else { gs.w[i].exp() })
        .collect();
    let anchors: Vec<f64> = (0..n)
        .map(|i| {
            let j = perm.slot(i);
            if flips[i] {
                gs.blown_slots[j + 1]
            } else {
                gs.blown_slots[j]
            }
        })
        .collect();
    let aiet = Aiet::from_parts_within(
        gs.blown_breaks.clone(),
        perm.clone(),
        anchors,
        slopes.clone(),
        10.0 * gs.tail + 1e-9,
    )
    .ok();
    let nm = gs.n_max as i64;
    AietApprox {
        aiet,
        flips,
        slopes,
        truncation_tail: gs.tail,
        boundary: (-nm, nm),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub affine: f64,
    pub semiconjugacy: f64,
    pub density: f64,
    pub one_sided_density: f64,
}

impl Tolerances {
    pub fn from_tail(tail: f64) -> Self {
        Tolerances {
            affine: 10.0 * tail,
            semiconjugacy: 10.0 * tail,
            density: 0.01,
            one_sided_density: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WanderingCertificate {
    pub gaps: usize,
    pub truncation_tail: f64,
    pub tolerances: Tolerances,
    pub disjoint: bool,
    pub max_overlap: f64,
    /// Per symbol.
    pub affine_consistency: Vec<f64>,
    pub affine_ok: bool,
    /// Gap midpoints whose image under `T` leaves the successor gap.
    pub midpoint_failures: usize,
    pub semiconjugacy_defect: f64,
    pub semiconjugacy_ok: bool,
    /// Largest distance in `[0, 1]` to an orbit point of a kept gap.
    pub density: f64,
    pub density_forward: f64,
    pub density_backward: f64,
    pub dense: bool,
    pub two_sided_density: bool,
    pub birkhoff_kappa: f64,
    pub layout_defect: f64,
    pub distinct_slopes: usize,
}

impl WanderingCertificate {
    pub fn passed(&self) -> bool {
        self.disjoint && self.affine_ok && self.semiconjugacy_ok && self.dense && self.two_sided_density
    }
}

/// Certify disjointness, affine consistency, the semiconjugacy and density
/// of the truncated system; `kappa` is carried into the certificate.
pub fn verify_wandering(
    gs: &GapSystem,
    t: &AietApprox,
    domain: (f64, f64),
    kappa: f64,
    tol: &Tolerances,
    samples: usize,
    seed: u64,
) -> WanderingCertificate {
    let len = gs.len();
    let nm = gs.n_max;

    // disjointness, with positions recomputed from the ranks
    let pos = positions_from_ranks(&gs.rank, &gs.gaps);
    let mut ord: Vec<usize> = (0..len).collect();
    ord.sort_by(|&a, &b| pos[a].total_cmp(&pos[b]));
    let mut max_overlap: f64 = 0.0;
    for p in ord.windows(2) {
        max_overlap = max_overlap.max(pos[p[0]] + gs.gaps[p[0]] - pos[p[1]]);
    }
    let disjoint = max_overlap <= 0.0;

    // affine consistency on gap midpoints
    let mid: Vec<f64> = (0..len).map(|k| pos[k] + 0.5 * gs.gaps[k]).collect();
    let pieces = gs.w.len();
    let mut affine = vec![0.0f64; pieces];
    let mut anchor: Vec<Option<usize>> = vec![None; pieces];
    for k in 0..len.saturating_sub(1) {
        let i = gs.symbols[k] - 1;
        match anchor[i] {
            None => anchor[i] = Some(k),
            Some(k0) => {
                let d = (mid[k + 1] - mid[k0 + 1]) - t.slopes[i] * (mid[k] - mid[k0]);
                affine[i] = affine[i].max(d.abs());
            }
        }
    }
    let affine_ok = affine.iter().all(|&d| d <= tol.affine);

    // semiconjugacy
    let h = |y: f64| -> usize {
        let at = ord.partition_point(|&k| pos[k] <= y);
        ord[at.saturating_sub(1)]
    };
    let (mut defect, mut failures) = (0.0f64, 0usize);
    match &t.aiet {
        Some(map) => {
            let probe = |y: f64, k: usize| -> f64 {
                match map.eval(&y, crate::iet::Direction::Forward) {
                    Ok(ty) => (gs.orbit_points[k + 1] - gs.orbit_points[h(ty.clamp(0.0, 1.0))]).abs(),
                    Err(_) => f64::INFINITY,
                }
            };
            for k in 0..len.saturating_sub(1) {
                let d = probe(mid[k], k);
                if d > 0.0 {
                    failures += 1;
                }
                defect = defect.max(d);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut taken = 0;
            while taken < samples {
                let y: f64 = rng.gen();
                let k = h(y);
                if k == 0 || k + 1 == len {
                    continue;
                }
                defect = defect.max(probe(y, k));
                taken += 1;
            }
        }
        None => {
            defect = f64::INFINITY;
            failures = len.saturating_sub(1);
        }
    }
    let semiconjugacy_ok = defect <= tol.semiconjugacy;

    // density in the coordinates of E
    let dens = |sel: &mut dyn Iterator<Item = usize>| -> f64 {
        let mut v: Vec<f64> = sel
            .map(|k| (gs.orbit_points[k] - domain.0) / (domain.1 - domain.0))
            .collect();
        if v.is_empty() {
            return 1.0;
        }
        v.sort_by(f64::total_cmp);
        let mut d = v[0].max(1.0 - v[v.len() - 1]);
        for p in v.windows(2) {
            d = d.max(0.5 * (p[1] - p[0]));
        }
        d
    };
    let density = dens(&mut (0..len));
    let density_forward = dens(&mut (nm + 1..len));
    let density_backward = dens(&mut (0..nm));

    let mut mags: Vec<f64> = t.slopes.iter().map(|s| s.abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    WanderingCertificate {
        gaps: len,
        truncation_tail: gs.tail,
        tolerances: tol.clone(),
        disjoint,
        max_overlap,
        affine_ok,
        affine_consistency: affine,
        midpoint_failures: failures,
        semiconjugacy_defect: defect,
        semiconjugacy_ok,
        density,
        density_forward,
        density_backward,
        dense: density <= tol.density,
        two_sided_density: density_forward <= tol.one_sided_density && density_backward <= tol.one_sided_density,
        birkhoff_kappa: kappa,
        layout_defect: t.aiet.as_ref().map_or(f64::NAN, Aiet::layout_defect),
        distinct_slopes: mags.len(),
    }
}

/// Everything produced by one blow-up of an exact self-similar IET.
#[derive(Clone, Debug)]
pub struct DenjoyBuild {
    pub log_slopes: LogSlopeVector,
    pub blowup: BlowupPoint,
    pub gaps: GapSystem,
    pub aiet: AietApprox,
    pub certificate: WanderingCertificate,
}

/// Full pipeline for an IET `e` whose self-similarity has matrix `a` and
/// substitution `sigma` (so that the orbit of `0+` reads the fixed word).
pub fn denjoy_build(
    e: &Iet<AlgebraicNumber>,
    a: &IntMatrix,
    sigma: &Substitution,
    params: &DenjoyParams,
) -> Result<DenjoyBuild, DenjoyError> {
    let reach = params.horizon + params.window.max(params.gaps) + 1;
    let word = TwoSidedWord::new(sigma, reach)?;
    let (ls, bp) = log_slope_select(a, e.lengths(), &word, params)?;
    let lat = LatticeIet::new(e, lattice_approximations(e));
    let gs = gap_system_build(&lat, &word, &ls.w, bp.center, params.gaps, params.window)?;
    let t = aiet_from_gaps(&gs, e.perm());
    let lo = e.origin().as_f64();
    let domain = (lo, lo + e.total_length().as_f64());
    let tol = Tolerances::from_tail(gs.tail);
    let cert = verify_wandering(&gs, &t, domain, bp.kappa(), &tol, params.samples, params.seed);
    Ok(DenjoyBuild {
        log_slopes: ls,
        blowup: bp,
        gaps: gs,
        aiet: t,
        certificate: cert,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeStats {
    pub seeds: Vec<f64>,
    /// `averages[s][i]`: time fraction of seed `s` in piece `i`.
    pub averages: Vec<Vec<f64>>,
    /// Per piece, max minus min over seeds.
    pub spread: Vec<f64>,
    /// Per piece, max over seeds of the distance to the piece length.
    pub deviation: Vec<f64>,
    pub reseeds: usize,
}

impl ProbeStats {
    pub fn max_deviation(&self) -> f64 {
        self.deviation.iter().copied().fold(0.0, f64::max)
    }
}

/// Time averages of the piece indicators along `steps` iterates from each
/// seed; an orbit meeting a discontinuity is restarted from a fresh random
/// point (at most 10 times in all).
pub fn ergodic_probe(e: &Iet<f64>, seeds: &[f64], steps: usize, rng_seed: u64) -> Result<ProbeStats, DenjoyError> {
    if steps < 10_000 {
        return Err(DenjoyError::TooFewSteps(steps));
    }
    let n = e.pieces();
    let total = e.total_length();
    let origin = *e.origin();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut reseeds = 0;
    let mut used = Vec::with_capacity(seeds.len());
    let mut averages = Vec::with_capacity(seeds.len());
    for &s0 in seeds {
        let mut s = s0;
        let counts = loop {
            match piece_counts(e, s, steps) {
                Some(c) => break c,
                None if reseeds < 10 => {
                    reseeds += 1;
                    s = origin + total * rng.gen::<f64>();
                }
                None => return Err(DenjoyError::DiscontinuityHit(reseeds)),
            }
        };
        used.push(s);
        averages.push(counts.iter().map(|&c| c as f64 / steps as f64).collect::<Vec<f64>>());
    }
    let alpha: Vec<f64> = e.lengths().iter().map(|l| l / total).collect();
    let spread = (0..n)
        .map(|i| {
            let v = averages.iter().map(|a| a[i]);
            v.clone().fold(f64::NEG_INFINITY, f64::max) - v.fold(f64::INFINITY, f64::min)
        })
        .collect();
    let deviation = (0..n)
        .map(|i| averages.iter().map(|a| (a[i] - alpha[i]).abs()).fold(0.0, f64::max))
        .collect();
    Ok(ProbeStats {
        seeds: used,
        averages,
        spread,
        deviation,
        reseeds,
    })
}

fn piece_counts(e: &Iet<f64>, x0: f64, steps: usize) -> Option<Vec<u64>> {
    let b = e.breaks();
    let mut counts = vec![0u64; e.pieces()];
    let mut x = x0;
    for _ in 0..steps {
        let i = b.partition_point(|&t| t <= x).checked_sub(1)?;
        if i >= e.pieces() || x == b[i] {
            return None;
        }
        counts[i] += 1;
        x = e.apply_on_piece(i, &x);
    }
    Some(counts)
}

/// `n` seeds drawn uniformly from the domain of `e`.
pub fn random_seeds(e: &Iet<f64>, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| e.origin() + e.total_length() * rng.gen::<f64>())
        .collect()
}

/// Fraction of `steps` iterates of `T` from `y0` spent in the `k` largest
/// gaps, with the mass of those gaps.
pub fn gap_occupancy(t: &Aiet<f64>, gs: &GapSystem, k: usize, y0: f64, steps: usize) -> (f64, f64) {
    let mut idx: Vec<usize> = (0..gs.len()).collect();
    idx.sort_by(|&a, &b| gs.gaps[b].total_cmp(&gs.gaps[a]));
    idx.truncate(k);
    let mass = idx.iter().map(|&i| gs.gaps[i]).sum();
    let mut y = y0;
    let mut hits = 0usize;
    let mut done = 0usize;
    for _ in 0..steps {
        if idx
            .iter()
            .any(|&i| gs.positions[i] <= y && y < gs.positions[i] + gs.gaps[i])
        {
            hits += 1;
        }
        done += 1;
        match t.eval(&y, crate::iet::Direction::Forward) {
            Ok(z) => y = z,
            Err(_) => break,
        }
    }
    (hits as f64 / done as f64, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::iet_make;

    #[test]
    fn zero_vector_is_not_decaying() {
        let word: Vec<usize> = (0..1000).map(|k| 1 + k % 3).collect();
        let p = birkhoff_profile(&word, &[0.0; 3], 1000);
        assert!(p.sums.iter().all(|&s| s == 0.0));
        assert!(!p.decaying);
    }

    #[test]
    fn linear_drift_fits_exponent_one() {
        let word = vec![1usize; 20_000];
        let p = birkhoff_profile(&word, &[-0.5], 20_000);
        assert!(p.decaying);
        assert!((p.kappa - 1.0).abs() < 1e-9);
        let q = birkhoff_profile(&word, &[0.5], 20_000);
        assert!(!q.decaying);
    }

    #[test]
    fn window_maxima_small() {
        let u = [0.0, 3.0, 1.0, 0.0, 2.0, 5.0, 1.0, 0.0, 0.5];
        assert_eq!(window_maxima(&u, 1), vec![1, 5]);
        assert_eq!(window_maxima(&u, 3), vec![5]);
    }

    #[test]
    fn positions_share_equal_ranks() {
        let pos = positions_from_ranks(&[2, 0, 1, 1], &[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(pos[1], 0.0);
        assert_eq!(pos[2], 0.2);
        assert_eq!(pos[3], 0.2);
        assert!((pos[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn identity_probe_is_constant() {
        let e = iet_make(vec![0.25, 0.75], SignedPermutation::identity(2), 0.0).unwrap();
        let s = ergodic_probe(&e, &[0.1, 0.6], 10_000, 1).unwrap();
        assert_eq!(s.averages, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn half_rotation_probe() {
        let e = iet_make(vec![0.5, 0.5], SignedPermutation::new(vec![2, 1]).unwrap(), 0.0).unwrap();
        let s = ergodic_probe(&e, &[0.25], 10_000, 1).unwrap();
        assert_eq!(s.averages[0], vec![0.5, 0.5]);
        assert!(matches!(
            ergodic_probe(&e, &[0.25], 10, 1),
            Err(DenjoyError::TooFewSteps(10))
        ));
    }
}
