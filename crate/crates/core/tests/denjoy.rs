use std::sync::OnceLock;

use iet_flips::denjoy::*;
use iet_flips::lattice::LatticeIet;
use iet_flips::{reference, Scalar};

struct Setup {
    word: TwoSidedWord,
    slopes: LogSlopeVector,
    point: BlowupPoint,
    params: DenjoyParams,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let params = DenjoyParams::default();
        let word = TwoSidedWord::new(&reference::substitution(), params.horizon + params.window + 1).unwrap();
        let e = reference::exact();
        let (slopes, point) = log_slope_select(&reference::matrix(), e.lengths(), &word, &params).unwrap();
        Setup {
            word,
            slopes,
            point,
            params,
        }
    })
}

fn gaps(w: &[f64], n: usize) -> Result<GapSystem, DenjoyError> {
    let s = setup();
    let e = reference::exact();
    let lat = LatticeIet::new(&e, lattice_approximations(&e));
    gap_system_build(&lat, &s.word, w, s.point.center, n, s.params.window)
}

fn certify(gs: &GapSystem) -> WanderingCertificate {
    let e = reference::exact();
    let t = aiet_from_gaps(gs, e.perm());
    let tol = Tolerances::from_tail(gs.tail);
    verify_wandering(gs, &t, (0.0, 1.0), setup().point.kappa(), &tol, 100, 7)
}

fn target_exponent() -> f64 {
    let s = reference::spectral();
    let t1 = s.theta1.as_f64();
    let t2 = s
        .real_roots
        .iter()
        .map(|r| r.value.as_f64())
        .filter(|&x| x > 1.0 + 1e-9 && x < t1 - 1e-9)
        .fold(0.0, f64::max);
    t2.ln() / t1.ln()
}

#[test]
fn log_slopes_are_exact_eigen_data() {
    let s = setup();
    assert!(s.slopes.eigen_identity);
    assert!(s.slopes.orthogonal);
    let m = s.slopes.w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!((m - 1.0).abs() < 1e-12);
    // numeric left eigenvector, independently of the exact kernel solve
    let a = reference::MATRIX;
    let t2 = s.slopes.theta2.as_f64();
    assert!((t2 - 1.5881232406).abs() < 1e-9);
    for j in 0..5 {
        let lhs: f64 = (0..5).map(|i| s.slopes.w[i] * a[i][j] as f64).sum();
        assert!((lhs - t2 * s.slopes.w[j]).abs() < 1e-10);
    }
    let alpha = reference::float();
    let dot: f64 = s.slopes.w.iter().zip(alpha.lengths()).map(|(w, a)| w * a).sum();
    assert!(dot.abs() < 1e-12);
}

#[test]
fn blowup_point_exponents_match_eigenvalue_ratio() {
    let s = setup();
    let target = target_exponent();
    assert!((target - 0.2247).abs() < 1e-3);
    assert!(
        (s.point.kappa_forward - target).abs() <= 0.05,
        "{}",
        s.point.kappa_forward
    );
    assert!(
        (s.point.kappa_backward - target).abs() <= 0.05,
        "{}",
        s.point.kappa_backward
    );
}

#[test]
fn sign_decides_decay_along_the_word() {
    let s = setup();
    let n = 100_000;
    let c = s.point.center;
    let word: Vec<usize> = (0..n as i64).map(|k| s.word.symbol(c + k).unwrap()).collect();
    let good = birkhoff_profile_from(&word, &s.slopes.w, n, 1000);
    assert!(good.decaying);
    assert!((good.kappa - target_exponent()).abs() <= 0.05, "{}", good.kappa);
    let neg: Vec<f64> = s.slopes.w.iter().map(|x| -x).collect();
    assert!(!birkhoff_profile_from(&word, &neg, n, 1000).decaying);
}

#[test]
fn wrong_sign_diverges() {
    let neg: Vec<f64> = setup().slopes.w.iter().map(|x| -x).collect();
    assert!(matches!(gaps(&neg, 200), Err(DenjoyError::DivergentGaps(_))));
}

#[test]
fn zero_gaps_give_a_single_gap_and_no_map() {
    let gs = gaps(&setup().slopes.w, 0).unwrap();
    assert_eq!(gs.len(), 1);
    assert_eq!(gs.total_gap, gs.gaps[0]);
    assert!(aiet_from_gaps(&gs, reference::exact().perm()).aiet.is_none());
}

#[test]
fn gap_ratios_follow_the_word() {
    let w = &setup().slopes.w;
    let gs = gaps(w, 300).unwrap();
    for k in 0..gs.len() - 1 {
        let r = gs.gaps[k + 1] / gs.gaps[k];
        let want = w[gs.symbols[k] - 1].exp();
        assert!((r / want - 1.0).abs() < 1e-9);
    }
    let t = aiet_from_gaps(&gs, reference::exact().perm());
    assert_eq!(t.flips, [true, true, false, false, true]);
    let mut mags: Vec<f64> = t.slopes.iter().map(|s| s.abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    assert_eq!(mags.len(), 5);
}

#[test]
fn equal_orbit_points_break_disjointness() {
    let mut gs = gaps(&setup().slopes.w, 50).unwrap();
    assert!(certify(&gs).disjoint);
    let (a, b) = (10, 11);
    gs.orbit_points[b] = gs.orbit_points[a];
    gs.rank[b] = gs.rank[a];
    gs.positions = positions_from_ranks(&gs.rank, &gs.gaps);
    let c = certify(&gs);
    assert!(!c.disjoint);
    assert!(c.max_overlap > 0.0);
}

#[test]
fn doubling_truncation_does_not_worsen_affine_defect() {
    let w = &setup().slopes.w;
    let worst = |n| {
        certify(&gaps(w, n).unwrap())
            .affine_consistency
            .into_iter()
            .fold(0.0, f64::max)
    };
    let (half, full) = (worst(2500), worst(5000));
    assert!(full <= 2.0 * half, "{full} vs {half}");
}

#[test]
fn outer_gaps_carry_little_mass() {
    let gs = gaps(&setup().slopes.w, 5000).unwrap();
    let outer: f64 = (-5000i64..=5000)
        .filter(|n| n.abs() > 4000)
        .map(|n| gs.gaps[gs.index(n)])
        .sum();
    let share = outer / gs.total_gap;
    assert!(share < 1e-3, "gaps with |n| > 4000 carry {share:.3e} of the total");
}

#[test]
fn probe_matches_lengths() {
    let e = reference::float();
    let seeds = random_seeds(&e, 5, 1);
    let p = ergodic_probe(&e, &seeds, 1_000_000, 1).unwrap();
    assert!((p.averages[0][0] - 0.380).abs() < 5e-3);
    assert!(p.max_deviation() < 5e-3);
    assert!(matches!(
        ergodic_probe(&e, &seeds, 9_999, 1),
        Err(DenjoyError::TooFewSteps(_))
    ));
}
