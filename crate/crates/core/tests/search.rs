use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iet_flips::rauzy::{rauzy_run, rauzy_step, RauzyError};
use iet_flips::reference;
use iet_flips::search::*;
use iet_flips::spectral::{conjugate_screen, ScreenReason};
use iet_flips::{Iet, IntMatrix, Scalar};

fn table1_candidate() -> CycleCandidate {
    let run = rauzy_run(&reference::exact(), 14).unwrap();
    let v = conjugate_screen(&reference::matrix()).unwrap();
    CycleCandidate {
        nodes: run.iter().map(|s| s.before.clone()).collect(),
        types: run.iter().map(|s| s.type_bit).collect(),
        product: reference::matrix(),
        verdict: v.reason,
        theta1: v.theta1.as_f64(),
        theta2: v.theta2.as_ref().map(Scalar::as_f64),
        validated: None,
        note: None,
    }
}

#[test]
fn reference_cycle_validates() {
    let c = cycle_validate(&table1_candidate()).unwrap();
    assert_eq!(c.validated, Some(true));
    assert_eq!(c.verdict, ScreenReason::Qualifies);
    assert!((c.theta1 - 7.829395152921).abs() < 1e-9);
    assert!(c.note.unwrap().starts_with("scale 7.829"));
}

#[test]
fn flipped_type_fails_validation() {
    let mut c = table1_candidate();
    c.types[3] ^= 1;
    assert_eq!(cycle_validate(&c).unwrap().validated, Some(false));
}

#[test]
fn screened_out_candidate_is_rejected() {
    let mut c = table1_candidate();
    c.product = IntMatrix::identity(5);
    assert!(matches!(cycle_validate(&c), Err(SearchError::NotQuasiPositive)));
}

#[test]
fn tiny_search_report() {
    let g = rauzy_graph_build(2, true).unwrap();
    assert_eq!(g.nodes.len(), 5);
    let r = cycle_search(&g, 4, 2, true).unwrap();
    assert_eq!((r.n, r.max_len), (2, 4));
    assert!(r.qualifying.is_empty());
    assert_eq!(r.nodes, g.nodes.len());
}

#[test]
fn search_is_independent_of_worker_count() {
    let g = rauzy_graph_build(3, true).unwrap();
    let a = cycle_search(&g, 10, 1, true).unwrap();
    let b = cycle_search(&g, 10, 3, true).unwrap();
    assert_eq!(a.cycles_checked, b.cycles_checked);
    assert_eq!(
        serde_json::to_string(&a.qualifying).unwrap(),
        serde_json::to_string(&b.qualifying).unwrap()
    );
}

/// Every observed Rauzy step from three random length vectors per node is
/// an edge of the graph with the same target and matrix.
#[test]
fn edges_agree_with_rauzy_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3usize, 4] {
        let g = rauzy_graph_build(n, true).unwrap();
        for (v, p) in g.nodes.iter().enumerate() {
            for _ in 0..3 {
                let lengths: Vec<BigRational> = (0..n)
                    .map(|_| BigRational::new(rng.gen_range(1..500).into(), rng.gen_range(1..50).into()))
                    .collect();
                let e = Iet::new(lengths, p.clone(), BigRational::from_integer(0.into())).unwrap();
                match rauzy_step(&e, 0) {
                    Ok((next, step)) => {
                        let edge = g.edges[v][step.type_bit as usize].as_ref().expect("edge present");
                        assert_eq!(&g.nodes[edge.target], next.perm());
                        assert_eq!(edge.matrix, step.matrix);
                    }
                    Err(RauzyError::DegenerateStep(_)) => {}
                    Err(err) => panic!("{err}"),
                }
            }
        }
    }
}
