//! Bounded search for self-similar IETs with flips through Rauzy graphs.
//!
//! Nodes are irreducible signed permutations; the edge of type `t` out of a
//! node is one Rauzy step on rational lengths realizing `t`. Closed walks are
//! enumerated once per cyclic rotation class and screened by their product
//! matrix.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iet::{Iet, IetError, SignedPermutation};
use crate::numfield::AlgebraicNumber;
use crate::poly::SturmSequence;
use crate::rauzy::{rauzy_cycle_detect, rauzy_step, RauzyError};
use crate::scalar::Scalar;
use crate::spectral::{char_poly, conjugate_screen, perron_data, IntMatrix, ScreenReason, SpectralError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("alphabet size {0} outside 2..=7")]
    BadSize(usize),
    #[error("walk length {0} above 20")]
    TooLong(usize),
    #[error("product matrix is not quasi-positive")]
    NotQuasiPositive,
    #[error("could not build a thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// Irreducible signed permutations of `1..=n`, sorted by entries; with
/// `require_flips` only those with a negative entry.
pub fn signed_perms_enumerate(n: usize, require_flips: bool) -> Vec<SignedPermutation> {
    let mut out = Vec::new();
    let mut perm: Vec<i32> = (1..=n as i32).collect();
    loop {
        for mask in 0u32..(1 << n) {
            if require_flips && mask == 0 {
                continue;
            }
            let entries = perm
                .iter()
                .enumerate()
                .map(|(i, &v)| if mask >> i & 1 == 1 { -v } else { v })
                .collect();
            let sp = SignedPermutation::new(entries).expect("valid by construction");
            if sp.is_irreducible() {
                out.push(sp);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out.sort_by(|a, b| a.entries().cmp(b.entries()));
    out
}

fn next_permutation(p: &mut [i32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub target: usize,
    /// `old_lengths = matrix * new_lengths`.
    pub matrix: IntMatrix,
}

#[derive(Clone, Debug)]
pub struct RauzyGraph {
    pub n: usize,
    pub require_flips: bool,
    pub nodes: Vec<SignedPermutation>,
    /// `edges[v][t]` for type `t`.
    pub edges: Vec<[Option<Edge>; 2]>,
    /// Node and type of each edge that no lengths realize.
    pub degenerate: Vec<(usize, u8)>,
}

impl RauzyGraph {
    pub fn index_of(&self, p: &SignedPermutation) -> Option<usize> {
        self.nodes.iter().position(|q| q == p)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().flatten().count()
    }
}

/// Lengths `1, 1 + 1/7, 1 + 2/7, ...` with the piece in the last slot
/// moved by `1/13` below (type 0) or above (type 1) the last piece if needed.
pub fn generic_lengths(perm: &SignedPermutation, type_bit: u8) -> Option<Vec<BigRational>> {
    let n = perm.len();
    let last = n - 1;
    let s = perm.piece_at_slot(last);
    if s == last {
        return None;
    }
    let mut l: Vec<BigRational> = (0..n)
        .map(|i| BigRational::new(BigInt::from(7 + i as i64), BigInt::from(7)))
        .collect();
    let shift = BigRational::new(BigInt::from(1), BigInt::from(13));
    match type_bit {
        0 if l[last] <= l[s] => l[s] = &l[last] - &shift,
        1 if l[last] >= l[s] => l[s] = &l[last] + &shift,
        _ => {}
    }
    Some(l)
}

/// Rauzy graph on the enumerated permutations, closed under edges.
pub fn rauzy_graph_build(n: usize, require_flips: bool) -> Result<RauzyGraph, SearchError> {
    if !(2..=7).contains(&n) {
        return Err(SearchError::BadSize(n));
    }
    Ok(rauzy_graph_from(
        n,
        require_flips,
        signed_perms_enumerate(n, require_flips),
    ))
}

/// Rauzy graph closed under edges from the given nodes.
pub fn rauzy_graph_from(n: usize, require_flips: bool, start: Vec<SignedPermutation>) -> RauzyGraph {
    let mut index: HashMap<Vec<i32>, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for p in start {
        index.entry(p.entries().to_vec()).or_insert_with(|| {
            nodes.push(p);
            nodes.len() - 1
        });
    }
    let mut edges: Vec<[Option<Edge>; 2]> = Vec::new();
    let mut degenerate = Vec::new();
    let mut queue: VecDeque<usize> = (0..nodes.len()).collect();
    while let Some(v) = queue.pop_front() {
        if edges.len() <= v {
            edges.resize(v + 1, [None, None]);
        }
        for t in 0..2u8 {
            let step = generic_lengths(&nodes[v], t).and_then(|l| {
                let e = Iet::new(l, nodes[v].clone(), BigRational::from_integer(0.into())).ok()?;
                rauzy_step(&e, 0).ok()
            });
            let Some((_, st)) = step else {
                degenerate.push((v, t));
                continue;
            };
            let target = *index.entry(st.after.entries().to_vec()).or_insert_with(|| {
                nodes.push(st.after.clone());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            edges[v][t as usize] = Some(Edge {
                target,
                matrix: st.matrix,
            });
        }
    }
    edges.resize(nodes.len(), [None, None]);
    RauzyGraph {
        n,
        require_flips,
        nodes,
        edges,
        degenerate,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleCandidate {
    pub nodes: Vec<SignedPermutation>,
    pub types: Vec<u8>,
    pub product: IntMatrix,
    pub verdict: ScreenReason,
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub validated: Option<bool>,
    pub note: Option<String>,
}

impl CycleCandidate {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// The same closed walk started at its `k`-th node.
    pub fn rotate(&self, k: usize, graph: &RauzyGraph) -> Option<CycleCandidate> {
        let len = self.len();
        let mut nodes = self.nodes.clone();
        let mut types = self.types.clone();
        nodes.rotate_left(k % len);
        types.rotate_left(k % len);
        let product = walk_product(graph, &nodes, &types)?;
        Some(CycleCandidate {
            nodes,
            types,
            product,
            ..self.clone()
        })
    }
}

fn walk_product(graph: &RauzyGraph, nodes: &[SignedPermutation], types: &[u8]) -> Option<IntMatrix> {
    let mut acc = IntMatrix::identity(graph.n);
    for (p, &t) in nodes.iter().zip(types) {
        let v = graph.index_of(p)?;
        let e = graph.edges[v][t as usize].as_ref()?;
        acc = acc.checked_mul(&e.matrix)?;
    }
    Some(acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub n: usize,
    pub require_flips: bool,
    pub max_len: usize,
    pub nodes: usize,
    pub edges: usize,
    pub degenerate_edges: usize,
    /// Primitive closed walks up to rotation.
    pub cycles_checked: u64,
    pub quasi_positive: u64,
    pub overflowed: u64,
    pub screened: u64,
    pub qualifying: Vec<CycleCandidate>,
    pub runtime_seconds: f64,
}

#[derive(Default)]
struct Tally {
    checked: u64,
    quasi_positive: u64,
    overflowed: u64,
    screened: u64,
    found: Vec<(Vec<usize>, Vec<u8>, IntMatrix, crate::spectral::ScreenVerdict)>,
}

/// Closed walks of length `1..=max_len` whose sequence of (node, type) is
/// its own least rotation and not a power; products passing the screen are
/// returned, validated when `validate` is set. Work is split over start
/// nodes on `jobs` threads; results are merged in start order.
pub fn cycle_search(
    graph: &RauzyGraph,
    max_len: usize,
    jobs: usize,
    validate: bool,
) -> Result<SearchReport, SearchError> {
    if max_len > 20 {
        return Err(SearchError::TooLong(max_len));
    }
    let t0 = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SearchError::Pool(e.to_string()))?;
    let starts: Vec<usize> = if max_len == 0 {
        Vec::new()
    } else {
        (0..graph.nodes.len()).collect()
    };
    let tallies: Vec<Tally> = pool.install(|| starts.par_iter().map(|&s| search_from(graph, s, max_len)).collect());

    let mut report = SearchReport {
        n: graph.n,
        require_flips: graph.require_flips,
        max_len,
        nodes: graph.nodes.len(),
        edges: graph.edge_count(),
        degenerate_edges: graph.degenerate.len(),
        cycles_checked: 0,
        quasi_positive: 0,
        overflowed: 0,
        screened: 0,
        qualifying: Vec::new(),
        runtime_seconds: 0.0,
    };
    for t in tallies {
        report.cycles_checked += t.checked;
        report.quasi_positive += t.quasi_positive;
        report.overflowed += t.overflowed;
        report.screened += t.screened;
        for (walk, types, product, verdict) in t.found {
            let mut c = CycleCandidate {
                nodes: walk.iter().map(|&v| graph.nodes[v].clone()).collect(),
                types,
                product,
                verdict: verdict.reason,
                theta1: verdict.theta1.as_f64(),
                theta2: verdict.theta2.as_ref().map(Scalar::as_f64),
                validated: None,
                note: None,
            };
            if validate {
                c = cycle_validate(&c)?;
            }
            report.qualifying.push(c);
        }
    }
    report.runtime_seconds = t0.elapsed().as_secs_f64();
    Ok(report)
}

fn search_from(graph: &RauzyGraph, s: usize, max_len: usize) -> Tally {
    // distance to s inside the nodes >= s, by reverse BFS
    let n = graph.nodes.len();
    let mut rev: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in s..n {
        for e in graph.edges[v].iter().flatten() {
            if e.target >= s {
                rev.entry(e.target).or_default().push(v);
            }
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        if dist[v] >= max_len {
            continue;
        }
        for &u in rev.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
        }
    }

    let mut tally = Tally::default();
    let mut cache: HashMap<Vec<i64>, Option<crate::spectral::ScreenVerdict>> = HashMap::new();
    let mut walk = vec![s];
    let mut types: Vec<u8> = Vec::new();
    dfs(graph, &dist, max_len, &mut walk, &mut types, &mut tally, &mut cache);
    tally
}

fn dfs(
    graph: &RauzyGraph,
    dist: &[usize],
    max_len: usize,
    walk: &mut Vec<usize>,
    types: &mut Vec<u8>,
    tally: &mut Tally,
    cache: &mut HashMap<Vec<i64>, Option<crate::spectral::ScreenVerdict>>,
) {
    let s = walk[0];
    let v = *walk.last().expect("nonempty");
    for t in 0..2u8 {
        let Some(e) = &graph.edges[v][t as usize] else { continue };
        let u = e.target;
        if u < s || dist[u] == usize::MAX || types.len() + 1 + dist[u] > max_len {
            continue;
        }
        types.push(t);
        if u == s {
            let nodes = &walk[..];
            if is_least_primitive_rotation(nodes, types) {
                examine(graph, nodes, types, tally, cache);
            }
        }
        if types.len() < max_len {
            walk.push(u);
            dfs(graph, dist, max_len, walk, types, tally, cache);
            walk.pop();
        }
        types.pop();
    }
}

/// Rotation 0 is strictly below every other rotation (so the walk is also
/// primitive).
fn is_least_primitive_rotation(nodes: &[usize], types: &[u8]) -> bool {
    let len = types.len();
    let key = |i: usize| (nodes[i % len], types[i % len]);
    (1..len).all(|r| {
        for i in 0..len {
            match key(r + i).cmp(&key(i)) {
                std::cmp::Ordering::Greater => return true,
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        false
    })
}

fn examine(
    graph: &RauzyGraph,
    nodes: &[usize],
    types: &[u8],
    tally: &mut Tally,
    cache: &mut HashMap<Vec<i64>, Option<crate::spectral::ScreenVerdict>>,
) {
    tally.checked += 1;
    let mut acc = IntMatrix::identity(graph.n);
    for (&v, &t) in nodes.iter().zip(types) {
        let e = graph.edges[v][t as usize].as_ref().expect("walk follows edges");
        match acc.checked_mul(&e.matrix) {
            Some(m) => acc = m,
            None => {
                tally.overflowed += 1;
                return;
            }
        }
    }
    if !acc.is_quasi_positive() {
        return;
    }
    tally.quasi_positive += 1;
    let cp = char_poly(&acc);
    let key: Vec<i64> = cp
        .coeffs()
        .iter()
        .map(|c| i64::try_from(c).unwrap_or(i64::MAX))
        .collect();
    let verdict = cache
        .entry(key)
        .or_insert_with(|| {
            // a qualifying matrix has two distinct real roots above 1
            let st = SturmSequence::new(&cp);
            let one = BigRational::from_integer(1.into());
            let big = crate::poly::root_bound(&cp);
            if st.count(&one, &big) < 2 {
                return None;
            }
            tally.screened += 1;
            conjugate_screen(&acc).ok()
        })
        .clone();
    if let Some(v) = verdict.filter(|v| v.qualifies) {
        tally.found.push((nodes.to_vec(), types.to_vec(), acc, v));
    }
}

/// Re-run the cycle with the exact Perron lengths of its product and compare
/// nodes, types and product.
pub fn cycle_validate(c: &CycleCandidate) -> Result<CycleCandidate, SearchError> {
    if !c.product.is_quasi_positive() {
        return Err(SearchError::NotQuasiPositive);
    }
    let mut out = c.clone();
    let data = perron_data(&c.product)?;
    let e = Iet::new(data.right_vector, c.nodes[0].clone(), AlgebraicNumber::from_int(0))?;
    let mismatch = |why: String| (Some(false), Some(why));
    let (ok, note) = match rauzy_cycle_detect(&e, c.len()) {
        Ok(Some(cyc)) => {
            let perms: Vec<SignedPermutation> = cyc.steps.iter().map(|s| s.before.clone()).collect();
            if cyc.len() != c.len() {
                mismatch(format!("cycle closes after {} steps", cyc.len()))
            } else if perms != c.nodes {
                mismatch("permutations differ".into())
            } else if cyc.types() != c.types {
                mismatch("types differ".into())
            } else if cyc.product != c.product {
                mismatch("products differ".into())
            } else {
                (Some(true), Some(format!("scale {}", cyc.scale)))
            }
        }
        Ok(None) => mismatch("no return within the cycle length".into()),
        Err(RauzyError::DegenerateStep(k)) => mismatch(format!("degenerate step {k}")),
        Err(e) => mismatch(e.to_string()),
    };
    out.validated = ok;
    out.note = note;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_letter_lists() {
        let flipped: Vec<String> = signed_perms_enumerate(2, true).iter().map(|p| p.to_string()).collect();
        assert_eq!(flipped, vec!["(-2,-1)", "(-2,1)", "(2,-1)"]);
        let all = signed_perms_enumerate(2, false);
        assert!(all.iter().any(|p| p.entries() == [2, 1]));
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn counts() {
        assert_eq!(signed_perms_enumerate(3, true).len(), 3 * 7);
        assert_eq!(signed_perms_enumerate(4, true).len(), 13 * 15);
    }

    #[test]
    fn least_rotation() {
        assert!(is_least_primitive_rotation(&[0, 1, 2], &[0, 0, 1]));
        assert!(!is_least_primitive_rotation(&[1, 0, 2], &[0, 0, 1]));
        assert!(!is_least_primitive_rotation(&[0, 1, 0, 1], &[0, 1, 0, 1]));
        assert!(is_least_primitive_rotation(&[0], &[1]));
    }

    #[test]
    fn zero_length_search_is_empty() {
        let g = rauzy_graph_build(3, true).unwrap();
        let r = cycle_search(&g, 0, 1, false).unwrap();
        assert_eq!(r.cycles_checked, 0);
        assert!(r.qualifying.is_empty());
    }

    #[test]
    fn empty_graph() {
        let g = rauzy_graph_from(3, true, Vec::new());
        assert!(g.nodes.is_empty());
        assert_eq!(g.edge_count(), 0);
    }
}
