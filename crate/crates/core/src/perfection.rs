//! Perfectness: every pair of one-factors must union to a Hamilton cycle.
//!
//! [`verify_perfect_full`] checks all `C(2t-1, 2)` pairs and is the ground
//! truth. [`verify_perfect_reduced`] applies only to factorisations built from
//! an even starter. There the rotation `σ` fixes `M` and maps `F_i ∪ F_j` to
//! `F_{i+1} ∪ F_{j+1}`, so every pair is equivalent to `M ∪ F_0` or to
//! `F_0 ∪ F_d` for some `1 <= d <= t-1` (differences `d` and `2t-2-d` are
//! equivalent). That leaves `t` checks.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factorisation::{
    build_from_even_starter, validate_factorisation, Edge, OneFactor, OneFactorisation, Vertex,
};
use crate::starters::EvenStarter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerfectionError {
    #[error("factors have different orders ({0} and {1})")]
    OrderMismatch(u32, u32),
    #[error("factor is not a perfect matching")]
    NotAMatching,
    #[error("factors share edge {0}")]
    SharedEdge(Edge),
    #[error("not a one-factorisation: {0}")]
    InvalidFactorisation(String),
    #[error("factorisation has no even-starter provenance; use the full verifier")]
    NoProvenance,
    #[error("factors do not match the even starter they claim to be built from")]
    ProvenanceMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Reduced,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Reduced => "reduced",
        })
    }
}

/// A factor pair whose union is not a single Hamilton cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    /// Indices into the factor list (`0` is `M`).
    pub factors: [usize; 2],
    /// Cycle lengths of the union, ascending.
    pub cycle_lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectnessReport {
    #[serde(rename = "perfect")]
    pub is_perfect: bool,
    pub mode: Mode,
    pub pairs_checked: usize,
    pub failures: Vec<PairFailure>,
}

impl PerfectnessReport {
    fn from_failures(mode: Mode, pairs_checked: usize, mut failures: Vec<PairFailure>) -> Self {
        failures.sort_by_key(|f| f.factors);
        PerfectnessReport { is_perfect: failures.is_empty(), mode, pairs_checked, failures }
    }
}

/// Cycle lengths of the 2-factor formed by two matchings given as mate arrays.
/// Assumes the matchings share no edge.
fn cycle_lengths_of(f: &[usize], g: &[usize]) -> Vec<usize> {
    let mut visited = vec![false; f.len()];
    let mut lengths = Vec::new();
    for start in 0..f.len() {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut v = start;
        loop {
            let w = f[v];
            visited[v] = true;
            visited[w] = true;
            len += 2;
            v = g[w];
            if v == start {
                break;
            }
        }
        lengths.push(len);
    }
    lengths.sort_unstable();
    lengths
}

fn shared_edge(f: &[usize], g: &[usize], modulus: u32) -> Option<Edge> {
    (0..f.len())
        .find(|&v| f[v] == g[v])
        .map(|v| Edge::new(Vertex::from_index(v, modulus), Vertex::from_index(f[v], modulus)))
}

/// Lengths of the cycles in `f ∪ g`, ascending. Each is even and at least 4,
/// and together they sum to the order.
pub fn union_cycle_lengths(f: &OneFactor, g: &OneFactor) -> Result<Vec<usize>, PerfectionError> {
    if f.order() != g.order() {
        return Err(PerfectionError::OrderMismatch(f.order(), g.order()));
    }
    let fm = f.mates().ok_or(PerfectionError::NotAMatching)?;
    let gm = g.mates().ok_or(PerfectionError::NotAMatching)?;
    if let Some(e) = shared_edge(&fm, &gm, f.modulus()) {
        return Err(PerfectionError::SharedEdge(e));
    }
    Ok(cycle_lengths_of(&fm, &gm))
}

pub fn is_hamilton_union(f: &OneFactor, g: &OneFactor) -> Result<bool, PerfectionError> {
    Ok(union_cycle_lengths(f, g)? == [f.order() as usize])
}

fn mates_of(f: &OneFactorisation) -> Result<Vec<Vec<usize>>, PerfectionError> {
    let report = validate_factorisation(f);
    if !report.is_valid() {
        return Err(PerfectionError::InvalidFactorisation(report.to_string()));
    }
    Ok(f.factors().iter().map(|g| g.mates().expect("validated")).collect())
}

fn check_pair(mates: &[Vec<usize>], i: usize, j: usize, order: usize) -> Option<PairFailure> {
    let lengths = cycle_lengths_of(&mates[i], &mates[j]);
    (lengths != [order]).then_some(PairFailure { factors: [i, j], cycle_lengths: lengths })
}

/// Checks every unordered pair of factors.
pub fn verify_perfect_full(f: &OneFactorisation) -> Result<PerfectnessReport, PerfectionError> {
    let mates = mates_of(f)?;
    let order = f.order() as usize;
    let k = mates.len();
    let failures: Vec<PairFailure> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter_map(|(i, j)| check_pair(&mates, i, j, order))
        .collect();
    Ok(PerfectnessReport::from_failures(Mode::Full, k * (k - 1) / 2, failures))
}

/// Checks `M ∪ F_0` and `F_0 ∪ F_d` for `d = 1..=t-1`. Requires the
/// factorisation to carry the even starter it was built from, and to match it.
pub fn verify_perfect_reduced(f: &OneFactorisation) -> Result<PerfectnessReport, PerfectionError> {
    let starter = f.provenance().ok_or(PerfectionError::NoProvenance)?;
    if build_from_even_starter(starter).factors() != f.factors() {
        return Err(PerfectionError::ProvenanceMismatch);
    }
    let order = f.order() as usize;
    let t = order / 2;
    // The rebuild matched, so each factor is a valid matching.
    let mates: Vec<Vec<usize>> = f.factors().iter().map(|g| g.mates().expect("built factors are matchings")).collect();
    let mut failures = Vec::new();
    failures.extend(check_pair(&mates, 0, 1, order));
    for d in 1..t {
        failures.extend(check_pair(&mates, 1, 1 + d, order));
    }
    Ok(PerfectnessReport::from_failures(Mode::Reduced, t, failures))
}

/// The reduced verdict computed straight from an even starter, without
/// materialising any factor list. `F_d` is read off `F_0` through the rotation:
/// the mate of `v` in `F_d` is `σ^d(mate_0(σ^-d(v)))`.
pub fn even_starter_is_perfect(e: &EvenStarter) -> bool {
    let n = e.modulus() as usize;
    let order = n + 2;
    let t = order / 2;
    let (inf1, inf2) = (n, n + 1);
    let mut f0 = vec![0usize; order];
    for p in e.pairs() {
        f0[p.lo() as usize] = p.hi() as usize;
        f0[p.hi() as usize] = p.lo() as usize;
    }
    let (a, b) = e.missing_pair();
    f0[a as usize] = inf1;
    f0[inf1] = a as usize;
    f0[b as usize] = inf2;
    f0[inf2] = b as usize;

    let fixed = |v: usize| match v {
        v if v == inf1 => inf2,
        v if v == inf2 => inf1,
        v if v < t - 1 => v + t - 1,
        v => v - (t - 1),
    };
    let hamiltonian = |other: &dyn Fn(usize) -> usize| {
        let mut v = 0;
        let mut len = 0;
        loop {
            v = other(f0[v]);
            len += 2;
            if v == 0 {
                return len == order;
            }
        }
    };
    if !hamiltonian(&fixed) {
        return false;
    }
    (1..t).all(|d| {
        let rotated = |v: usize| {
            if v < n {
                let u = f0[(v + n - d) % n];
                if u < n {
                    (u + d) % n
                } else {
                    u
                }
            } else {
                (f0[v] + d) % n
            }
        };
        hamiltonian(&rotated)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorisation::build_from_even_starter;
    use crate::starters::{validate_even_starter, Pair};
    use Vertex::{Finite as V, Inf1, Inf2};

    fn k8() -> OneFactorisation {
        let pairs = [Pair::new(4, 5).unwrap(), Pair::new(1, 3).unwrap()];
        build_from_even_starter(&validate_even_starter(&pairs, 6).unwrap())
    }

    fn factor(order: u32, edges: &[(Vertex, Vertex)]) -> OneFactor {
        OneFactor::new(order, edges.iter().map(|&(u, v)| Edge::new(u, v)).collect())
    }

    #[test]
    fn k8_hand_walks() {
        let f = k8();
        let fs = f.factors();
        // 0-∞1-1-3-∞2-2-4-5-0
        assert_eq!(union_cycle_lengths(&fs[1], &fs[2]).unwrap(), vec![8]);
        // 0-3-1-4-5-2-∞2-∞1-0
        assert!(is_hamilton_union(&fs[0], &fs[1]).unwrap());
    }

    #[test]
    fn two_four_cycles() {
        let f = factor(8, &[(V(0), V(1)), (V(2), V(3)), (V(4), V(5)), (Inf1, Inf2)]);
        let g = factor(8, &[(V(1), V(2)), (V(3), V(0)), (V(5), Inf1), (Inf2, V(4))]);
        assert_eq!(union_cycle_lengths(&f, &g).unwrap(), vec![4, 4]);
        assert!(!is_hamilton_union(&f, &g).unwrap());
    }

    #[test]
    fn shared_edges_are_rejected() {
        let m = OneFactor::fixed_factor(4);
        // Swap the partners of 0 and 1: shares {2,5} and {∞1,∞2} with M.
        let relabelled = factor(8, &[(V(0), V(4)), (V(1), V(3)), (V(2), V(5)), (Inf1, Inf2)]);
        assert!(matches!(union_cycle_lengths(&m, &relabelled), Err(PerfectionError::SharedEdge(_))));
        assert!(matches!(is_hamilton_union(&m, &m), Err(PerfectionError::SharedEdge(_))));
    }

    #[test]
    fn precondition_errors() {
        let m4 = OneFactor::fixed_factor(2);
        let m8 = OneFactor::fixed_factor(4);
        assert_eq!(union_cycle_lengths(&m4, &m8), Err(PerfectionError::OrderMismatch(4, 8)));
        let broken = factor(4, &[(V(0), V(1))]);
        assert_eq!(union_cycle_lengths(&m4, &broken), Err(PerfectionError::NotAMatching));
    }

    #[test]
    fn k8_full_and_reduced() {
        let f = k8();
        let full = verify_perfect_full(&f).unwrap();
        assert!(full.is_perfect);
        assert_eq!(full.pairs_checked, 21);
        let reduced = verify_perfect_reduced(&f).unwrap();
        assert!(reduced.is_perfect);
        assert_eq!(reduced.pairs_checked, 4);
        assert_eq!(reduced.mode, Mode::Reduced);
    }

    #[test]
    fn reduced_requires_provenance() {
        let f = k8().without_provenance();
        assert_eq!(verify_perfect_reduced(&f), Err(PerfectionError::NoProvenance));
        assert!(verify_perfect_full(&f).unwrap().is_perfect);
    }

    #[test]
    fn reduced_rejects_edited_factors() {
        let mut f = k8();
        let swapped = f.factors()[2].clone();
        f.factors_mut()[2] = f.factors()[3].clone();
        f.factors_mut()[3] = swapped;
        assert_eq!(verify_perfect_reduced(&f), Err(PerfectionError::ProvenanceMismatch));
    }

    /// All perfect matchings of the graph with the given edges on `0..order`.
    fn perfect_matchings(edges: &[Edge], order: u32) -> Vec<Vec<Edge>> {
        fn go(edges: &[Edge], covered: &mut Vec<bool>, cur: &mut Vec<Edge>, out: &mut Vec<Vec<Edge>>, n: u32) {
            let Some(v) = covered.iter().position(|c| !c) else {
                out.push(cur.clone());
                return;
            };
            for e in edges {
                let (a, b) = (e.ends().0.index(n), e.ends().1.index(n));
                if (a == v || b == v) && !covered[a] && !covered[b] {
                    covered[a] = true;
                    covered[b] = true;
                    cur.push(*e);
                    go(edges, covered, cur, out, n);
                    cur.pop();
                    covered[a] = false;
                    covered[b] = false;
                }
            }
        }
        let mut out = Vec::new();
        go(edges, &mut vec![false; order as usize], &mut Vec::new(), &mut out, order - 2);
        out
    }

    /// Every way to re-split the edges of three factors into three other
    /// perfect matchings, as (indices, replacement factors).
    fn resplits(f: &OneFactorisation) -> Vec<([usize; 3], [OneFactor; 3])> {
        let fs = f.factors();
        let mut out = Vec::new();
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                for k in j + 1..fs.len() {
                    let union: Vec<Edge> = [i, j, k].iter().flat_map(|&x| fs[x].edges().iter().copied()).collect();
                    let matchings = perfect_matchings(&union, f.order());
                    for a in 0..matchings.len() {
                        for b in a + 1..matchings.len() {
                            for c in b + 1..matchings.len() {
                                let triple = [a, b, c].map(|x| OneFactor::new(f.order(), matchings[x].clone()));
                                let mut all: Vec<Edge> =
                                    triple.iter().flat_map(|g| g.edges().iter().copied()).collect();
                                all.sort_unstable();
                                all.dedup();
                                if all.len() == union.len() && ![i, j, k].iter().all(|&x| triple.contains(&fs[x])) {
                                    out.push(([i, j, k], triple));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn mutated_k8_lists_offenders() {
        let original = k8().without_provenance();
        let candidates = resplits(&original);
        assert!(!candidates.is_empty());
        let mut non_perfect = 0;
        for (idx, triple) in candidates {
            let mut f = original.clone();
            for (x, g) in idx.iter().zip(triple) {
                f.factors_mut()[*x] = g;
            }
            assert!(crate::factorisation::validate_factorisation(&f).is_valid());
            let report = verify_perfect_full(&f).unwrap();
            assert_eq!(report.is_perfect, report.failures.is_empty());
            let mut sorted = report.failures.clone();
            sorted.sort_by_key(|f| f.factors);
            assert_eq!(sorted, report.failures);
            for fail in &report.failures {
                let [a, b] = fail.factors;
                assert!(idx.contains(&a) || idx.contains(&b), "untouched pair {a},{b} failed");
                assert_eq!(union_cycle_lengths(&f.factors()[a], &f.factors()[b]).unwrap(), fail.cycle_lengths);
                assert_ne!(fail.cycle_lengths, vec![8]);
            }
            non_perfect += !report.is_perfect as usize;
        }
        assert!(non_perfect > 0);
    }

    #[test]
    fn non_perfect_starter_agrees_across_verifiers() {
        // {4,5},{0,2}: classes 1 and 2, with 1 and 3 uncovered.
        let e = validate_even_starter(&[Pair::new(4, 5).unwrap(), Pair::new(0, 2).unwrap()], 6).unwrap();
        let f = build_from_even_starter(&e);
        let full = verify_perfect_full(&f).unwrap();
        let reduced = verify_perfect_reduced(&f).unwrap();
        assert_eq!(full.is_perfect, reduced.is_perfect);
    }

    #[test]
    fn fused_check_agrees_with_verifiers() {
        use crate::merge::{merge_starters, pair_compatible};
        use crate::starters::{random_starter, HighLowAssignment};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mut yes, mut no) = (0, 0);
        while yes + no < 400 {
            let m = rng.gen_range(2..=5);
            let s1 = random_starter(m, rng.gen()).unwrap();
            let s2 = random_starter(m, rng.gen()).unwrap();
            if !pair_compatible(&s1, &s2) {
                continue;
            }
            let a = HighLowAssignment::from_mask(m, rng.gen_range(0..HighLowAssignment::count(m))).unwrap();
            let e = merge_starters(&s1, &s2, &a).unwrap();
            let f = build_from_even_starter(&e);
            let full = verify_perfect_full(&f).unwrap().is_perfect;
            assert_eq!(even_starter_is_perfect(&e), full);
            assert_eq!(verify_perfect_reduced(&f).unwrap().is_perfect, full);
            if full {
                yes += 1;
            } else {
                no += 1;
            }
        }
        assert!(yes > 0 && no > 0);
    }

    #[test]
    fn invalid_factorisation_is_refused() {
        let mut f = k8();
        f.factors_mut().pop();
        assert!(matches!(verify_perfect_full(&f), Err(PerfectionError::InvalidFactorisation(_))));
    }

    #[test]
    fn report_json() {
        let report = verify_perfect_full(&k8()).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            r#"{"perfect":true,"mode":"full","pairs_checked":21,"failures":[]}"#
        );
    }
}
