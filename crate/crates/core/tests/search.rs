use std::fs;

use p1f::perfection::is_hamilton_union;
use p1f::search::{run_search, Checkpoint, SearchConfig, SearchError, StopReason};
use p1f::starters::{random_starter, HighLowAssignment};
use p1f::{rotate, PerfectnessReport};
use proptest::prelude::*;

fn stats_json(cfg: &SearchConfig) -> String {
    serde_json::to_string(&run_search(cfg).unwrap().stats).unwrap()
}

#[test]
fn exhaustive_resume_matches_straight_run() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    let base = SearchConfig { stop_on_hit: false, checkpoint: Some(cp.clone()), ..SearchConfig::exhaustive(4) };
    let first = run_search(&SearchConfig { budget: Some(200), ..base.clone() }).unwrap();
    assert_eq!(first.stop, StopReason::Budget);
    assert_eq!(Checkpoint::load(&cp).unwrap().next_attempt, 200);

    let resumed = run_search(&SearchConfig { workers: 3, ..base.clone() }).unwrap();
    assert_eq!(resumed.stop, StopReason::Exhausted);
    let straight = SearchConfig { stop_on_hit: false, ..SearchConfig::exhaustive(4) };
    assert_eq!(serde_json::to_string(&resumed.stats).unwrap(), stats_json(&straight));
    assert_eq!(resumed.stats.pairs_examined, 21 * 21);
}

#[test]
fn truncated_checkpoint_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    let cfg = SearchConfig { budget: Some(20), checkpoint: Some(cp.clone()), ..SearchConfig::random(4, 1) };
    run_search(&cfg).unwrap();
    let text = fs::read_to_string(&cp).unwrap();
    fs::write(&cp, &text[..text.len() / 2]).unwrap();
    assert!(matches!(run_search(&cfg), Err(SearchError::CheckpointCorrupt(_))));
}

#[test]
fn checkpoint_from_other_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.json");
    run_search(&SearchConfig { budget: Some(10), checkpoint: Some(cp.clone()), ..SearchConfig::random(4, 1) }).unwrap();
    let other = SearchConfig { budget: Some(10), checkpoint: Some(cp), ..SearchConfig::random(4, 2) };
    assert!(matches!(run_search(&other), Err(SearchError::ConfigMismatch { .. })));
}

#[test]
fn accounting_is_monotone_and_consistent() {
    let mut previous = 0;
    for budget in [5, 20, 60] {
        let stats =
            run_search(&SearchConfig { budget: Some(budget), stop_on_hit: false, ..SearchConfig::random(5, 11) })
                .unwrap()
                .stats;
        assert_eq!(stats.pairs_examined, budget);
        assert!(stats.assignments_tried >= previous);
        previous = stats.assignments_tried;
        let compatible = stats.pairs_examined - stats.incompatible_pairs;
        assert_eq!(stats.assignments_tried, compatible * HighLowAssignment::count(5));
        assert_eq!(
            stats.assignments_tried,
            stats.invalid_even_starters + stats.not_perfect + stats.perfect_hits.len() as u64
        );
    }
}

#[test]
fn m14_random_runs_are_reproducible_across_worker_counts() {
    let cfg = SearchConfig { budget: Some(100), ..SearchConfig::random(14, 42) };
    let one = stats_json(&cfg);
    assert_eq!(one, stats_json(&cfg));
    assert_eq!(one, stats_json(&SearchConfig { workers: 3, ..cfg }));
}

#[test]
fn m4_random_search_finds_verified_hits() {
    let report = run_search(&SearchConfig { budget: Some(2000), ..SearchConfig::random(4, 5) }).unwrap();
    assert_eq!(report.stop, StopReason::Hit);
    assert!(report.stats.perfect_hits.iter().all(|h| h.reverify_full()));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_starters_are_valid(m in 2u32..=20, seed: u64) {
        let s = random_starter(m, seed).unwrap();
        prop_assert_eq!(s.modulus(), 2 * m - 1);
        prop_assert!(p1f::validate_starter(s.pairs(), s.modulus()).is_ok());
    }

    #[test]
    fn hamilton_union_is_symmetric_and_rotation_invariant(m in 2u32..=6, seed: u64, i in 0usize..64, j in 0usize..64, shift in 0u64..64) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let (s1, s2) = loop {
            let s1 = p1f::starters::random_starter_with(m, &mut rng).unwrap();
            let s2 = p1f::starters::random_starter_with(m, &mut rng).unwrap();
            if p1f::pair_compatible(&s1, &s2) { break (s1, s2); }
        };
        let a = HighLowAssignment::from_mask(m, seed % HighLowAssignment::count(m)).unwrap();
        let f = p1f::build_from_even_starter(&p1f::merge_starters(&s1, &s2, &a).unwrap());
        let n = f.factors().len();
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j && i > 0 && j > 0);
        let (fi, fj) = (&f.factors()[i], &f.factors()[j]);
        let forward = is_hamilton_union(fi, fj).unwrap();
        prop_assert_eq!(forward, is_hamilton_union(fj, fi).unwrap());
        prop_assert_eq!(forward, is_hamilton_union(&rotate(fi, shift), &rotate(fj, shift)).unwrap());
        let report: PerfectnessReport = p1f::verify_perfect_full(&f).unwrap();
        prop_assert_eq!(report.failures.iter().any(|p| p.factors == [i.min(j), i.max(j)]), !forward);
    }
}
