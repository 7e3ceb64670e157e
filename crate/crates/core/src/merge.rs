//! Merging two starters of `Z_{2m-1}` under a complementary high/low
//! assignment into an even starter of `Z_{4m-2}`.
//!
//! The walk starts at the lift `missing(S1) + (2m-1)` and, at each step,
//! consumes the one unconsumed pair containing the current residue. Each pair
//! `{x, y}` has two lifts of `y`; exactly one of them sits at distance `d` from
//! the current lifted element `a`. A Low pair emits `{a, that lift}`, a High
//! pair emits `{a, the other lift}`, and the lift not used becomes the next `a`.
//!
//! Which pair is consumed at each step depends only on the starters, never on
//! the designations, so a pair either completes for every assignment or dead
//! ends at the same step for every assignment. [`pair_compatible`] decides
//! that once by walking the union of the two starters as a graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::starters::{
    pair_difference, validate_even_starter_listing, Designation, DifferenceClass, EvenStarter, HighLowAssignment, Pair,
    Starter, StarterError, Which,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("starters have different moduli ({0} and {1})")]
    ModulusMismatch(u32, u32),
    #[error("assignment is for m = {assignment}, starters are for m = {starters}")]
    AssignmentMismatch { assignment: u32, starters: u32 },
    #[error("merge dead end at step {step}: no unconsumed pair contains the current element")]
    DeadEnd { step: usize },
    #[error("merged pairs are not an even starter: {0}")]
    InvalidOutput(StarterError),
    #[error("internal contract violated at step {step}: {what}")]
    Contract { step: usize, what: &'static str },
}

/// Snapshot of one merge iteration, taken after the output pair is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeState {
    /// 1-based iteration index.
    pub step: usize,
    /// Current lifted element of `Z_{4m-2}`.
    pub a: u32,
    /// `a mod (2m-1)`.
    pub x: u32,
    /// Partner of `x` in the consumed pair.
    pub y: u32,
    pub d: DifferenceClass,
    /// Starter the consumed pair came from.
    pub source: Which,
    pub designation: Designation,
    /// The two lifts `{y, y + 2m-1}`.
    pub lifts: [u32; 2],
    /// The lift at distance `d` from `a`.
    pub y_hat: u32,
    /// Partner of `a` in the emitted pair.
    pub b: u32,
    /// Pairs consumed before this step.
    pub consumed_before: usize,
}

impl MergeState {
    pub fn consumed_pair(&self) -> Pair {
        Pair::new(self.x, self.y).expect("starter pairs are never degenerate")
    }
}

fn check_inputs(s1: &Starter, s2: &Starter, assignment: &HighLowAssignment) -> Result<(), MergeError> {
    if s1.modulus() != s2.modulus() {
        return Err(MergeError::ModulusMismatch(s1.modulus(), s2.modulus()));
    }
    if assignment.m() != s1.m() {
        return Err(MergeError::AssignmentMismatch { assignment: assignment.m(), starters: s1.m() });
    }
    Ok(())
}

/// Runs the merge and returns the state of every iteration, stopping with
/// [`MergeError::DeadEnd`] if the walk runs out of pairs early.
pub fn merge_trace(s1: &Starter, s2: &Starter, assignment: &HighLowAssignment) -> Result<Vec<MergeState>, MergeError> {
    let mut states = Vec::new();
    run(s1, s2, assignment, |state| states.push(state.clone()))?;
    Ok(states)
}

fn run(
    s1: &Starter,
    s2: &Starter,
    assignment: &HighLowAssignment,
    mut observe: impl FnMut(&MergeState),
) -> Result<(), MergeError> {
    check_inputs(s1, s2, assignment)?;
    let n = s1.modulus();
    let lifted = 2 * n;
    let m = s1.m() as usize;
    let partners = [s1.partners(), s2.partners()];
    // consumed[k][d] marks starter k's pair of difference class d.
    let mut consumed = [vec![false; m], vec![false; m]];

    let mut a = s1.missing() + n;
    for step in 1..=2 * m - 2 {
        let x = a % n;
        let mut found: Option<(Which, u32, u32)> = None;
        for (k, which) in [Which::S1, Which::S2].into_iter().enumerate() {
            if let Some(y) = partners[k][x as usize] {
                let d = pair_difference(Pair::new(x, y).expect("distinct"), n).get();
                if !consumed[k][d as usize] {
                    if found.is_some() {
                        return Err(MergeError::Contract { step, what: "two unconsumed pairs contain x" });
                    }
                    found = Some((which, y, d));
                }
            }
        }
        let (source, y, d) = found.ok_or(MergeError::DeadEnd { step })?;

        let lifts = [y, y + n];
        let near = [(a + lifted - d) % lifted, (a + d) % lifted];
        let mut hits = lifts.iter().copied().filter(|l| near.contains(l));
        let y_hat = hits.next().ok_or(MergeError::Contract { step, what: "no lift of y at distance d from a" })?;
        if hits.next().is_some() {
            return Err(MergeError::Contract { step, what: "both lifts of y at distance d from a" });
        }
        let other = if y_hat == lifts[0] { lifts[1] } else { lifts[0] };

        let designation = assignment
            .designation(source, d)
            .map_err(|_| MergeError::Contract { step, what: "difference outside the assignment" })?;
        let b = match designation {
            Designation::Low => y_hat,
            Designation::High => other,
        };
        observe(&MergeState {
            step,
            a,
            x,
            y,
            d: DifferenceClass(d),
            source,
            designation,
            lifts,
            y_hat,
            b,
            consumed_before: step - 1,
        });
        consumed[source as usize][d as usize] = true;
        a = if b == lifts[0] { lifts[1] } else { lifts[0] };
    }
    Ok(())
}

/// Merges `s1` and `s2` into an even starter of `Z_{4m-2}`.
///
/// The result keeps the emitted pairs, in order and orientation `{a, b}`, as
/// its listing. The output is always validated; a completed walk whose pairs
/// do not form an even starter is reported as [`MergeError::InvalidOutput`].
pub fn merge_starters(s1: &Starter, s2: &Starter, assignment: &HighLowAssignment) -> Result<EvenStarter, MergeError> {
    let mut emitted = Vec::with_capacity(s1.pairs().len() * 2);
    run(s1, s2, assignment, |state| emitted.push([state.a, state.b]))?;
    validate_even_starter_listing(&emitted, 2 * s1.modulus()).map_err(MergeError::InvalidOutput)
}

/// Whether the union of the two starters, read as edges on `Z_{2m-1}`, is a
/// single path. This is exactly the condition for [`merge_starters`] to run
/// all `2m-2` iterations, for any assignment.
pub fn pair_compatible(s1: &Starter, s2: &Starter) -> bool {
    if s1.modulus() != s2.modulus() {
        return false;
    }
    // Start at the missing element of S1: it touches only an S2 edge, and the
    // walk must alternate S2, S1, S2, ... along a path of 2m-2 edges.
    let partners = [s2.partners(), s1.partners()];
    let edges = s1.pairs().len() * 2;
    let mut x = s1.missing();
    for i in 0..edges {
        match partners[i % 2][x as usize] {
            Some(y) => x = y,
            None => return false,
        }
    }
    x == s2.missing()
}
