//! Starters over `Z_{2m-1}`, even starters over `Z_{2t-2}`, and the high/low
//! designations that steer the merge.
//!
//! A starter is a set of `m-1` disjoint pairs whose difference classes are
//! exactly `{1, ..., m-1}`; exactly one element is left uncovered and it may be
//! any element. An even starter is a set of `t-2` disjoint pairs whose classes
//! are `{1, ..., t-2}` (class `t-1` never occurs), leaving two elements
//! uncovered.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nodes visited by [`random_starter`] before it gives up.
pub const RANDOM_STARTER_NODE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StarterError {
    #[error("invalid modulus {modulus}: {reason}")]
    InvalidModulus { modulus: u32, reason: &'static str },
    #[error("pair {{{0}, {0}}} repeats an element")]
    DegeneratePair(u32),
    #[error("expected {expected} pairs, found {found}")]
    WrongPairCount { expected: usize, found: usize },
    #[error("element {element} is out of range for modulus {modulus}")]
    ElementOutOfRange { element: u32, modulus: u32 },
    #[error("element {element} appears in more than one pair")]
    OverlappingPairs { element: u32 },
    #[error("difference class {difference} appears more than once")]
    DuplicateDifference { difference: u32 },
    #[error("pair {pair} has the forbidden difference class {difference}")]
    DifferenceTMinus1Present { pair: Pair, difference: u32 },
    #[error("difference {d} is outside 1..={max}")]
    DifferenceOutOfRange { d: u32, max: u32 },
    #[error("order parameter m = {0} is not supported")]
    InvalidOrder(u32),
    #[error("enumeration cap of {cap} starters reached")]
    BudgetExceeded { cap: u64 },
    #[error("no starter found for m = {m} within {nodes} search nodes")]
    GenerationFailed { m: u32, nodes: u64 },
    #[error("even starter listing disagrees with its canonical pairs")]
    ListingMismatch,
}

/// An unordered pair of distinct residues, stored smaller element first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 2]", into = "[u32; 2]")]
pub struct Pair {
    lo: u32,
    hi: u32,
}

impl Pair {
    pub fn new(u: u32, v: u32) -> Result<Self, StarterError> {
        match u.cmp(&v) {
            std::cmp::Ordering::Less => Ok(Pair { lo: u, hi: v }),
            std::cmp::Ordering::Greater => Ok(Pair { lo: v, hi: u }),
            std::cmp::Ordering::Equal => Err(StarterError::DegeneratePair(u)),
        }
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn hi(&self) -> u32 {
        self.hi
    }

    pub fn contains(&self, x: u32) -> bool {
        self.lo == x || self.hi == x
    }

    /// The element paired with `x`, if `x` is in this pair.
    pub fn partner(&self, x: u32) -> Option<u32> {
        if x == self.lo {
            Some(self.hi)
        } else if x == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }

    pub fn difference(&self, modulus: u32) -> DifferenceClass {
        pair_difference(*self, modulus)
    }
}

impl TryFrom<[u32; 2]> for Pair {
    type Error = StarterError;

    fn try_from([u, v]: [u32; 2]) -> Result<Self, Self::Error> {
        Pair::new(u, v)
    }
}

impl From<Pair> for [u32; 2] {
    fn from(p: Pair) -> Self {
        [p.lo, p.hi]
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo, self.hi)
    }
}

/// `min((u - v) mod n, (v - u) mod n)` for a pair `{u, v}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifferenceClass(pub u32);

impl DifferenceClass {
    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for DifferenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Difference class of `p` under modulus `n`. Both elements must already be
/// reduced below `n`.
pub fn pair_difference(p: Pair, n: u32) -> DifferenceClass {
    let forward = (p.hi - p.lo) % n;
    let backward = n - forward;
    DifferenceClass(forward.min(backward))
}

/// Shared structural checks for both starter flavours. Returns the difference
/// class of each pair, in input order.
fn check_pairs(pairs: &[Pair], n: u32, expected: usize) -> Result<Vec<u32>, StarterError> {
    if pairs.len() != expected {
        return Err(StarterError::WrongPairCount { expected, found: pairs.len() });
    }
    let mut seen = vec![false; n as usize];
    for p in pairs {
        for x in [p.lo, p.hi] {
            if x >= n {
                return Err(StarterError::ElementOutOfRange { element: x, modulus: n });
            }
            if std::mem::replace(&mut seen[x as usize], true) {
                return Err(StarterError::OverlappingPairs { element: x });
            }
        }
    }
    Ok(pairs.iter().map(|p| pair_difference(*p, n).0).collect())
}

fn check_distinct(diffs: &[u32], n: u32) -> Result<(), StarterError> {
    let mut seen = vec![false; n as usize / 2 + 1];
    for &d in diffs {
        if std::mem::replace(&mut seen[d as usize], true) {
            return Err(StarterError::DuplicateDifference { difference: d });
        }
    }
    Ok(())
}

fn uncovered(pairs: &[Pair], n: u32) -> Vec<u32> {
    let mut covered = vec![false; n as usize];
    for p in pairs {
        covered[p.lo as usize] = true;
        covered[p.hi as usize] = true;
    }
    (0..n).filter(|&x| !covered[x as usize]).collect()
}

/// A starter in `Z_{2m-1}`. Pairs are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StarterRepr", into = "StarterRepr")]
pub struct Starter {
    modulus: u32,
    pairs: Vec<Pair>,
    missing: u32,
}

#[derive(Serialize, Deserialize)]
struct StarterRepr {
    modulus: u32,
    pairs: Vec<Pair>,
}

impl TryFrom<StarterRepr> for Starter {
    type Error = StarterError;

    fn try_from(r: StarterRepr) -> Result<Self, Self::Error> {
        validate_starter(&r.pairs, r.modulus)
    }
}

impl From<Starter> for StarterRepr {
    fn from(s: Starter) -> Self {
        StarterRepr { modulus: s.modulus, pairs: s.pairs }
    }
}

impl Starter {
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// The `m` with `modulus = 2m - 1`.
    pub fn m(&self) -> u32 {
        self.modulus.div_ceil(2)
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn missing(&self) -> u32 {
        self.missing
    }

    /// The pair containing `x`, or `None` when `x` is the missing element.
    pub fn pair_containing(&self, x: u32) -> Option<Pair> {
        self.pairs.iter().copied().find(|p| p.contains(x))
    }

    /// The unique pair of difference class `d`.
    pub fn pair_with_difference(&self, d: u32) -> Option<Pair> {
        self.pairs.iter().copied().find(|p| pair_difference(*p, self.modulus).0 == d)
    }

    /// `partners()[x]` is the element paired with `x`, or `None` for the missing one.
    pub fn partners(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.modulus as usize];
        for p in &self.pairs {
            out[p.lo as usize] = Some(p.hi);
            out[p.hi as usize] = Some(p.lo);
        }
        out
    }
}

/// Checks that `pairs` form a starter in `Z_n` and records its missing element.
pub fn validate_starter(pairs: &[Pair], n: u32) -> Result<Starter, StarterError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(StarterError::InvalidModulus { modulus: n, reason: "starter modulus must be odd and at least 3" });
    }
    let m = n.div_ceil(2);
    let diffs = check_pairs(pairs, n, (m - 1) as usize)?;
    check_distinct(&diffs, n)?;
    let missing = uncovered(pairs, n);
    debug_assert_eq!(missing.len(), 1);
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    Ok(Starter { modulus: n, pairs: sorted, missing: missing[0] })
}

/// An even starter in `Z_{2t-2}`.
///
/// `pairs` is the canonical sorted form; `listing` keeps the order and
/// orientation the pairs were supplied in (emission order for merge output).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "EvenStarterRepr", into = "EvenStarterRepr")]
pub struct EvenStarter {
    modulus: u32,
    pairs: Vec<Pair>,
    listing: Vec<[u32; 2]>,
    missing_pair: (u32, u32),
}

#[derive(Serialize, Deserialize)]
struct EvenStarterRepr {
    modulus: u32,
    pairs: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs_emission_order: Option<Vec<[u32; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing_pair: Option<[u32; 2]>,
}

impl TryFrom<EvenStarterRepr> for EvenStarter {
    type Error = StarterError;

    fn try_from(r: EvenStarterRepr) -> Result<Self, Self::Error> {
        let e = match r.pairs_emission_order {
            Some(listing) => {
                let e = validate_even_starter_listing(&listing, r.modulus)?;
                let mut given = r.pairs.clone();
                given.sort_unstable();
                if given != e.pairs {
                    return Err(StarterError::ListingMismatch);
                }
                e
            }
            None => validate_even_starter(&r.pairs, r.modulus)?,
        };
        if let Some([a, b]) = r.missing_pair {
            if (a, b) != e.missing_pair {
                return Err(StarterError::ListingMismatch);
            }
        }
        Ok(e)
    }
}

impl From<EvenStarter> for EvenStarterRepr {
    fn from(e: EvenStarter) -> Self {
        EvenStarterRepr {
            modulus: e.modulus,
            pairs: e.pairs,
            pairs_emission_order: Some(e.listing),
            missing_pair: Some([e.missing_pair.0, e.missing_pair.1]),
        }
    }
}

impl EvenStarter {
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// The `t` with `modulus = 2t - 2`; the factorisation built from this
    /// starter lives on `K_{2t}`.
    pub fn t(&self) -> u32 {
        (self.modulus + 2) / 2
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// Pairs in the order and orientation they were produced or supplied.
    pub fn listing(&self) -> &[[u32; 2]] {
        &self.listing
    }

    /// The two uncovered elements `(a, b)` with `a < b`.
    pub fn missing_pair(&self) -> (u32, u32) {
        self.missing_pair
    }
}

/// Checks that `pairs` form an even starter in `Z_n`.
pub fn validate_even_starter(pairs: &[Pair], n: u32) -> Result<EvenStarter, StarterError> {
    let listing: Vec<[u32; 2]> = pairs.iter().map(|&p| p.into()).collect();
    validate_even_starter_listing(&listing, n)
}

/// As [`validate_even_starter`], keeping the orientation of each listed pair.
pub fn validate_even_starter_listing(listing: &[[u32; 2]], n: u32) -> Result<EvenStarter, StarterError> {
    if n < 4 || n % 2 == 1 {
        return Err(StarterError::InvalidModulus {
            modulus: n,
            reason: "even starter modulus must be even and at least 4",
        });
    }
    let pairs = listing.iter().map(|&p| Pair::try_from(p)).collect::<Result<Vec<_>, _>>()?;
    let t = (n + 2) / 2;
    let diffs = check_pairs(&pairs, n, (t - 2) as usize)?;
    if let Some(i) = diffs.iter().position(|&d| d == t - 1) {
        return Err(StarterError::DifferenceTMinus1Present { pair: pairs[i], difference: t - 1 });
    }
    check_distinct(&diffs, n)?;
    let missing = uncovered(&pairs, n);
    debug_assert_eq!(missing.len(), 2);
    let mut sorted = pairs;
    sorted.sort_unstable();
    Ok(EvenStarter { modulus: n, pairs: sorted, listing: listing.to_vec(), missing_pair: (missing[0], missing[1]) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Designation {
    High,
    Low,
}

impl Designation {
    pub fn opposite(self) -> Self {
        match self {
            Designation::High => Designation::Low,
            Designation::Low => Designation::High,
        }
    }
}

/// Which of the two merged starters a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    S1,
    S2,
}

impl Which {
    pub fn other(self) -> Self {
        match self {
            Which::S1 => Which::S2,
            Which::S2 => Which::S1,
        }
    }
}

/// Designation of S1's pair for every difference `d` in `1..=m-1`, stored as a
/// bit mask (bit `d-1` set means High). S2's designations are the complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AssignmentRepr", into = "AssignmentRepr")]
pub struct HighLowAssignment {
    m: u32,
    s1_high: u64,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRepr {
    m: u32,
    s1_high: Vec<u32>,
}

impl TryFrom<AssignmentRepr> for HighLowAssignment {
    type Error = StarterError;

    fn try_from(r: AssignmentRepr) -> Result<Self, Self::Error> {
        HighLowAssignment::from_high_differences(r.m, &r.s1_high)
    }
}

impl From<HighLowAssignment> for AssignmentRepr {
    fn from(a: HighLowAssignment) -> Self {
        AssignmentRepr { m: a.m, s1_high: a.s1_high_differences() }
    }
}

impl HighLowAssignment {
    /// Largest `m` whose assignments fit the mask.
    pub const MAX_M: u32 = 64;

    /// Assignment from an `(m-1)`-bit counter: bit `d-1` gives S1's
    /// designation for difference `d`, 1 = High.
    pub fn from_mask(m: u32, mask: u64) -> Result<Self, StarterError> {
        if !(2..=Self::MAX_M).contains(&m) {
            return Err(StarterError::InvalidOrder(m));
        }
        let width = m - 1;
        if width < 64 && mask >> width != 0 {
            return Err(StarterError::DifferenceOutOfRange { d: 64 - mask.leading_zeros(), max: width });
        }
        Ok(HighLowAssignment { m, s1_high: mask })
    }

    /// Assignment in which S1's pairs with the listed differences are High and
    /// all others Low.
    pub fn from_high_differences(m: u32, high: &[u32]) -> Result<Self, StarterError> {
        if !(2..=Self::MAX_M).contains(&m) {
            return Err(StarterError::InvalidOrder(m));
        }
        let mut mask = 0u64;
        for &d in high {
            if d == 0 || d >= m {
                return Err(StarterError::DifferenceOutOfRange { d, max: m - 1 });
            }
            mask |= 1 << (d - 1);
        }
        Ok(HighLowAssignment { m, s1_high: mask })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn mask(&self) -> u64 {
        self.s1_high
    }

    /// Number of distinct assignments for this `m`, i.e. `2^(m-1)`.
    pub fn count(m: u32) -> u64 {
        1u64 << (m - 1)
    }

    pub fn s1_high_differences(&self) -> Vec<u32> {
        (1..self.m).filter(|d| self.s1_high >> (d - 1) & 1 == 1).collect()
    }

    /// The same assignment with S1's designation for `d` flipped.
    pub fn flipped(&self, d: u32) -> Result<Self, StarterError> {
        if d == 0 || d >= self.m {
            return Err(StarterError::DifferenceOutOfRange { d, max: self.m - 1 });
        }
        Ok(HighLowAssignment { m: self.m, s1_high: self.s1_high ^ (1 << (d - 1)) })
    }

    pub fn designation(&self, which: Which, d: u32) -> Result<Designation, StarterError> {
        designation_of(which, DifferenceClass(d), self)
    }
}

/// Designation of the pair of difference `d` in starter `which`.
pub fn designation_of(which: Which, d: DifferenceClass, a: &HighLowAssignment) -> Result<Designation, StarterError> {
    let d = d.0;
    if d == 0 || d >= a.m {
        return Err(StarterError::DifferenceOutOfRange { d, max: a.m - 1 });
    }
    let s1 = if a.s1_high >> (d - 1) & 1 == 1 { Designation::High } else { Designation::Low };
    Ok(match which {
        Which::S1 => s1,
        Which::S2 => s1.opposite(),
    })
}

/// Every starter in `Z_{2m-1}` exactly once, in lexicographic order of the
/// sorted pair lists.
///
/// With a cap, the iterator yields `cap` starters and then a single
/// [`StarterError::BudgetExceeded`] if more remain.
pub fn enumerate_starters(m: u32, cap: Option<u64>) -> Result<StarterEnumeration, StarterError> {
    if !(2..=HighLowAssignment::MAX_M).contains(&m) {
        return Err(StarterError::InvalidOrder(m));
    }
    let n = 2 * m - 1;
    Ok(StarterEnumeration {
        n,
        depth_target: (m - 1) as usize,
        used: vec![false; n as usize],
        diff_used: vec![false; m as usize],
        missing: None,
        stack: Vec::new(),
        started: false,
        finished: false,
        cap,
        yielded: 0,
    })
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    lo: u32,
    hi: u32,
    /// Element declared missing when this pair was placed, if any.
    skipped: Option<u32>,
}

/// Depth-first enumeration state for [`enumerate_starters`].
#[derive(Debug, Clone)]
pub struct StarterEnumeration {
    n: u32,
    depth_target: usize,
    used: Vec<bool>,
    diff_used: Vec<bool>,
    missing: Option<u32>,
    stack: Vec<Choice>,
    started: bool,
    finished: bool,
    cap: Option<u64>,
    yielded: u64,
}

impl StarterEnumeration {
    fn free_after(&self, from: u32) -> Option<u32> {
        (from..self.n).find(|&x| !self.used[x as usize])
    }

    fn diff(&self, lo: u32, hi: u32) -> u32 {
        (hi - lo).min(self.n - (hi - lo))
    }

    /// The first admissible choice at the current depth strictly after `after`
    /// in lexicographic `(lo, hi)` order.
    fn next_choice(&self, after: Option<Choice>) -> Option<Choice> {
        let first = self.free_after(0)?;
        let mut lows = vec![(first, None)];
        if self.missing.is_none() {
            if let Some(second) = self.free_after(first + 1) {
                lows.push((second, Some(first)));
            }
        }
        for (lo, skipped) in lows {
            let start = match after {
                Some(c) if c.lo == lo => c.hi + 1,
                Some(c) if c.lo > lo => continue,
                _ => lo + 1,
            };
            for hi in start..self.n {
                if self.used[hi as usize] || Some(hi) == skipped {
                    continue;
                }
                if !self.diff_used[self.diff(lo, hi) as usize] {
                    return Some(Choice { lo, hi, skipped });
                }
            }
        }
        None
    }

    fn apply(&mut self, c: Choice) {
        self.used[c.lo as usize] = true;
        self.used[c.hi as usize] = true;
        let d = self.diff(c.lo, c.hi) as usize;
        self.diff_used[d] = true;
        if let Some(s) = c.skipped {
            self.used[s as usize] = true;
            self.missing = Some(s);
        }
        self.stack.push(c);
    }

    fn undo(&mut self) -> Option<Choice> {
        let c = self.stack.pop()?;
        self.used[c.lo as usize] = false;
        self.used[c.hi as usize] = false;
        let d = self.diff(c.lo, c.hi) as usize;
        self.diff_used[d] = false;
        if let Some(s) = c.skipped {
            self.used[s as usize] = false;
            self.missing = None;
        }
        Some(c)
    }

    /// Advances to the next complete starter; `false` once exhausted.
    fn advance(&mut self) -> bool {
        // Resume point: the choice to move past at the current depth.
        let mut after: Option<Choice> = if self.started { self.undo() } else { None };
        if !self.started {
            self.started = true;
        } else if after.is_none() {
            return false;
        }
        loop {
            match self.next_choice(after) {
                Some(c) => {
                    self.apply(c);
                    if self.stack.len() == self.depth_target {
                        return true;
                    }
                    after = None;
                }
                None => match self.undo() {
                    Some(c) => after = Some(c),
                    None => return false,
                },
            }
        }
    }

    fn current(&self) -> Starter {
        let mut pairs: Vec<Pair> = self.stack.iter().map(|c| Pair { lo: c.lo, hi: c.hi }).collect();
        pairs.sort_unstable();
        let missing = self.missing.or_else(|| self.free_after(0)).expect("one element remains uncovered");
        Starter { modulus: self.n, pairs, missing }
    }
}

impl Iterator for StarterEnumeration {
    type Item = Result<Starter, StarterError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        if !self.advance() {
            self.finished = true;
            return None;
        }
        if let Some(cap) = self.cap {
            if self.yielded >= cap {
                self.finished = true;
                return Some(Err(StarterError::BudgetExceeded { cap }));
            }
        }
        self.yielded += 1;
        Some(Ok(self.current()))
    }
}

/// A starter drawn by seeded randomized backtracking. Pure in `(m, seed)`.
pub fn random_starter(m: u32, seed: u64) -> Result<Starter, StarterError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_starter_with(m, &mut rng)
}

/// Randomized backtracking over difference classes `m-1` down to `1`, placing
/// each class on a uniformly chosen pair of still-unused elements.
pub fn random_starter_with<R: Rng + ?Sized>(m: u32, rng: &mut R) -> Result<Starter, StarterError> {
    if !(2..=HighLowAssignment::MAX_M).contains(&m) {
        return Err(StarterError::InvalidOrder(m));
    }
    let n = 2 * m - 1;
    let mut used = vec![false; n as usize];
    let mut pairs = Vec::with_capacity((m - 1) as usize);
    let mut nodes = 0u64;
    if place_class(m - 1, n, &mut used, &mut pairs, &mut nodes, rng) {
        pairs.sort_unstable();
        let missing = (0..n).find(|&x| !used[x as usize]).expect("one element remains uncovered");
        Ok(Starter { modulus: n, pairs, missing })
    } else {
        Err(StarterError::GenerationFailed { m, nodes })
    }
}

fn place_class<R: Rng + ?Sized>(
    d: u32,
    n: u32,
    used: &mut [bool],
    pairs: &mut Vec<Pair>,
    nodes: &mut u64,
    rng: &mut R,
) -> bool {
    if d == 0 {
        return true;
    }
    let mut candidates: Vec<u32> = (0..n).filter(|&x| !used[x as usize] && !used[((x + d) % n) as usize]).collect();
    candidates.shuffle(rng);
    for x in candidates {
        *nodes += 1;
        if *nodes > RANDOM_STARTER_NODE_CAP {
            return false;
        }
        let y = (x + d) % n;
        used[x as usize] = true;
        used[y as usize] = true;
        pairs.push(Pair::new(x, y).expect("d is nonzero mod n"));
        if place_class(d - 1, n, used, pairs, nodes, rng) {
            return true;
        }
        pairs.pop();
        used[x as usize] = false;
        used[y as usize] = false;
        if *nodes > RANDOM_STARTER_NODE_CAP {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn pairs(list: &[(u32, u32)]) -> Vec<Pair> {
        list.iter().map(|&(u, v)| Pair::new(u, v).unwrap()).collect()
    }

    #[test]
    fn difference_examples() {
        assert_eq!(pair_difference(Pair::new(0, 1).unwrap(), 27), DifferenceClass(1));
        assert_eq!(pair_difference(Pair::new(5, 19).unwrap(), 27), DifferenceClass(13));
        assert_eq!(pair_difference(Pair::new(25, 7).unwrap(), 27), DifferenceClass(9));
    }

    #[test]
    fn pair_is_canonical() {
        let p = Pair::new(9, 2).unwrap();
        assert_eq!((p.lo(), p.hi()), (2, 9));
        assert_eq!(p.partner(9), Some(2));
        assert_eq!(p.partner(3), None);
        assert_eq!(Pair::new(4, 4), Err(StarterError::DegeneratePair(4)));
    }

    #[test]
    fn starter_rejections() {
        assert_eq!(validate_starter(&pairs(&[(0, 1), (1, 2)]), 5), Err(StarterError::OverlappingPairs { element: 1 }));
        assert_eq!(validate_starter(&pairs(&[(0, 1)]), 5), Err(StarterError::WrongPairCount { expected: 2, found: 1 }));
        assert_eq!(
            validate_starter(&pairs(&[(0, 1), (2, 3)]), 5),
            Err(StarterError::DuplicateDifference { difference: 1 })
        );
        assert_eq!(
            validate_starter(&pairs(&[(0, 1), (2, 7)]), 5),
            Err(StarterError::ElementOutOfRange { element: 7, modulus: 5 })
        );
        assert!(matches!(validate_starter(&pairs(&[(0, 1)]), 4), Err(StarterError::InvalidModulus { .. })));
    }

    #[test]
    fn even_starter_examples() {
        let e = validate_even_starter(&pairs(&[(4, 5), (1, 3)]), 6).unwrap();
        assert_eq!(e.missing_pair(), (0, 2));
        assert_eq!(e.t(), 4);
        assert_eq!(
            validate_even_starter(&pairs(&[(0, 3), (1, 2)]), 6),
            Err(StarterError::DifferenceTMinus1Present { pair: Pair::new(0, 3).unwrap(), difference: 3 })
        );
        assert_eq!(
            validate_even_starter(&pairs(&[(0, 1), (2, 3)]), 6),
            Err(StarterError::DuplicateDifference { difference: 1 })
        );
    }

    #[test]
    fn even_starter_json_keeps_listing() {
        let e = validate_even_starter_listing(&[[5, 4], [1, 3]], 6).unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"modulus":6,"pairs":[[1,3],[4,5]],"pairs_emission_order":[[5,4],[1,3]],"missing_pair":[0,2]}"#
        );
        let back: EvenStarter = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        let tampered = r#"{"modulus":6,"pairs":[[1,3],[4,5]],"missing_pair":[0,1]}"#;
        assert!(serde_json::from_str::<EvenStarter>(tampered).is_err());
    }

    #[test]
    fn designations_are_complementary() {
        let a = HighLowAssignment::from_high_differences(14, &[1, 4, 5, 6, 9, 10, 12]).unwrap();
        assert_eq!(a.designation(Which::S1, 1), Ok(Designation::High));
        assert_eq!(a.designation(Which::S2, 1), Ok(Designation::Low));
        for d in 1..14 {
            assert_eq!(a.designation(Which::S2, d).unwrap(), a.designation(Which::S1, d).unwrap().opposite());
        }
        assert_eq!(a.designation(Which::S1, 14), Err(StarterError::DifferenceOutOfRange { d: 14, max: 13 }));
        assert_eq!(a.designation(Which::S2, 0), Err(StarterError::DifferenceOutOfRange { d: 0, max: 13 }));
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"m":14,"s1_high":[1,4,5,6,9,10,12]}"#);
    }

    #[test]
    fn assignment_mask_bounds() {
        assert!(HighLowAssignment::from_mask(3, 0b11).is_ok());
        assert!(HighLowAssignment::from_mask(3, 0b100).is_err());
        assert!(HighLowAssignment::from_mask(1, 0).is_err());
        assert_eq!(HighLowAssignment::count(14), 8192);
    }

    #[test]
    fn enumerate_m2() {
        let all: Vec<Starter> = enumerate_starters(2, None).unwrap().map(Result::unwrap).collect();
        let got: Vec<Vec<Pair>> = all.iter().map(|s| s.pairs().to_vec()).collect();
        assert_eq!(got, vec![pairs(&[(0, 1)]), pairs(&[(0, 2)]), pairs(&[(1, 2)])]);
        assert_eq!(all.iter().map(Starter::missing).collect::<Vec<_>>(), vec![2, 1, 0]);
    }

    #[test]
    fn enumerate_cap() {
        let mut it = enumerate_starters(2, Some(2)).unwrap();
        assert!(it.next().unwrap().is_ok());
        assert!(it.next().unwrap().is_ok());
        assert_eq!(it.next(), Some(Err(StarterError::BudgetExceeded { cap: 2 })));
        assert_eq!(it.next(), None);
        // A cap equal to the total is never hit.
        assert_eq!(enumerate_starters(2, Some(3)).unwrap().filter(Result::is_ok).count(), 3);
        assert_eq!(enumerate_starters(2, Some(3)).unwrap().count(), 3);
    }

    /// Every subset of `m-1` pairs of `Z_n`, filtered by the starter
    /// definition directly.
    fn brute_force_starters(m: u32) -> Vec<Vec<Pair>> {
        fn choose(
            all: &[(u32, u32)],
            k: usize,
            from: usize,
            cur: &mut Vec<(u32, u32)>,
            out: &mut Vec<Vec<(u32, u32)>>,
        ) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in from..all.len() {
                cur.push(all[i]);
                choose(all, k, i + 1, cur, out);
                cur.pop();
            }
        }
        let n = 2 * m - 1;
        let all: Vec<(u32, u32)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let k = (m - 1) as usize;
        let mut subsets = Vec::new();
        choose(&all, k, 0, &mut Vec::new(), &mut subsets);
        subsets
            .into_iter()
            .filter(|chosen| {
                let mut elems: Vec<u32> = chosen.iter().flat_map(|&(u, v)| [u, v]).collect();
                elems.sort_unstable();
                elems.dedup();
                let mut diffs: Vec<u32> = chosen.iter().map(|&(u, v)| (v - u).min(n - (v - u))).collect();
                diffs.sort_unstable();
                elems.len() == 2 * k && diffs == (1..m).collect::<Vec<_>>()
            })
            .map(|chosen| chosen.iter().map(|&(u, v)| Pair::new(u, v).unwrap()).collect())
            .collect()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for m in 2..=5 {
            let mut oracle = brute_force_starters(m);
            oracle.sort();
            let got: Vec<Vec<Pair>> =
                enumerate_starters(m, None).unwrap().map(|s| s.unwrap().pairs().to_vec()).collect();
            let mut sorted = got.clone();
            sorted.sort();
            assert_eq!(got, sorted, "m={m}: not in lexicographic order");
            assert_eq!(got, oracle, "m={m}");
        }
        assert_eq!(brute_force_starters(3).len(), 5);
    }

    #[test]
    fn enumerated_starters_validate() {
        for m in 2..=6 {
            for s in enumerate_starters(m, None).unwrap() {
                let s = s.unwrap();
                assert_eq!(validate_starter(s.pairs(), s.modulus()).unwrap(), s);
            }
        }
    }

    #[test]
    fn random_starter_is_deterministic() {
        let a = random_starter(2, 17).unwrap();
        assert_eq!(a, random_starter(2, 17).unwrap());
        let all: Vec<Starter> = enumerate_starters(2, None).unwrap().map(Result::unwrap).collect();
        assert!(all.contains(&a));
    }

    #[test]
    fn random_starters_vary_with_seed() {
        let distinct: HashSet<Starter> = (0..100).map(|s| random_starter(14, s).unwrap()).collect();
        assert!(distinct.len() >= 99, "only {} distinct starters", distinct.len());
    }

    #[test]
    fn starter_json_roundtrip() {
        let s = random_starter(6, 3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Starter>(&json).unwrap(), s);
        assert!(serde_json::from_str::<Starter>(r#"{"modulus":5,"pairs":[[0,1],[1,2]]}"#).is_err());
    }
}
