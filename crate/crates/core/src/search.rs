//! Sweeps over (starter pair × high/low assignment) space.
//!
//! Attempts are numbered `0, 1, 2, ...`. In exhaustive mode attempt `k` is the
//! ordered pair `(S[k / N], S[k % N])` of the `N` enumerated starters; in random
//! mode both starters are drawn from a ChaCha8 stream seeded with `seed + k`.
//! Worker `w` of `W` evaluates the attempts `k ≡ w (mod W)` of each batch, and
//! the results are folded in attempt order, so the statistics never depend on
//! the worker count or on scheduling.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::factorisation::build_from_even_starter;
use crate::merge::{merge_starters, pair_compatible, MergeError};
use crate::perfection::{even_starter_is_perfect, verify_perfect_full};
use crate::starters::{enumerate_starters, random_starter_with, HighLowAssignment, Starter, StarterError};

/// Largest `m` accepted in exhaustive mode.
pub const MAX_EXHAUSTIVE_M: u32 = 7;

/// Checkpoint format version written by this build.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Attempts handed to each worker per batch.
const ATTEMPTS_PER_WORKER: u64 = 32;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint is corrupt: {0}")]
    CheckpointCorrupt(String),
    #[error("checkpoint was written by a different configuration (digest {found}, expected {expected})")]
    ConfigMismatch { expected: String, found: String },
    #[error("checkpoint I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Starter(#[from] StarterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub m: u32,
    pub mode: SearchMode,
    pub workers: usize,
    /// Maximum total starter pairs to examine, counted across resumes.
    pub budget: Option<u64>,
    pub checkpoint: Option<PathBuf>,
    /// Emit a progress callback every this many examined pairs.
    pub report_every: Option<u64>,
    pub stop_on_hit: bool,
}

impl SearchConfig {
    pub fn exhaustive(m: u32) -> Self {
        SearchConfig {
            m,
            mode: SearchMode::Exhaustive,
            workers: 1,
            budget: None,
            checkpoint: None,
            report_every: None,
            stop_on_hit: Self::default_stop_on_hit(m),
        }
    }

    pub fn random(m: u32, seed: u64) -> Self {
        SearchConfig { mode: SearchMode::Random { seed }, ..Self::exhaustive(m) }
    }

    /// Searches at `m >= 4` stop at their first perfect outcome by default;
    /// smaller instances are censuses.
    pub fn default_stop_on_hit(m: u32) -> bool {
        m >= 4
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(2..=HighLowAssignment::MAX_M).contains(&self.m) {
            return Err(SearchError::InvalidConfig(format!(
                "m = {} is outside 2..={}",
                self.m,
                HighLowAssignment::MAX_M
            )));
        }
        if self.mode == SearchMode::Exhaustive && self.m > MAX_EXHAUSTIVE_M {
            return Err(SearchError::InvalidConfig(format!(
                "exhaustive mode supports m <= {MAX_EXHAUSTIVE_M}, got {}",
                self.m
            )));
        }
        if self.workers == 0 {
            return Err(SearchError::InvalidConfig("workers must be positive".into()));
        }
        if self.report_every == Some(0) {
            return Err(SearchError::InvalidConfig("report interval must be positive".into()));
        }
        Ok(())
    }

    /// Hash of the fields that determine the attempt sequence and its
    /// outcomes. Budget, worker count and reporting may change on resume.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Identity {
            version: u32,
            m: u32,
            mode: SearchMode,
            stop_on_hit: bool,
        }
        let identity =
            Identity { version: CHECKPOINT_VERSION, m: self.m, mode: self.mode, stop_on_hit: self.stop_on_hit };
        let bytes = serde_json::to_vec(&identity).expect("identity serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Result of running the full pipeline on one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    DeadEnd { step: usize },
    InvalidEvenStarter,
    NotPerfect,
    Perfect,
}

/// Merge (which validates its output), then the reduced perfectness check on
/// the generated factorisation.
pub fn evaluate(s1: &Starter, s2: &Starter, assignment: &HighLowAssignment) -> Result<Outcome, MergeError> {
    match merge_starters(s1, s2, assignment) {
        Ok(even) => Ok(if even_starter_is_perfect(&even) { Outcome::Perfect } else { Outcome::NotPerfect }),
        Err(MergeError::DeadEnd { step }) => Ok(Outcome::DeadEnd { step }),
        Err(MergeError::InvalidOutput(reason)) => {
            log::warn!(
                "merge produced an invalid even starter ({reason}): s1={} s2={} assignment={}",
                serde_json::to_string(s1).unwrap_or_default(),
                serde_json::to_string(s2).unwrap_or_default(),
                serde_json::to_string(assignment).unwrap_or_default(),
            );
            Ok(Outcome::InvalidEvenStarter)
        }
        Err(e) => Err(e),
    }
}

/// Evaluates all `2^(m-1)` assignments in counter order.
pub fn sweep_assignments(s1: &Starter, s2: &Starter) -> Result<Vec<(HighLowAssignment, Outcome)>, MergeError> {
    let m = s1.m();
    (0..HighLowAssignment::count(m))
        .map(|mask| {
            let a = HighLowAssignment::from_mask(m, mask).expect("mask below 2^(m-1)");
            evaluate(s1, s2, &a).map(|o| (a, o))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub attempt: u64,
    pub s1: Starter,
    pub s2: Starter,
    pub assignment: HighLowAssignment,
}

impl Hit {
    /// Rebuilds the hit and checks every factor pair.
    pub fn reverify_full(&self) -> bool {
        merge_starters(&self.s1, &self.s2, &self.assignment)
            .ok()
            .and_then(|e| verify_perfect_full(&build_from_even_starter(&e)).ok())
            .is_some_and(|r| r.is_perfect)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub pairs_examined: u64,
    pub incompatible_pairs: u64,
    pub assignments_tried: u64,
    pub invalid_even_starters: u64,
    pub not_perfect: u64,
    pub perfect_hits: Vec<Hit>,
}

impl SearchStats {
    fn absorb(&mut self, r: AttemptRecord) {
        self.pairs_examined += 1;
        if !r.compatible {
            self.incompatible_pairs += 1;
        }
        self.assignments_tried += r.assignments;
        self.invalid_even_starters += r.invalid;
        self.not_perfect += r.not_perfect;
        self.perfect_hits.extend(r.hits);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Exhausted,
    Budget,
    Hit,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub stats: SearchStats,
    pub stop: StopReason,
    /// First attempt index not yet examined.
    pub next_attempt: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_digest: String,
    pub next_attempt: u64,
    /// Next attempt index owned by each worker at the time of writing.
    pub worker_cursors: Vec<u64>,
    pub stats: SearchStats,
}

impl Checkpoint {
    pub fn new(cfg: &SearchConfig) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config_digest: cfg.digest(),
            next_attempt: 0,
            worker_cursors: (0..cfg.workers as u64).collect(),
            stats: SearchStats::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, SearchError> {
        let cp: Checkpoint = serde_json::from_str(text).map_err(|e| SearchError::CheckpointCorrupt(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(SearchError::CheckpointCorrupt(format!("unsupported version {}", cp.version)));
        }
        if cp.stats.pairs_examined != cp.next_attempt {
            return Err(SearchError::CheckpointCorrupt(format!(
                "cursor {} disagrees with {} examined pairs",
                cp.next_attempt, cp.stats.pairs_examined
            )));
        }
        Ok(cp)
    }

    pub fn load(path: &Path) -> Result<Checkpoint, SearchError> {
        Checkpoint::from_json(&fs::read_to_string(path)?)
    }

    /// Writes through a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), SearchError> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, self.to_json())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Serialize then parse.
pub fn checkpoint_roundtrip(cp: &Checkpoint) -> Result<Checkpoint, SearchError> {
    Checkpoint::from_json(&cp.to_json())
}

#[derive(Debug, Default)]
struct AttemptRecord {
    index: u64,
    compatible: bool,
    assignments: u64,
    invalid: u64,
    not_perfect: u64,
    hits: Vec<Hit>,
}

enum Source {
    Exhaustive(Vec<Starter>),
    Random { m: u32, seed: u64 },
}

impl Source {
    fn new(cfg: &SearchConfig) -> Result<Source, SearchError> {
        Ok(match cfg.mode {
            SearchMode::Exhaustive => {
                Source::Exhaustive(enumerate_starters(cfg.m, None)?.collect::<Result<Vec<_>, _>>()?)
            }
            SearchMode::Random { seed } => Source::Random { m: cfg.m, seed },
        })
    }

    fn total(&self) -> Option<u64> {
        match self {
            Source::Exhaustive(all) => Some((all.len() as u64).pow(2)),
            Source::Random { .. } => None,
        }
    }

    fn pair(&self, k: u64) -> (Starter, Starter) {
        match self {
            Source::Exhaustive(all) => {
                let n = all.len() as u64;
                (all[(k / n) as usize].clone(), all[(k % n) as usize].clone())
            }
            Source::Random { m, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
                let s1 = random_starter_with(*m, &mut rng).expect("valid m always yields a starter");
                let s2 = random_starter_with(*m, &mut rng).expect("valid m always yields a starter");
                (s1, s2)
            }
        }
    }
}

fn examine(source: &Source, index: u64) -> AttemptRecord {
    let (s1, s2) = source.pair(index);
    let mut record = AttemptRecord { index, ..Default::default() };
    if !pair_compatible(&s1, &s2) {
        return record;
    }
    record.compatible = true;
    let outcomes = sweep_assignments(&s1, &s2).expect("starters share a modulus");
    record.assignments = outcomes.len() as u64;
    for (assignment, outcome) in outcomes {
        match outcome {
            Outcome::Perfect => record.hits.push(Hit { attempt: index, s1: s1.clone(), s2: s2.clone(), assignment }),
            Outcome::NotPerfect => record.not_perfect += 1,
            Outcome::InvalidEvenStarter => record.invalid += 1,
            // Compatible pairs complete for every assignment.
            Outcome::DeadEnd { step } => unreachable!("compatible pair dead-ended at step {step}"),
        }
    }
    record
}

fn examine_range(source: &Source, start: u64, end: u64, workers: usize) -> Vec<AttemptRecord> {
    let w = workers as u64;
    let mut records: Vec<AttemptRecord> = if workers == 1 || end - start <= 1 {
        (start..end).map(|k| examine(source, k)).collect()
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..w)
                .map(|worker| {
                    scope.spawn(move || {
                        let first = start + (worker + w - start % w) % w;
                        (first..end).step_by(workers).map(|k| examine(source, k)).collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("search worker panicked")).collect()
        })
    };
    records.sort_by_key(|r| r.index);
    records
}

pub fn run_search(cfg: &SearchConfig) -> Result<SearchReport, SearchError> {
    run_search_with_progress(cfg, |_| {})
}

/// Runs (or resumes, when the checkpoint file exists) a search. `progress` is
/// called with cumulative statistics every `report_every` examined pairs.
pub fn run_search_with_progress(
    cfg: &SearchConfig,
    mut progress: impl FnMut(&SearchStats),
) -> Result<SearchReport, SearchError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut cp = match &cfg.checkpoint {
        Some(path) if path.exists() => {
            let cp = Checkpoint::load(path)?;
            if cp.config_digest != cfg.digest() {
                return Err(SearchError::ConfigMismatch { expected: cfg.digest(), found: cp.config_digest });
            }
            cp
        }
        _ => Checkpoint::new(cfg),
    };
    let source = Source::new(cfg)?;
    let limit = match (source.total(), cfg.budget) {
        (Some(t), Some(b)) => Some(t.min(b)),
        (t, b) => t.or(b),
    };
    let batch = cfg.workers as u64 * ATTEMPTS_PER_WORKER;
    let mut stop = None;

    while stop.is_none() {
        if limit.is_some_and(|l| cp.next_attempt >= l) {
            stop = Some(if source.total().is_some_and(|t| cp.next_attempt >= t) {
                StopReason::Exhausted
            } else {
                StopReason::Budget
            });
            break;
        }
        let start = cp.next_attempt;
        let end = limit.map_or(start + batch, |l| l.min(start + batch));
        for record in examine_range(&source, start, end, cfg.workers) {
            let hit = !record.hits.is_empty();
            cp.next_attempt = record.index + 1;
            cp.stats.absorb(record);
            if cfg.report_every.is_some_and(|every| cp.stats.pairs_examined % every == 0) {
                progress(&cp.stats);
            }
            if hit && cfg.stop_on_hit {
                stop = Some(StopReason::Hit);
                break;
            }
        }
        let w = cfg.workers as u64;
        cp.worker_cursors = (0..w).map(|worker| cp.next_attempt + (worker + w - cp.next_attempt % w) % w).collect();
        if let Some(path) = &cfg.checkpoint {
            cp.save(path)?;
        }
    }
    if let Some(path) = &cfg.checkpoint {
        cp.save(path)?;
    }

    Ok(SearchReport {
        stats: cp.stats,
        stop: stop.expect("loop exits with a reason"),
        next_attempt: cp.next_attempt,
        elapsed: started.elapsed(),
    })
}
