//! Perfect one-factorisations of complete graphs `K_{4m}` built by merging two
//! starters of `Z_{2m-1}` into an even starter of `Z_{4m-2}`.
//!
//! The pipeline is:
//!
//! 1. [`starters`]: starters, even starters and high/low designations.
//! 2. [`merge`]: lift a compatible starter pair into an even starter.
//! 3. [`factorisation`]: turn an even starter into a one-factorisation of `K_{2t}`.
//! 4. [`perfection`]: decide whether every pair of one-factors forms a Hamilton cycle.
//! 5. [`search`]: sweep starter pairs and designations looking for perfect outcomes.
//!
//! [`cli`] wires everything to the `p1f` binary, and [`dataset`] embeds the
//! published `K_56` instance.

pub mod cli;
pub mod dataset;
pub mod factorisation;
pub mod merge;
pub mod perfection;
pub mod search;
pub mod starters;

pub use factorisation::{build_from_even_starter, rotate, validate_factorisation, OneFactor, OneFactorisation, Vertex};
pub use merge::{merge_starters, pair_compatible, MergeError};
pub use perfection::{verify_perfect_full, verify_perfect_reduced, PerfectnessReport};
pub use starters::{
    pair_difference, validate_even_starter, validate_starter, Designation, DifferenceClass, EvenStarter,
    HighLowAssignment, Pair, Starter, StarterError, Which,
};
