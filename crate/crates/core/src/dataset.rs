//! The published `K_56` instance: two starters of `Z_27`, their high/low rows,
//! and the even starter of `Z_54` their merge produces.

use serde::Serialize;

use crate::starters::{pair_difference, validate_starter, HighLowAssignment, Pair, Starter};

const MODULUS: u32 = 27;

const S1_HIGH: [(u32, u32); 7] = [(0, 1), (7, 11), (12, 17), (20, 26), (16, 25), (8, 18), (10, 22)];
const S1_LOW: [(u32, u32); 6] = [(2, 4), (3, 6), (14, 21), (15, 23), (13, 24), (5, 19)];
const S2_LOW: [(u32, u32); 7] = [(1, 2), (6, 10), (16, 21), (12, 18), (7, 25), (5, 15), (8, 23)];
const S2_HIGH: [(u32, u32); 6] = [(24, 26), (19, 22), (4, 11), (9, 17), (3, 14), (0, 13)];

/// The 26 pairs of the even starter of `Z_54`, in the order and orientation
/// the merge emits them.
pub const K56_EVEN_STARTER: [[u32; 2]; 26] = [
    [36, 17],
    [44, 12],
    [39, 45],
    [18, 35],
    [8, 50],
    [23, 15],
    [42, 32],
    [5, 46],
    [19, 49],
    [22, 37],
    [10, 6],
    [33, 30],
    [3, 41],
    [14, 21],
    [48, 43],
    [16, 52],
    [25, 34],
    [7, 38],
    [11, 31],
    [4, 2],
    [29, 28],
    [1, 27],
    [0, 40],
    [13, 24],
    [51, 26],
    [53, 20],
];

pub const K56_MISSING: (u32, u32) = (9, 47);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperDataset {
    pub s1: Starter,
    pub s2: Starter,
    pub assignment: HighLowAssignment,
    /// S2's High row, kept to check complementarity against `assignment`.
    pub s2_high: Vec<Pair>,
    pub expected_even_starter: Vec<[u32; 2]>,
    pub expected_missing: (u32, u32),
}

fn pairs(rows: &[&[(u32, u32)]]) -> Vec<Pair> {
    rows.iter().flat_map(|r| r.iter()).map(|&(u, v)| Pair::new(u, v).expect("table pairs are distinct")).collect()
}

impl PaperDataset {
    pub fn k56() -> PaperDataset {
        let s1 = validate_starter(&pairs(&[&S1_HIGH, &S1_LOW]), MODULUS).expect("table starter S1 is valid");
        let s2 = validate_starter(&pairs(&[&S2_LOW, &S2_HIGH]), MODULUS).expect("table starter S2 is valid");
        let high: Vec<u32> = pairs(&[&S1_HIGH]).iter().map(|p| pair_difference(*p, MODULUS).get()).collect();
        let assignment = HighLowAssignment::from_high_differences(s1.m(), &high).expect("differences below m");
        PaperDataset {
            s1,
            s2,
            assignment,
            s2_high: pairs(&[&S2_HIGH]),
            expected_even_starter: K56_EVEN_STARTER.to_vec(),
            expected_missing: K56_MISSING,
        }
    }

    /// S2's High differences must be exactly S1's Low differences.
    pub fn check_complementary(&self) -> bool {
        let mut s2_high: Vec<u32> = self.s2_high.iter().map(|p| pair_difference(*p, MODULUS).get()).collect();
        s2_high.sort_unstable();
        let s1_low: Vec<u32> =
            (1..self.assignment.m()).filter(|d| !self.assignment.s1_high_differences().contains(d)).collect();
        s2_high == s1_low
    }
}
