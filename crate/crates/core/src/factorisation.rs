//! One-factorisations of `K_{2t}` on the vertex set `Z_{2t-2} ∪ {∞1, ∞2}`.
//!
//! From an even starter `E` with uncovered elements `a < b`, the base factor is
//! `F_0 = E ∪ {{a, ∞1}, {b, ∞2}}`, the factors `F_i` are its images under the
//! rotation `k ↦ k + i` (infinities fixed), and `M` pairs `x` with `x + t - 1`
//! plus `{∞1, ∞2}`. Factors are stored as `[M, F_0, ..., F_{2t-3}]`.

use std::collections::HashMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::starters::EvenStarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Finite(u32),
    Inf1,
    Inf2,
}

impl Vertex {
    /// Dense index on `0..2t`: finite vertices first, then `∞1`, `∞2`.
    /// `modulus` is `2t - 2`.
    pub fn index(self, modulus: u32) -> usize {
        match self {
            Vertex::Finite(k) => k as usize,
            Vertex::Inf1 => modulus as usize,
            Vertex::Inf2 => modulus as usize + 1,
        }
    }

    pub fn from_index(i: usize, modulus: u32) -> Vertex {
        match i as u32 {
            k if k < modulus => Vertex::Finite(k),
            k if k == modulus => Vertex::Inf1,
            _ => Vertex::Inf2,
        }
    }

    fn rotated(self, by: u64, modulus: u32) -> Vertex {
        match self {
            Vertex::Finite(k) => Vertex::Finite(((k as u64 + by) % modulus as u64) as u32),
            v => v,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Finite(k) => write!(f, "{k}"),
            Vertex::Inf1 => f.write_str("inf1"),
            Vertex::Inf2 => f.write_str("inf2"),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Vertex::Finite(k) => s.serialize_u32(*k),
            Vertex::Inf1 => s.serialize_str("inf1"),
            Vertex::Inf2 => s.serialize_str("inf2"),
        }
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct VertexVisitor;

        impl Visitor<'_> for VertexVisitor {
            type Value = Vertex;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer, \"inf1\" or \"inf2\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Vertex, E> {
                u32::try_from(v).map(Vertex::Finite).map_err(|_| E::custom(format!("vertex {v} too large")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Vertex, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("negative vertex {v}"))).and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Vertex, E> {
                match v {
                    "inf1" => Ok(Vertex::Inf1),
                    "inf2" => Ok(Vertex::Inf2),
                    _ => Err(E::unknown_variant(v, &["inf1", "inf2"])),
                }
            }
        }

        d.deserialize_any(VertexVisitor)
    }
}

/// An unordered vertex pair, smaller vertex first. Loops are representable so
/// that malformed input can be reported rather than rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[Vertex; 2]", into = "[Vertex; 2]")]
pub struct Edge(Vertex, Vertex);

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Edge {
        if u <= v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    pub fn ends(&self) -> (Vertex, Vertex) {
        (self.0, self.1)
    }
}

impl From<[Vertex; 2]> for Edge {
    fn from([u, v]: [Vertex; 2]) -> Self {
        Edge::new(u, v)
    }
}

impl From<Edge> for [Vertex; 2] {
    fn from(e: Edge) -> Self {
        [e.0, e.1]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.0, self.1)
    }
}

/// A set of edges intended to be a perfect matching of `K_order`. Edges are
/// kept sorted so equal factors compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OneFactor {
    order: u32,
    edges: Vec<Edge>,
}

impl OneFactor {
    pub fn new(order: u32, mut edges: Vec<Edge>) -> OneFactor {
        edges.sort_unstable();
        OneFactor { order, edges }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `order - 2`, the size of the cyclic part of the vertex set.
    pub fn modulus(&self) -> u32 {
        self.order.saturating_sub(2)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The factor `M = {{x, x+t-1}} ∪ {{∞1, ∞2}}` of `K_{2t}`.
    pub fn fixed_factor(t: u32) -> OneFactor {
        let mut edges: Vec<Edge> =
            (0..t - 1).map(|x| Edge::new(Vertex::Finite(x), Vertex::Finite(x + t - 1))).collect();
        edges.push(Edge::new(Vertex::Inf1, Vertex::Inf2));
        OneFactor::new(2 * t, edges)
    }

    /// `mates()[v]` is the vertex matched with `v` (dense indices), or `None`
    /// if the edges do not form a perfect matching of `0..order`.
    pub fn mates(&self) -> Option<Vec<usize>> {
        let n = self.modulus();
        let size = self.order as usize;
        let mut mate = vec![usize::MAX; size];
        for e in &self.edges {
            let (u, v) = (e.0.index(n), e.1.index(n));
            if u == v || u >= size || v >= size || mate[u] != usize::MAX || mate[v] != usize::MAX {
                return None;
            }
            if matches!(e.0, Vertex::Finite(k) if k >= n) || matches!(e.1, Vertex::Finite(k) if k >= n) {
                return None;
            }
            mate[u] = v;
            mate[v] = u;
        }
        mate.iter().all(|&m| m != usize::MAX).then_some(mate)
    }
}

impl Serialize for OneFactor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.edges.serialize(s)
    }
}

/// `σ^i(f)`: finite vertices shift by `i` modulo `order - 2`, infinities stay.
pub fn rotate(f: &OneFactor, i: u64) -> OneFactor {
    let n = f.modulus();
    if n == 0 {
        return f.clone();
    }
    let edges = f.edges.iter().map(|e| Edge::new(e.0.rotated(i, n), e.1.rotated(i, n))).collect();
    OneFactor::new(f.order, edges)
}

/// Factors `[M, F_0, ..., F_{2t-3}]` of `K_order`, optionally remembering the
/// even starter they were built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FactorisationRepr", into = "FactorisationRepr")]
pub struct OneFactorisation {
    order: u32,
    factors: Vec<OneFactor>,
    provenance: Option<EvenStarter>,
}

#[derive(Serialize, Deserialize)]
struct FactorisationRepr {
    order: u32,
    factors: Vec<Vec<Edge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    even_starter: Option<EvenStarter>,
}

impl TryFrom<FactorisationRepr> for OneFactorisation {
    type Error = String;

    fn try_from(r: FactorisationRepr) -> Result<Self, Self::Error> {
        if r.order < 4 || r.order % 2 == 1 {
            return Err(format!("order {} must be even and at least 4", r.order));
        }
        if let Some(e) = &r.even_starter {
            if e.modulus() + 2 != r.order {
                return Err(format!("even starter modulus {} does not match order {}", e.modulus(), r.order));
            }
        }
        let factors = r.factors.into_iter().map(|edges| OneFactor::new(r.order, edges)).collect();
        Ok(OneFactorisation { order: r.order, factors, provenance: r.even_starter })
    }
}

impl From<OneFactorisation> for FactorisationRepr {
    fn from(f: OneFactorisation) -> Self {
        FactorisationRepr {
            order: f.order,
            factors: f.factors.into_iter().map(|g| g.edges).collect(),
            even_starter: f.provenance,
        }
    }
}

impl OneFactorisation {
    /// A factorisation with no recorded provenance, e.g. one assembled by hand.
    pub fn from_factors(order: u32, factors: Vec<OneFactor>) -> OneFactorisation {
        OneFactorisation { order, factors, provenance: None }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn factors(&self) -> &[OneFactor] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut Vec<OneFactor> {
        &mut self.factors
    }

    pub fn provenance(&self) -> Option<&EvenStarter> {
        self.provenance.as_ref()
    }

    pub fn without_provenance(mut self) -> OneFactorisation {
        self.provenance = None;
        self
    }
}

/// The factorisation of `K_{2t}` generated by an even starter of `Z_{2t-2}`.
pub fn build_from_even_starter(e: &EvenStarter) -> OneFactorisation {
    let n = e.modulus();
    let t = e.t();
    let order = 2 * t;
    let (a, b) = e.missing_pair();
    let mut base: Vec<Edge> =
        e.pairs().iter().map(|p| Edge::new(Vertex::Finite(p.lo()), Vertex::Finite(p.hi()))).collect();
    base.push(Edge::new(Vertex::Finite(a), Vertex::Inf1));
    base.push(Edge::new(Vertex::Finite(b), Vertex::Inf2));
    let f0 = OneFactor::new(order, base);

    let mut factors = Vec::with_capacity(n as usize + 1);
    factors.push(OneFactor::fixed_factor(t));
    factors.extend((0..n as u64).map(|i| rotate(&f0, i)));
    OneFactorisation { order, factors, provenance: Some(e.clone()) }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WrongFactorCount { expected: usize, found: usize },
    WrongOrder { index: usize, order: u32 },
    NotAMatching { index: usize },
    EdgeRepeated { edge: Edge },
    EdgeMissing { edge: Edge },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongFactorCount { expected, found } => write!(f, "expected {expected} factors, found {found}"),
            Violation::WrongOrder { index, order } => write!(f, "factor {index} declares order {order}"),
            Violation::NotAMatching { index } => write!(f, "factor {index} is not a perfect matching"),
            Violation::EdgeRepeated { edge } => write!(f, "edge {edge} appears in more than one factor"),
            Violation::EdgeMissing { edge } => write!(f, "edge {edge} appears in no factor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FactorisationReport {
    pub violations: Vec<Violation>,
}

impl FactorisationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FactorisationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid one-factorisation");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks factor count, that every factor is a perfect matching, and that the
/// factors partition the edges of `K_order`.
pub fn validate_factorisation(f: &OneFactorisation) -> FactorisationReport {
    let mut violations = Vec::new();
    let order = f.order;
    let n = order.saturating_sub(2);
    let expected = order.saturating_sub(1) as usize;
    if f.factors.len() != expected {
        violations.push(Violation::WrongFactorCount { expected, found: f.factors.len() });
    }

    let mut counts: HashMap<Edge, usize> = HashMap::new();
    for (index, factor) in f.factors.iter().enumerate() {
        if factor.order != order {
            violations.push(Violation::WrongOrder { index, order: factor.order });
        }
        if factor.mates().is_none() {
            violations.push(Violation::NotAMatching { index });
        }
        for e in &factor.edges {
            *counts.entry(*e).or_default() += 1;
        }
    }

    let mut repeated: Vec<Edge> = counts.iter().filter(|(_, &c)| c > 1).map(|(e, _)| *e).collect();
    repeated.sort_unstable();
    violations.extend(repeated.into_iter().map(|edge| Violation::EdgeRepeated { edge }));
    for u in 0..order as usize {
        for v in u + 1..order as usize {
            let edge = Edge::new(Vertex::from_index(u, n), Vertex::from_index(v, n));
            if !counts.contains_key(&edge) {
                violations.push(Violation::EdgeMissing { edge });
            }
        }
    }
    FactorisationReport { violations }
}
