//! Cyclic partitions (permutations of the members) and the stability
//! predicates and statistics defined on them.
//!
//! A partition `Π` is stored as its successor map. Member `i` "proposes to"
//! `Π(i)` and "holds" `Π⁻¹(i)`. A partition is stable when
//!
//! 1. every member ranks their successor at least as high as their
//!    predecessor, and
//! 2. no pair `{i, j}` that is not adjacent in `Π` has both members
//!    preferring each other to their predecessors.
//!
//! Cycles are kept in canonical form: each rotated to start at its minimum
//! element, the list sorted by that minimum, successor orientation kept.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::PreferenceInstance;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclicPartition {
    succ: Vec<usize>,
    pred: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

/// Which alternate edges of an even cycle survive a reduction.
///
/// For a canonical cycle `(i1 i2 ... i2k)`, `EvenStart` keeps
/// `(i1,i2)(i3,i4)...` and `OddStart` keeps `(i2,i3)...(i2k,i1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceChoice {
    EvenStart,
    OddStart,
}

impl CyclicPartition {
    /// Builds a partition from a 0-based successor map.
    pub fn from_succ(succ: Vec<usize>) -> Result<Self> {
        let n = succ.len();
        let mut pred = vec![usize::MAX; n];
        for (i, &s) in succ.iter().enumerate() {
            if s >= n {
                return Err(Error::invalid(format!("successor {} of member {} out of range", s + 1, i + 1)));
            }
            if pred[s] != usize::MAX {
                return Err(Error::invalid(format!("member {} has two predecessors", s + 1)));
            }
            pred[s] = i;
        }
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = succ[i];
            }
            // `start` is the smallest unseen index, hence the cycle minimum.
            cycles.push(cycle);
        }
        Ok(CyclicPartition { succ, pred, cycles })
    }

    /// Builds a partition from disjoint cycles; members not mentioned become
    /// fixed points.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut succ: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        for cycle in cycles {
            for (k, &i) in cycle.iter().enumerate() {
                if i >= n {
                    return Err(Error::invalid(format!("member {} out of range", i + 1)));
                }
                if used[i] {
                    return Err(Error::invalid(format!("member {} appears in two cycles", i + 1)));
                }
                used[i] = true;
                succ[i] = cycle[(k + 1) % cycle.len()];
            }
        }
        Self::from_succ(succ)
    }

    /// Perfect (or partial) matching from 0-based pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let cycles: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        if pairs.iter().any(|&(a, b)| a == b) {
            return Err(Error::invalid("a matched pair needs two distinct members"));
        }
        Self::from_cycles(n, &cycles)
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    #[inline]
    pub fn succ(&self, i: usize) -> usize {
        self.succ[i]
    }

    #[inline]
    pub fn pred(&self, i: usize) -> usize {
        self.pred[i]
    }

    pub fn succ_map(&self) -> &[usize] {
        &self.succ
    }

    /// All cycles in canonical form, fixed points included.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// Odd-length cycles (fixed points included), canonical form.
    pub fn odd_parties(&self) -> Vec<Vec<usize>> {
        self.cycles.iter().filter(|c| c.len() % 2 == 1).cloned().collect()
    }

    pub fn odd_party_count(&self) -> usize {
        self.cycles.iter().filter(|c| c.len() % 2 == 1).count()
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.succ[i] == i).collect()
    }

    pub fn has_fixed_point(&self) -> bool {
        self.succ.iter().enumerate().any(|(i, &s)| s == i)
    }

    /// `m = |Odd(Π)|`: members on odd cycles, not counting a fixed point.
    pub fn odd_size(&self) -> usize {
        self.cycles
            .iter()
            .filter(|c| c.len() % 2 == 1 && c.len() > 1)
            .map(Vec::len)
            .sum()
    }

    /// Members on odd cycles of length at least 3.
    pub fn odd_members(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .cycles
            .iter()
            .filter(|c| c.len() % 2 == 1 && c.len() > 1)
            .flatten()
            .copied()
            .collect();
        out.sort_unstable();
        out
    }

    /// `{i, j} ∈ D(Π)`: the two members are adjacent in the permutation.
    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && (self.succ[i] == j || self.succ[j] == i)
    }

    /// Every even cycle has length 2.
    pub fn is_reduced(&self) -> bool {
        self.cycles.iter().all(|c| c.len() % 2 == 1 || c.len() == 2)
    }

    /// All cycles are transpositions.
    pub fn is_perfect_matching(&self) -> bool {
        self.cycles.iter().all(|c| c.len() == 2)
    }

    /// Splits every even cycle of length >= 4 into alternate transpositions;
    /// `select` is called with the index of each such cycle in canonical
    /// order.
    pub fn reduce(&self, mut select: impl FnMut(usize) -> ReduceChoice) -> CyclicPartition {
        let mut succ = self.succ.clone();
        let mut k = 0;
        for cycle in &self.cycles {
            let len = cycle.len();
            if len % 2 == 1 || len == 2 {
                continue;
            }
            let offset = match select(k) {
                ReduceChoice::EvenStart => 0,
                ReduceChoice::OddStart => 1,
            };
            k += 1;
            for t in (0..len).step_by(2) {
                let a = cycle[(t + offset) % len];
                let b = cycle[(t + offset + 1) % len];
                succ[a] = b;
                succ[b] = a;
            }
        }
        CyclicPartition::from_succ(succ).expect("reduction preserves bijectivity")
    }

    /// Matched pairs `(i, j)` with `i < j` from the 2-cycles.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.cycles
            .iter()
            .filter(|c| c.len() == 2)
            .map(|c| (c[0], c[1]))
            .collect()
    }

    /// 1-based successor map.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.succ.iter().map(|&s| s + 1).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PartitionJson {
            n: self.n(),
            succ: self.to_one_based(),
        })
        .expect("partition serialises")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: PartitionJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("partition JSON: {e}")))?;
        if raw.succ.len() != raw.n {
            return Err(Error::Parse(format!(
                "\"n\" is {} but \"succ\" has {} entries",
                raw.n,
                raw.succ.len()
            )));
        }
        let succ = raw
            .succ
            .iter()
            .map(|&s| s.checked_sub(1).ok_or_else(|| Error::Parse("member indices are 1-based".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_succ(succ)
    }

    /// Parses 1-based cycle notation such as `(1 2 3)(4)`. The size is the
    /// largest member mentioned; unmentioned members become fixed points.
    pub fn parse_cycles(text: &str) -> Result<Self> {
        let mut cycles = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| Error::Parse(format!("expected \"(members)\" in {text:?}")))?;
            let cycle = body
                .0
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::Parse(format!("bad member {t:?} in {text:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if cycle.is_empty() {
                return Err(Error::Parse(format!("empty cycle in {text:?}")));
            }
            cycles.push(cycle);
            rest = body.1.trim_start();
        }
        let n = cycles.iter().flatten().max().map_or(0, |&m| m + 1);
        if n == 0 {
            return Err(Error::Parse("empty partition".into()));
        }
        Self::from_cycles(n, &cycles)
    }

    /// JSON object or cycle notation, whichever the text looks like.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_cycles(text)
        }
    }

    /// Cycles as 1-based vectors, for reports.
    pub fn cycles_one_based(&self) -> Vec<Vec<usize>> {
        self.cycles
            .iter()
            .map(|c| c.iter().map(|&i| i + 1).collect())
            .collect()
    }
}

impl fmt::Display for CyclicPartition {
    /// Cycle notation with 1-based members, e.g. `(1 2 3)(4)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cycle in &self.cycles {
            let body: Vec<String> = cycle.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionJson {
    n: usize,
    succ: Vec<usize>,
}

/// Why a partition fails a stability predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// Member prefers their predecessor to their successor.
    Condition1Violation(usize),
    /// Two non-adjacent members prefer each other to their predecessors.
    BlockingPair(usize, usize),
    /// Each member prefers the other's predecessor to their own.
    ExchangeBlockingPair(usize, usize),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Witness::Condition1Violation(i) => {
                write!(f, "member {} prefers their predecessor to their successor", i + 1)
            }
            Witness::BlockingPair(i, j) => write!(f, "members {} and {} block", i + 1, j + 1),
            Witness::ExchangeBlockingPair(i, j) => {
                write!(f, "members {} and {} want to exchange predecessors", i + 1, j + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Unstable(Witness),
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityVerdict::Stable)
    }

    pub fn witness(&self) -> Option<Witness> {
        match *self {
            StabilityVerdict::Stable => None,
            StabilityVerdict::Unstable(w) => Some(w),
        }
    }
}

fn check_sizes(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<()> {
    if inst.n() != pi.n() {
        return Err(Error::invalid(format!(
            "partition has {} members, instance has {}",
            pi.n(),
            inst.n()
        )));
    }
    Ok(())
}

/// Checks both stability conditions; the first violation found is returned
/// as the witness (condition 1 is scanned before the pair scan).
pub fn is_stable(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<StabilityVerdict> {
    check_sizes(inst, pi)?;
    Ok(stability_of_maps(inst, &pi.succ, &pi.pred))
}

/// Same check on raw successor/predecessor maps, without building a
/// [`CyclicPartition`]. Used by the enumerator's inner loop.
pub(crate) fn stability_of_maps(inst: &PreferenceInstance, succ: &[usize], pred: &[usize]) -> StabilityVerdict {
    let n = succ.len();
    for i in 0..n {
        if inst.rank(i, succ[i]) > inst.rank(i, pred[i]) {
            return StabilityVerdict::Unstable(Witness::Condition1Violation(i));
        }
    }
    for i in 0..n {
        let ri = inst.rank(i, pred[i]);
        // A blocking partner is on i's list above the predecessor; taking
        // j > i visits each pair once.
        for &j in &inst.pref(i)[..ri - 1] {
            if j < i || succ[i] == j || succ[j] == i {
                continue;
            }
            if inst.rank(j, i) < inst.rank(j, pred[j]) {
                return StabilityVerdict::Unstable(Witness::BlockingPair(i, j));
            }
        }
    }
    StabilityVerdict::Stable
}

/// Re-evaluates a witness directly from the definitions.
pub fn witness_is_genuine(inst: &PreferenceInstance, pi: &CyclicPartition, w: Witness) -> bool {
    let r = |i: usize, j: usize| inst.rank(i, j);
    match w {
        Witness::Condition1Violation(i) => r(i, pi.succ(i)) > r(i, pi.pred(i)),
        Witness::BlockingPair(i, j) => {
            i != j
                && !pi.adjacent(i, j)
                && r(i, j) < r(i, pi.pred(i))
                && r(j, i) < r(j, pi.pred(j))
        }
        Witness::ExchangeBlockingPair(i, j) => {
            i != j && r(i, pi.pred(j)) < r(i, pi.pred(i)) && r(j, pi.pred(i)) < r(j, pi.pred(j))
        }
    }
}

/// No two members each prefer the other's predecessor to their own.
pub fn is_exchange_stable(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<StabilityVerdict> {
    check_sizes(inst, pi)?;
    let n = inst.n();
    for i in 0..n {
        for j in i + 1..n {
            let (pi_i, pi_j) = (pi.pred(i), pi.pred(j));
            if inst.prefers(i, pi_j, pi_i) && inst.prefers(j, pi_i, pi_j) {
                return Ok(StabilityVerdict::Unstable(Witness::ExchangeBlockingPair(i, j)));
            }
        }
    }
    Ok(StabilityVerdict::Stable)
}

/// Stable and exchange-stable; the stability witness takes precedence.
pub fn is_doubly_stable(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<StabilityVerdict> {
    let v = is_stable(inst, pi)?;
    if !v.is_stable() {
        return Ok(v);
    }
    is_exchange_stable(inst, pi)
}

/// `𝓡(Π)`: sum over members of the rank of their predecessor.
pub fn rank_sum(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<usize> {
    check_sizes(inst, pi)?;
    Ok((0..inst.n()).map(|i| inst.rank(i, pi.pred(i))).sum())
}

/// Worst predecessor rank over all members.
pub fn max_predecessor_rank(inst: &PreferenceInstance, pi: &CyclicPartition) -> Result<usize> {
    check_sizes(inst, pi)?;
    Ok((0..inst.n()).map(|i| inst.rank(i, pi.pred(i))).max().unwrap_or(0))
}

/// Pairs `{i, j}`, not matched together in the perfect matching `m`, that
/// strictly prefer each other to their partners. Returned with `i < j`.
pub fn blocking_pairs(inst: &PreferenceInstance, m: &CyclicPartition) -> Result<Vec<(usize, usize)>> {
    check_sizes(inst, m)?;
    if !m.is_perfect_matching() {
        return Err(Error::invalid(format!("{m} is not a perfect matching")));
    }
    Ok(blocking_pairs_among(inst, m, |_| true))
}

/// Blocking pairs restricted to members accepted by `include`. Partners are
/// read from the successor map, so fixed points count as matched to
/// themselves (and thus block with anyone they rank above themselves).
pub(crate) fn blocking_pairs_among(
    inst: &PreferenceInstance,
    m: &CyclicPartition,
    include: impl Fn(usize) -> bool,
) -> Vec<(usize, usize)> {
    let n = inst.n();
    let mut out = Vec::new();
    for i in (0..n).filter(|&i| include(i)) {
        for j in (i + 1..n).filter(|&j| include(j)) {
            if m.succ(i) == j {
                continue;
            }
            if inst.prefers(i, j, m.succ(i)) && inst.prefers(j, i, m.succ(j)) {
                out.push((i, j));
            }
        }
    }
    out
}
