//! Polynomial-time construction of a stable partition.
//!
//! This is Irving's two-phase roommates procedure run on lists that end with
//! the member themselves. Each member `p` keeps a shrinking list; its head
//! `first(p)` is the member `p` currently proposes to and its tail
//! `last(p)` is the proposal `p` currently holds. Deletions are symmetric,
//! and the table invariant is `first(p) = q ⇔ last(q) = p`.
//!
//! Phase 1 is the usual proposal sequence. Phase 2 repeatedly exposes a
//! rotation `(x_i, y_i)` with `y_i = first(x_i)` and `y_{i+1} = second(x_i)`.
//! An ordinary rotation is eliminated by letting each `y_{i+1}` reject
//! everyone below `x_i`. A self-dual rotation cannot be eliminated; its
//! members form an odd party, so each `x_i` keeps exactly `y_i` and
//! `y_{i+1}`. When no list has more than two entries, `first` is a stable
//! permutation whose even cycles are then split into transpositions.

use crate::error::{Error, Result};
use crate::instance::PreferenceInstance;
use crate::partition::{blocking_pairs_among, CyclicPartition, ReduceChoice};

/// Work counters, for diagnostics only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseStats {
    pub proposals: u64,
    pub rotations: u64,
    pub odd_rotations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub partition: CyclicPartition,
    pub odd_party_count: usize,
    pub solvable: bool,
    pub phase_stats: PhaseStats,
}

struct Table<'a> {
    inst: &'a PreferenceInstance,
    n: usize,
    /// `alive[p * n + q]`: `q` is still on `p`'s list.
    alive: Vec<bool>,
    len: Vec<usize>,
    head: Vec<usize>,
    tail: Vec<usize>,
    stats: PhaseStats,
    deletions: u64,
}

impl<'a> Table<'a> {
    fn new(inst: &'a PreferenceInstance) -> Self {
        let n = inst.n();
        Table {
            inst,
            n,
            alive: vec![true; n * n],
            len: vec![n; n],
            head: vec![0; n],
            tail: vec![n - 1; n],
            stats: PhaseStats::default(),
            deletions: 0,
        }
    }

    /// Member at 0-based position `k` of `p`'s full list (self last).
    #[inline]
    fn at(&self, p: usize, k: usize) -> usize {
        if k + 1 == self.n {
            p
        } else {
            self.inst.pref(p)[k]
        }
    }

    #[inline]
    fn pos(&self, p: usize, q: usize) -> usize {
        self.inst.rank(p, q) - 1
    }

    #[inline]
    fn is_alive(&self, p: usize, q: usize) -> bool {
        self.alive[p * self.n + q]
    }

    fn first(&mut self, p: usize) -> usize {
        while !self.is_alive(p, self.at(p, self.head[p])) {
            self.head[p] += 1;
        }
        self.at(p, self.head[p])
    }

    fn last(&mut self, p: usize) -> usize {
        while !self.is_alive(p, self.at(p, self.tail[p])) {
            self.tail[p] -= 1;
        }
        self.at(p, self.tail[p])
    }

    fn second(&mut self, p: usize) -> Option<usize> {
        self.first(p);
        let mut k = self.head[p] + 1;
        while k < self.n {
            let q = self.at(p, k);
            if self.is_alive(p, q) {
                return Some(q);
            }
            k += 1;
        }
        None
    }

    fn delete(&mut self, p: usize, q: usize) {
        if !self.is_alive(p, q) {
            return;
        }
        self.alive[p * self.n + q] = false;
        self.len[p] -= 1;
        if p != q {
            self.alive[q * self.n + p] = false;
            self.len[q] -= 1;
        }
        self.deletions += 1;
    }

    /// `q` rejects everyone it ranks below `p`.
    fn truncate_after(&mut self, q: usize, p: usize) {
        let from = self.pos(q, p) + 1;
        for k in from..self.n {
            let r = self.at(q, k);
            self.delete(q, r);
        }
    }

    /// Phase 1, also used to restore the table invariant after each step.
    fn propagate(&mut self) {
        loop {
            let mut changed = false;
            for p in 0..self.n {
                if self.len[p] == 0 {
                    continue;
                }
                let q = self.first(p);
                if self.last(q) != p {
                    self.truncate_after(q, p);
                    self.stats.proposals += 1;
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Traces `p ↦ last(second(p))` from `start` and returns the cycle it
    /// enters, as `x_0, x_1, ...`.
    fn find_rotation(&mut self, start: usize) -> Option<Vec<usize>> {
        let mut seen_at = vec![usize::MAX; self.n];
        let mut path = Vec::new();
        let mut p = start;
        loop {
            if seen_at[p] != usize::MAX {
                return Some(path[seen_at[p]..].to_vec());
            }
            seen_at[p] = path.len();
            path.push(p);
            let q = self.second(p)?;
            p = self.last(q);
        }
    }

    fn phase_two(&mut self) -> Result<()> {
        loop {
            let Some(p0) = (0..self.n).find(|&p| self.len[p] >= 3) else {
                return Ok(());
            };
            let xs = self
                .find_rotation(p0)
                .ok_or_else(|| Error::invalid("solver reached a list with a single entry inside a rotation"))?;
            let ys: Vec<usize> = xs.iter().map(|&x| self.first(x)).collect();
            let r = xs.len();
            let mut pairs: Vec<(usize, usize)> = (0..r).map(|i| (xs[i], ys[i])).collect();
            let mut dual: Vec<(usize, usize)> = (0..r).map(|i| (ys[(i + 1) % r], xs[i])).collect();
            pairs.sort_unstable();
            dual.sort_unstable();
            let before = self.deletions;
            if pairs == dual {
                self.stats.odd_rotations += 1;
                for i in 0..r {
                    self.truncate_after(xs[i], ys[(i + 1) % r]);
                }
            } else {
                self.stats.rotations += 1;
                for i in 0..r {
                    self.truncate_after(ys[(i + 1) % r], xs[i]);
                }
            }
            self.propagate();
            if self.deletions == before {
                return Err(Error::invalid("solver made no progress on a rotation"));
            }
        }
    }
}

/// Runs the solver, returning a stable reduced partition.
pub fn tan_solve(inst: &PreferenceInstance) -> SolveResult {
    let mut table = Table::new(inst);
    table.propagate();
    table
        .phase_two()
        .expect("every roommates instance admits a stable partition");
    let succ: Vec<usize> = (0..inst.n()).map(|p| table.first(p)).collect();
    let pi = CyclicPartition::from_succ(succ).expect("table heads form a permutation");
    let partition = pi.reduce(|_| ReduceChoice::EvenStart);
    let odd_party_count = partition.odd_party_count();
    SolveResult {
        partition,
        odd_party_count,
        solvable: odd_party_count == 0,
        phase_stats: table.stats,
    }
}

/// The instance has a stable perfect matching.
pub fn is_solvable(inst: &PreferenceInstance) -> bool {
    tan_solve(inst).solvable
}

/// Matching left after removing one member from each odd party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMatching {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched: Vec<usize>,
}

impl PartialMatching {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Partner map with unmatched members mapped to themselves.
    pub fn as_partition(&self, n: usize) -> CyclicPartition {
        CyclicPartition::from_pairs(n, &self.pairs).expect("pairs are disjoint")
    }
}

fn matching_from(partition: &CyclicPartition) -> PartialMatching {
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for cycle in partition.cycles() {
        if cycle.len() == 2 {
            pairs.push((cycle[0], cycle[1]));
            continue;
        }
        for k in (0..cycle.len() - 1).step_by(2) {
            pairs.push((cycle[k], cycle[k + 1]));
        }
        unmatched.push(*cycle.last().expect("cycles are non-empty"));
    }
    pairs.sort_unstable();
    unmatched.sort_unstable();
    PartialMatching { pairs, unmatched }
}

/// A stable matching of maximum size `(n − 𝒪)/2`: 2-cycles are kept and
/// each odd party `(i1 ... ic)` contributes `(i1,i2), (i3,i4), ...`.
pub fn max_stable_matching(inst: &PreferenceInstance) -> PartialMatching {
    matching_from(&tan_solve(inst).partition)
}

/// Blocking pairs among matched members of a partial matching.
pub fn internal_blocking_pairs(inst: &PreferenceInstance, m: &PartialMatching) -> Vec<(usize, usize)> {
    let pi = m.as_partition(inst.n());
    blocking_pairs_among(inst, &pi, |i| pi.succ(i) != i)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicMatching {
    pub matching: CyclicPartition,
    pub blocking_count: usize,
}

/// Completes [`max_stable_matching`] to a perfect matching by pairing the
/// leftover members in increasing index order.
pub fn complete_matching_heuristic(inst: &PreferenceInstance) -> Result<HeuristicMatching> {
    if inst.n() % 2 == 1 {
        return Err(Error::invalid(format!("n = {} is odd; no perfect matching exists", inst.n())));
    }
    Ok(complete_from(inst, &max_stable_matching(inst)))
}

pub(crate) fn complete_from(inst: &PreferenceInstance, partial: &PartialMatching) -> HeuristicMatching {
    let mut pairs = partial.pairs.clone();
    for chunk in partial.unmatched.chunks(2) {
        pairs.push((chunk[0], chunk[1]));
    }
    let matching = CyclicPartition::from_pairs(inst.n(), &pairs).expect("pairs are disjoint");
    let blocking_count = blocking_pairs_among(inst, &matching, |_| true).len();
    HeuristicMatching {
        matching,
        blocking_count,
    }
}

/// Everything derived from one solve, computed once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub result: SolveResult,
    pub max_matching: PartialMatching,
    pub heuristic: Option<HeuristicMatching>,
}

pub fn solve_report(inst: &PreferenceInstance) -> SolveReport {
    let result = tan_solve(inst);
    let max_matching = matching_from(&result.partition);
    let heuristic = (inst.n() % 2 == 0).then(|| complete_from(inst, &max_matching));
    SolveReport {
        result,
        max_matching,
        heuristic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_stable_matchings, enumerate_stable_partitions, DEFAULT_CAP};
    use crate::fixtures::classic_instance;
    use crate::partition::is_stable;

    #[test]
    fn n2() {
        let inst = PreferenceInstance::from_one_based(&[vec![2], vec![1]]).unwrap();
        let r = tan_solve(&inst);
        assert_eq!(r.partition.to_string(), "(1 2)");
        assert!(r.solvable && is_solvable(&inst));
        assert_eq!(max_stable_matching(&inst).size(), 1);
    }

    #[test]
    fn classic() {
        let inst = classic_instance();
        let r = tan_solve(&inst);
        assert_eq!(r.partition.to_string(), "(1 2 3)(4)");
        assert_eq!(r.odd_party_count, 2);
        assert!(!r.solvable);
        let m = max_stable_matching(&inst);
        assert_eq!(m.size(), 1);
        assert!(internal_blocking_pairs(&inst, &m).is_empty());
        let h = complete_matching_heuristic(&inst).unwrap();
        assert!(h.matching.is_perfect_matching());
        assert!(h.blocking_count >= 1);
    }

    #[test]
    fn odd_n_is_refused_by_heuristic() {
        let inst = PreferenceInstance::generate_uniform(5, 3).unwrap();
        assert!(complete_matching_heuristic(&inst).is_err());
        assert!(is_stable(&inst, &tan_solve(&inst).partition).unwrap().is_stable());
    }

    #[test]
    fn agrees_with_enumeration() {
        for n in 2..=8 {
            for seed in 0..300 {
                let inst = PreferenceInstance::generate_uniform(n, seed).unwrap();
                let r = tan_solve(&inst);
                assert!(is_stable(&inst, &r.partition).unwrap().is_stable(), "n={n} seed={seed}");
                assert!(r.partition.is_reduced());
                let all = enumerate_stable_partitions(&inst, true, DEFAULT_CAP).unwrap();
                assert!(all.contains(&r.partition), "n={n} seed={seed}");
                for pi in &all {
                    assert_eq!(pi.odd_parties(), r.partition.odd_parties(), "n={n} seed={seed}");
                }
                if n % 2 == 0 {
                    let sm = enumerate_stable_matchings(&inst, DEFAULT_CAP).unwrap();
                    assert_eq!(r.solvable, !sm.is_empty(), "n={n} seed={seed}");
                    let h = complete_matching_heuristic(&inst).unwrap();
                    assert_eq!(h.blocking_count == 0, r.solvable, "n={n} seed={seed}");
                }
                let m = max_stable_matching(&inst);
                assert_eq!(2 * m.size(), n - r.odd_party_count);
                assert!(internal_blocking_pairs(&inst, &m).is_empty());
            }
        }
    }
}
