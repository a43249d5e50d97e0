//! Brute-force enumeration of reduced cyclic partitions.
//!
//! Candidates are permutations whose cycles are transpositions or odd
//! cycles of length at least 3, plus optionally one fixed point. They are
//! assembled cycle by cycle, always starting the next cycle at the smallest
//! unplaced member, so each permutation is produced exactly once.
//!
//! When filtering for stability the checks run as soon as a cycle closes:
//! the ordering condition on the new cycle, then blocking pairs between the
//! new members and everyone already placed. Every pair is examined once its
//! second member is placed, so a completed candidate is stable iff it
//! survived all the partial checks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{binomial, double_factorial, f_odd};
use crate::instance::PreferenceInstance;
use crate::partition::CyclicPartition;

/// Default cap on `n` for enumeration.
pub const DEFAULT_CAP: usize = 10;
/// Largest cap accepted, and only when asked for explicitly.
pub const EXTENDED_CAP: usize = 12;

/// Multiset of cycle lengths describing a reduced partition up to labels.
///
/// Lengths are 2 or odd and at least 3, kept sorted in decreasing order.
/// A fixed point is tracked separately.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeSpec {
    lengths: Vec<usize>,
    fixed_point: bool,
}

impl ShapeSpec {
    pub fn new(mut lengths: Vec<usize>, fixed_point: bool) -> Result<Self> {
        if let Some(&bad) = lengths.iter().find(|&&l| l != 2 && (l < 3 || l % 2 == 0)) {
            return Err(Error::invalid(format!(
                "cycle length {bad} is not allowed; use 2 or an odd length >= 3 (and \"+fp\" for a fixed point)"
            )));
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        let shape = ShapeSpec { lengths, fixed_point };
        if shape.n() == 0 {
            return Err(Error::invalid("a shape needs at least one member"));
        }
        Ok(shape)
    }

    /// Shape of a reduced partition.
    pub fn of(pi: &CyclicPartition) -> Result<Self> {
        let fps = pi.fixed_points().len();
        if fps > 1 {
            return Err(Error::invalid(format!("{pi} has {fps} fixed points; at most one is allowed")));
        }
        if !pi.is_reduced() {
            return Err(Error::invalid(format!("{pi} is not reduced")));
        }
        let lengths = pi.cycles().iter().map(Vec::len).filter(|&l| l > 1).collect();
        Self::new(lengths, fps == 1)
    }

    /// Perfect matching on `n` members.
    pub fn matching(n: usize) -> Result<Self> {
        if n < 2 || n % 2 == 1 {
            return Err(Error::invalid(format!("a perfect matching needs an even n >= 2, got {n}")));
        }
        Self::new(vec![2; n / 2], false)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn has_fixed_point(&self) -> bool {
        self.fixed_point
    }

    pub fn n(&self) -> usize {
        self.lengths.iter().sum::<usize>() + usize::from(self.fixed_point)
    }

    /// `m`: members on odd cycles of length >= 3.
    pub fn m(&self) -> usize {
        self.lengths.iter().filter(|&&l| l % 2 == 1).sum()
    }

    /// Canonical representative: cycles on consecutive blocks of members in
    /// the stored order, fixed point last.
    pub fn representative(&self) -> CyclicPartition {
        let mut next = 0;
        let mut cycles = Vec::new();
        for &l in &self.lengths {
            cycles.push((next..next + l).collect());
            next += l;
        }
        CyclicPartition::from_cycles(self.n(), &cycles).expect("blocks are disjoint")
    }

    /// Number of labelled partitions with this shape,
    /// `n! / ∏ L^{c_L} c_L!` over cycle lengths `L` with multiplicity `c_L`.
    pub fn labelled_count(&self) -> BigUint {
        let mut denom = BigUint::one();
        let mut k = 0;
        while k < self.lengths.len() {
            let l = self.lengths[k];
            let mult = self.lengths[k..].iter().take_while(|&&x| x == l).count();
            for c in 1..=mult {
                denom *= BigUint::from(l) * BigUint::from(c);
            }
            k += mult;
        }
        factorial(self.n()) / denom
    }

    /// All shapes on `n` members, ordered by `m`, then fixed point, then
    /// lengths.
    pub fn all(n: usize, allow_fixed_point: bool) -> Vec<ShapeSpec> {
        let mut out = Vec::new();
        for fp in [false, true] {
            if fp && !allow_fixed_point || n < usize::from(fp) {
                continue;
            }
            let mut parts = Vec::new();
            partitions_into(n - usize::from(fp), n, &mut parts, &mut |lengths| {
                if let Ok(s) = ShapeSpec::new(lengths.to_vec(), fp) {
                    out.push(s);
                }
            });
        }
        out.sort_by(|a, b| (a.m(), a.fixed_point, &a.lengths).cmp(&(b.m(), b.fixed_point, &b.lengths)));
        out
    }
}

fn partitions_into(left: usize, max: usize, parts: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if left == 0 {
        emit(parts);
        return;
    }
    for l in (2..=max.min(left)).rev() {
        if l != 2 && l % 2 == 0 {
            continue;
        }
        parts.push(l);
        partitions_into(left - l, l, parts, emit);
        parts.pop();
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

impl fmt::Display for ShapeSpec {
    /// `"2,2"`, `"3+fp"`; a lone fixed point prints as `"+fp"`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.lengths.iter().map(ToString::to_string).collect();
        write!(f, "{}", body.join(","))?;
        if self.fixed_point {
            write!(f, "+fp")?;
        }
        Ok(())
    }
}

impl FromStr for ShapeSpec {
    type Err = Error;

    /// Comma-separated cycle lengths with an optional trailing `+fp`.
    /// A length of 1 is accepted as an alternative spelling of `+fp`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, mut fp) = match s.strip_suffix("+fp") {
            Some(rest) => (rest.trim(), true),
            None => (s, false),
        };
        let mut lengths = Vec::new();
        if !body.is_empty() {
            for tok in body.split(',') {
                let l: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad cycle length {tok:?} in shape {s:?}")))?;
                if l == 1 {
                    if fp {
                        return Err(Error::invalid(format!("shape {s:?} has more than one fixed point")));
                    }
                    fp = true;
                } else {
                    lengths.push(l);
                }
            }
        }
        ShapeSpec::new(lengths, fp)
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if cap > EXTENDED_CAP {
        return Err(Error::invalid(format!("enumeration cap {cap} is above the hard limit {EXTENDED_CAP}")));
    }
    if n > cap {
        return Err(Error::CapExceeded {
            what: "member count for enumeration",
            actual: n,
            cap,
        });
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Mode {
    odd_cycles: bool,
    fixed_point: bool,
    /// Even cycles longer than 2 as well.
    long_even: bool,
}

struct Search<'a, F> {
    n: usize,
    mode: Mode,
    filter: Option<&'a PreferenceInstance>,
    succ: Vec<usize>,
    pred: Vec<usize>,
    free: u64,
    placed: Vec<bool>,
    fp_used: bool,
    cycle: Vec<usize>,
    visit: F,
}

impl<F: FnMut(&[usize])> Search<'_, F> {
    fn run(&mut self) {
        if self.free == 0 {
            (self.visit)(&self.succ);
            return;
        }
        let a = self.free.trailing_zeros() as usize;
        self.free &= !(1 << a);
        if self.mode.fixed_point && !self.fp_used {
            self.fp_used = true;
            self.cycle.push(a);
            self.close(a, a);
            self.cycle.pop();
            self.fp_used = false;
        }
        let left = self.free.count_ones() as usize + 1;
        let mut len = 2;
        while len <= left {
            self.cycle.push(a);
            self.extend(a, a, len - 1);
            self.cycle.pop();
            if !self.mode.odd_cycles {
                break;
            }
            len = if self.mode.long_even || len == 2 { len + 1 } else { len + 2 };
        }
        self.free |= 1 << a;
    }

    fn extend(&mut self, start: usize, last: usize, left: usize) {
        if left == 0 {
            self.close(start, last);
            return;
        }
        let mut rest = self.free;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            self.free &= !(1 << b);
            self.succ[last] = b;
            self.pred[b] = last;
            self.cycle.push(b);
            self.extend(start, b, left - 1);
            self.cycle.pop();
            self.free |= 1 << b;
        }
    }

    fn close(&mut self, start: usize, last: usize) {
        self.succ[last] = start;
        self.pred[start] = last;
        for k in 0..self.cycle.len() {
            self.placed[self.cycle[k]] = true;
        }
        if self.cycle_is_consistent() {
            self.run();
        }
        for k in 0..self.cycle.len() {
            self.placed[self.cycle[k]] = false;
        }
    }

    fn cycle_is_consistent(&self) -> bool {
        let Some(inst) = self.filter else {
            return true;
        };
        let (succ, pred) = (&self.succ, &self.pred);
        if self.cycle.len() >= 3 && self.cycle.iter().any(|&i| inst.rank(i, succ[i]) > inst.rank(i, pred[i])) {
            return false;
        }
        for &i in &self.cycle {
            let ri = inst.rank(i, pred[i]);
            for &j in &inst.pref(i)[..ri - 1] {
                if !self.placed[j] || succ[i] == j || succ[j] == i {
                    continue;
                }
                if inst.rank(j, i) < inst.rank(j, pred[j]) {
                    return false;
                }
            }
        }
        true
    }
}

fn search(n: usize, mode: Mode, filter: Option<&PreferenceInstance>, visit: impl FnMut(&[usize])) {
    debug_assert!(n < 64);
    let mut s = Search {
        n,
        mode,
        filter,
        succ: vec![usize::MAX; n],
        pred: vec![usize::MAX; n],
        free: if n == 0 { 0 } else { u64::MAX >> (64 - n) },
        placed: vec![false; n],
        fp_used: false,
        cycle: Vec::with_capacity(n),
        visit,
    };
    s.run();
    debug_assert_eq!(s.succ.len(), s.n);
}

/// Streams every reduced candidate partition of `[n]` to `visit` as a
/// 0-based successor map.
pub fn enumerate_candidates(n: usize, allow_fixed_point: bool, cap: usize, visit: impl FnMut(&[usize])) -> Result<()> {
    check_cap(n, cap)?;
    let mode = Mode {
        odd_cycles: true,
        fixed_point: allow_fixed_point,
        long_even: false,
    };
    search(n, mode, None, visit);
    Ok(())
}

fn sort_partitions(list: &mut [CyclicPartition]) {
    list.sort_by(|a, b| {
        (a.odd_size(), a.has_fixed_point(), a.cycles()).cmp(&(b.odd_size(), b.has_fixed_point(), b.cycles()))
    });
}

fn collect(inst: &PreferenceInstance, mode: Mode, cap: usize) -> Result<Vec<CyclicPartition>> {
    check_cap(inst.n(), cap)?;
    let mut out = Vec::new();
    search(inst.n(), mode, Some(inst), |succ| {
        out.push(CyclicPartition::from_succ(succ.to_vec()).expect("search yields permutations"));
    });
    sort_partitions(&mut out);
    Ok(out)
}

/// All stable reduced partitions, sorted by `m`, then fixed point, then
/// cycle lists.
pub fn enumerate_stable_partitions(
    inst: &PreferenceInstance,
    allow_fixed_point: bool,
    cap: usize,
) -> Result<Vec<CyclicPartition>> {
    let mode = Mode {
        odd_cycles: true,
        fixed_point: allow_fixed_point,
        long_even: false,
    };
    collect(inst, mode, cap)
}

/// All stable partitions, reduced or not, including those with a fixed
/// point.
pub fn enumerate_all_stable_partitions(inst: &PreferenceInstance, cap: usize) -> Result<Vec<CyclicPartition>> {
    let mode = Mode {
        odd_cycles: true,
        fixed_point: true,
        long_even: true,
    };
    collect(inst, mode, cap)
}

/// All stable perfect matchings.
pub fn enumerate_stable_matchings(inst: &PreferenceInstance, cap: usize) -> Result<Vec<CyclicPartition>> {
    if inst.n() % 2 == 1 {
        return Err(Error::invalid(format!("n = {} is odd; no perfect matching exists", inst.n())));
    }
    let mode = Mode {
        odd_cycles: false,
        fixed_point: false,
        long_even: false,
    };
    collect(inst, mode, cap)
}

/// Fixed-point-free reduced partitions of `[n]` with `m` members on odd
/// cycles: `C(n,m) f(m) (n−m−1)!!`. For even `n` this forces `m` even.
pub fn count_shapes(n: usize, m: usize) -> Result<BigUint> {
    if m > n || (n - m) % 2 == 1 {
        return Err(Error::invalid(format!("count_shapes needs m <= n with n-m even, got n={n}, m={m}")));
    }
    Ok(binomial(n, m) * f_odd(m) * double_factorial(n as i64 - m as i64 - 1)?)
}

/// Reduced partitions of `[n]` with exactly one fixed point and `m` further
/// members on odd cycles: `n C(n−1,m) f(m) (n−m−2)!!`.
pub fn count_shapes_with_fixed_point(n: usize, m: usize) -> Result<BigUint> {
    if n == 0 || m > n - 1 || (n - 1 - m) % 2 == 1 {
        return Err(Error::invalid(format!(
            "count_shapes_with_fixed_point needs m <= n-1 with n-1-m even, got n={n}, m={m}"
        )));
    }
    Ok(BigUint::from(n) * binomial(n - 1, m) * f_odd(m) * double_factorial(n as i64 - m as i64 - 2)?)
}

/// Total candidate count `Σ_m count_shapes(n, m)`, plus the fixed-point
/// shapes when allowed.
pub fn total_candidates(n: usize, allow_fixed_point: bool) -> BigUint {
    let mut total = BigUint::zero();
    for m in 0..=n {
        if (n - m) % 2 == 0 {
            total += count_shapes(n, m).expect("parity checked");
        }
        if allow_fixed_point && m < n && (n - 1 - m) % 2 == 0 {
            total += count_shapes_with_fixed_point(n, m).expect("parity checked");
        }
    }
    total
}

/// Members with at least two distinct predecessors across the stable,
/// reduced, fixed-point-free partitions of `inst`.
pub fn multiple_predecessor_members(inst: &PreferenceInstance, cap: usize) -> Result<BTreeSet<usize>> {
    let stable = enumerate_stable_partitions(inst, false, cap)?;
    Ok(multiple_predecessors_of(inst.n(), &stable))
}

pub(crate) fn multiple_predecessors_of(n: usize, partitions: &[CyclicPartition]) -> BTreeSet<usize> {
    (0..n)
        .filter(|&i| {
            let first = partitions.first().map(|p| p.pred(i));
            partitions.iter().any(|p| Some(p.pred(i)) != first)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::classic_instance;

    fn candidates(n: usize, fp: bool) -> usize {
        let mut count = 0;
        enumerate_candidates(n, fp, DEFAULT_CAP, |_| count += 1).unwrap();
        count
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(candidates(2, false), 1);
        assert_eq!(candidates(4, false), 3);
        assert_eq!(candidates(8, false), 3913);
        for n in [2, 4, 6, 8] {
            assert_eq!(BigUint::from(candidates(n, false)), total_candidates(n, false), "n={n}");
            assert_eq!(BigUint::from(candidates(n, true)), total_candidates(n, true), "n={n}");
        }
        // n=4 with a fixed point: 3 matchings and 8 (3-cycle, fixed point) shapes.
        assert_eq!(candidates(4, true), 11);
    }

    #[test]
    fn candidates_are_distinct_and_reduced() {
        let mut seen = std::collections::HashSet::new();
        enumerate_candidates(7, true, DEFAULT_CAP, |succ| {
            let pi = CyclicPartition::from_succ(succ.to_vec()).unwrap();
            assert!(pi.is_reduced());
            assert!(pi.fixed_points().len() <= 1);
            assert!(seen.insert(succ.to_vec()));
        })
        .unwrap();
        assert_eq!(BigUint::from(seen.len()), total_candidates(7, true));
    }

    #[test]
    fn cap_is_enforced() {
        let inst = PreferenceInstance::generate_uniform(11, 1).unwrap();
        assert!(matches!(
            enumerate_stable_partitions(&inst, false, DEFAULT_CAP),
            Err(Error::CapExceeded { .. })
        ));
        assert!(enumerate_stable_partitions(&inst, false, 13).is_err());
    }

    #[test]
    fn classic_examples() {
        let inst = classic_instance();
        let with_fp = enumerate_stable_partitions(&inst, true, DEFAULT_CAP).unwrap();
        assert_eq!(with_fp.len(), 1);
        assert_eq!(with_fp[0].to_string(), "(1 2 3)(4)");
        assert!(enumerate_stable_partitions(&inst, false, DEFAULT_CAP).unwrap().is_empty());
        assert!(enumerate_stable_matchings(&inst, DEFAULT_CAP).unwrap().is_empty());
        assert!(multiple_predecessor_members(&inst, DEFAULT_CAP).unwrap().is_empty());

        let n2 = PreferenceInstance::from_one_based(&[vec![2], vec![1]]).unwrap();
        assert_eq!(enumerate_stable_partitions(&n2, false, DEFAULT_CAP).unwrap().len(), 1);
        assert_eq!(enumerate_stable_matchings(&n2, DEFAULT_CAP).unwrap().len(), 1);
    }

    #[test]
    fn count_shape_examples() {
        assert_eq!(count_shapes(4, 0).unwrap(), BigUint::from(3u32));
        assert_eq!(count_shapes(8, 6).unwrap(), BigUint::from(1120u32));
        assert_eq!(count_shapes(2, 0).unwrap(), BigUint::one());
        assert_eq!(count_shapes_with_fixed_point(4, 3).unwrap(), BigUint::from(8u32));
        assert_eq!(count_shapes_with_fixed_point(5, 0).unwrap(), BigUint::from(15u32));
        assert!(count_shapes_with_fixed_point(4, 2).is_err());
        assert!(count_shapes(5, 2).is_err());
        assert!(count_shapes(4, 3).is_err());
    }

    #[test]
    fn shape_grammar() {
        let s: ShapeSpec = "2,2".parse().unwrap();
        assert_eq!((s.n(), s.m(), s.has_fixed_point()), (4, 0, false));
        let s: ShapeSpec = "3+fp".parse().unwrap();
        assert_eq!((s.n(), s.m(), s.to_string()), (4, 3, "3+fp".to_string()));
        assert_eq!("3,1".parse::<ShapeSpec>().unwrap(), s);
        assert_eq!("2, 3 ,5".parse::<ShapeSpec>().unwrap().to_string(), "5,3,2");
        for bad in ["4", "2,x", "", "1,1", "1+fp"] {
            assert!(bad.parse::<ShapeSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn labelled_counts_sum_to_shape_totals() {
        for n in 2..=10 {
            for fp in [false, true] {
                let sum: BigUint = ShapeSpec::all(n, fp).iter().map(ShapeSpec::labelled_count).sum();
                assert_eq!(sum, total_candidates(n, fp), "n={n} fp={fp}");
            }
        }
        let s: ShapeSpec = "3+fp".parse().unwrap();
        assert_eq!(s.labelled_count(), BigUint::from(8u32));
        assert_eq!(ShapeSpec::of(&s.representative()).unwrap(), s);
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..n {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn all_stable_partitions_match_permutation_scan() {
        for n in 2..=6 {
            for seed in 0..40 {
                let inst = PreferenceInstance::generate_uniform(n, seed).unwrap();
                let mut scan: Vec<CyclicPartition> = permutations(n)
                    .into_iter()
                    .map(|succ| CyclicPartition::from_succ(succ).unwrap())
                    .filter(|p| crate::partition::is_stable(&inst, p).unwrap().is_stable())
                    .collect();
                sort_partitions(&mut scan);
                assert_eq!(enumerate_all_stable_partitions(&inst, DEFAULT_CAP).unwrap(), scan, "n={n} seed={seed}");
            }
        }
    }
}
