//! Roommates instances: complete strict preference lists over `n` members.
//!
//! Members are `0..n` internally; every text or JSON form uses 1-based
//! indices. Ranks are 1-based as well (`rank(i, pref(i)[0]) == 1`) and each
//! member ranks itself last, `rank(i, i) == n`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::CyclicPartition;
use crate::rng::stream_rng;

/// A complete roommates instance with cached inverse (rank) table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceInstance {
    n: usize,
    pref: Vec<Vec<usize>>,
    // row-major n x n, 1-based ranks, diagonal = n
    rank: Vec<u32>,
}

impl PreferenceInstance {
    /// Builds an instance from 0-based preference rows, validating that row
    /// `i` is a permutation of `[n] \ {i}`.
    pub fn new(pref: Vec<Vec<usize>>) -> Result<Self> {
        let n = pref.len();
        if n < 2 {
            return Err(Error::invalid(format!("an instance needs at least 2 members, got {n}")));
        }
        let mut rank = vec![0u32; n * n];
        for (i, row) in pref.iter().enumerate() {
            if row.len() != n - 1 {
                return Err(Error::invalid(format!(
                    "member {} lists {} others, expected {}",
                    i + 1,
                    row.len(),
                    n - 1
                )));
            }
            for (k, &j) in row.iter().enumerate() {
                if j >= n || j == i {
                    return Err(Error::invalid(format!(
                        "member {} lists invalid member {}",
                        i + 1,
                        j + 1
                    )));
                }
                if rank[i * n + j] != 0 {
                    return Err(Error::invalid(format!(
                        "member {} lists member {} twice",
                        i + 1,
                        j + 1
                    )));
                }
                rank[i * n + j] = (k + 1) as u32;
            }
            rank[i * n + i] = n as u32;
        }
        Ok(PreferenceInstance { n, pref, rank })
    }

    /// Same as [`PreferenceInstance::new`] but with 1-based rows.
    pub fn from_one_based(rows: &[Vec<usize>]) -> Result<Self> {
        let pref = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&j| {
                        j.checked_sub(1)
                            .ok_or_else(|| Error::invalid("member indices are 1-based"))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pref)
    }

    /// Uniformly random instance: every row an independent uniform
    /// permutation of the other members. Reads stream `(seed, 0)`.
    pub fn generate_uniform(n: usize, seed: u64) -> Result<Self> {
        Self::generate_with(n, &mut stream_rng(seed, 0))
    }

    pub fn generate_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("an instance needs at least 2 members, got {n}")));
        }
        let pref = (0..n)
            .map(|i| {
                let mut row: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                row.shuffle(rng);
                row
            })
            .collect();
        Self::new(pref)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Member `i`'s preference order, best first (0-based).
    pub fn pref(&self, i: usize) -> &[usize] {
        &self.pref[i]
    }

    /// `R_i(j)`: position of `j` in `i`'s list, 1-based; `rank(i, i) == n`.
    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.rank[i * self.n + j] as usize
    }

    /// True if `i` strictly prefers `a` to `b`.
    #[inline]
    pub fn prefers(&self, i: usize, a: usize, b: usize) -> bool {
        self.rank(i, a) < self.rank(i, b)
    }

    /// 1-based preference rows, the inverse of [`PreferenceInstance::from_one_based`].
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.pref
            .iter()
            .map(|row| row.iter().map(|&j| j + 1).collect())
            .collect()
    }

    /// Text form: `n` on the first line, then one line of 1-based indices
    /// per member.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.to_one_based() {
            let line: Vec<String> = row.iter().map(|j| j.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("first line must be the member count, got {header:?}")))?;
        let rows = lines
            .map(|line| {
                line.split_whitespace()
                    .map(|tok| {
                        tok.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("not a member index: {tok:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != n {
            return Err(Error::Parse(format!(
                "header says {n} members but {} preference lines follow",
                rows.len()
            )));
        }
        Self::from_one_based(&rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceJson {
            n: self.n,
            pref: self.to_one_based(),
        })
        .expect("instance serialises")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance JSON: {e}")))?;
        if raw.pref.len() != raw.n {
            return Err(Error::Parse(format!(
                "\"n\" is {} but \"pref\" has {} rows",
                raw.n,
                raw.pref.len()
            )));
        }
        Self::from_one_based(&raw.pref)
    }

    /// Accepts either the JSON or the text form.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_text(text)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    n: usize,
    pref: Vec<Vec<usize>>,
}

/// The i.i.d. uniform array `X[i][j]` whose row-wise sort induces a uniform
/// instance: `i` ranks `j` above `k` iff `X[i][j] < X[i][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    n: usize,
    // row-major, diagonal unused (0.0)
    x: Vec<f64>,
}

impl LatentMatrix {
    /// `rows[i]` holds `X[i][j]` for every `j`; the diagonal entry is ignored.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::invalid(format!("a latent matrix needs n >= 2, got {n}")));
        }
        let mut x = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("latent row {} has {} entries, expected {n}", i + 1, row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("latent entry ({}, {}) = {v} outside [0, 1]", i + 1, j + 1)));
                }
                x[i * n + j] = v;
            }
        }
        Ok(LatentMatrix { n, x })
    }

    /// I.i.d. uniform entries from stream `(seed, 0)`.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        Self::sample_with(n, &mut stream_rng(seed, 0))
    }

    /// Draws fresh entries for a row until it has no ties (a probability-zero
    /// event that the generator still guards against).
    pub fn sample_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("a latent matrix needs n >= 2, got {n}")));
        }
        let mut x = vec![0.0; n * n];
        let mut scratch = Vec::with_capacity(n);
        for i in 0..n {
            loop {
                for j in 0..n {
                    if j != i {
                        x[i * n + j] = rng.gen::<f64>();
                    }
                }
                scratch.clear();
                scratch.extend((0..n).filter(|&j| j != i).map(|j| x[i * n + j]));
                scratch.sort_by(f64::total_cmp);
                if scratch.windows(2).all(|w| w[0] < w[1]) {
                    break;
                }
            }
        }
        Ok(LatentMatrix { n, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n + j]
    }

    /// Applies `f` to every off-diagonal entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rows = (0..self.n)
            .map(|i| (0..self.n).map(|j| if i == j { 0.0 } else { f(self.get(i, j)) }).collect())
            .collect();
        Self::new(rows)
    }

    /// Sorts each row ascending. Ties are rejected, not broken.
    pub fn to_instance(&self) -> Result<PreferenceInstance> {
        let n = self.n;
        let mut pref = Vec::with_capacity(n);
        for i in 0..n {
            let mut row: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            row.sort_by(|&a, &b| self.get(i, a).total_cmp(&self.get(i, b)));
            if let Some(w) = row.windows(2).find(|w| self.get(i, w[0]) == self.get(i, w[1])) {
                return Err(Error::invalid(format!(
                    "tie in latent row {}: members {} and {}",
                    i + 1,
                    w[0] + 1,
                    w[1] + 1
                )));
            }
            pref.push(row);
        }
        PreferenceInstance::new(pref)
    }
}

/// True iff every member's predecessor under `partition` sits within their
/// top `cutoff` choices (self counts as rank `n`).
pub fn rank_profile_within(
    inst: &PreferenceInstance,
    partition: &CyclicPartition,
    cutoff: usize,
) -> Result<bool> {
    if partition.n() != inst.n() {
        return Err(Error::invalid(format!(
            "partition has {} members, instance has {}",
            partition.n(),
            inst.n()
        )));
    }
    Ok((0..inst.n()).all(|i| inst.rank(i, partition.pred(i)) <= cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::fixtures::classic_instance as classic;

    #[test]
    fn n2_has_a_single_instance() {
        for seed in 0..5 {
            let inst = PreferenceInstance::generate_uniform(2, seed).unwrap();
            assert_eq!(inst.to_one_based(), vec![vec![2], vec![1]]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = PreferenceInstance::generate_uniform(4, 42).unwrap();
        let b = PreferenceInstance::generate_uniform(4, 42).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(PreferenceInstance::generate_uniform(1, 0).is_err());
    }

    #[test]
    fn rank_inverts_pref() {
        let inst = PreferenceInstance::generate_uniform(9, 3).unwrap();
        for i in 0..9 {
            for (k, &j) in inst.pref(i).iter().enumerate() {
                assert_eq!(inst.rank(i, j), k + 1);
            }
            assert_eq!(inst.rank(i, i), 9);
        }
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(PreferenceInstance::from_one_based(&[vec![2], vec![2]]).is_err());
        assert!(PreferenceInstance::from_one_based(&[vec![2, 3], vec![1, 3], vec![1, 1]]).is_err());
        assert!(PreferenceInstance::from_one_based(&[vec![2, 3], vec![1, 3], vec![1]]).is_err());
        assert!(PreferenceInstance::parse_text("3\n2 3\n1 3\n").is_err());
        assert!(PreferenceInstance::parse_json(r#"{"n":2,"pref":[[2],[1]],"x":1}"#).is_err());
    }

    #[test]
    fn text_and_json_forms() {
        let inst = classic();
        assert_eq!(inst.to_text(), "4\n2 3 4\n3 1 4\n1 2 4\n1 2 3\n");
        assert_eq!(PreferenceInstance::parse(&inst.to_text()).unwrap(), inst);
        assert_eq!(PreferenceInstance::parse(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn latent_examples() {
        let lm = LatentMatrix::new(vec![vec![0.0, 0.3], vec![0.9, 0.0]]).unwrap();
        assert_eq!(lm.to_instance().unwrap().to_one_based(), vec![vec![2], vec![1]]);

        let lm = LatentMatrix::new(vec![
            vec![0.0, 0.7, 0.1, 0.4],
            vec![0.5, 0.0, 0.2, 0.3],
            vec![0.1, 0.2, 0.0, 0.3],
            vec![0.3, 0.2, 0.1, 0.0],
        ])
        .unwrap();
        assert_eq!(lm.to_instance().unwrap().pref(0), &[2, 3, 1]);
    }

    #[test]
    fn latent_rejects_ties_and_range() {
        let lm = LatentMatrix::new(vec![
            vec![0.0, 0.5, 0.5],
            vec![0.1, 0.0, 0.2],
            vec![0.1, 0.2, 0.0],
        ])
        .unwrap();
        assert!(matches!(lm.to_instance(), Err(Error::InvalidArgument(_))));
        assert!(LatentMatrix::new(vec![vec![0.0, 1.5], vec![0.2, 0.0]]).is_err());
    }

    #[test]
    fn latent_sampling_is_seeded() {
        let a = LatentMatrix::sample(2, 11).unwrap();
        let b = LatentMatrix::sample(2, 11).unwrap();
        let c = LatentMatrix::sample(2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.get(0, 1), c.get(0, 1));
        assert!((0.0..=1.0).contains(&a.get(0, 1)) && (0.0..=1.0).contains(&a.get(1, 0)));
    }

    #[test]
    fn rank_profile_examples() {
        let inst = classic();
        let pi = CyclicPartition::from_cycles(4, &[vec![0, 1, 2], vec![3]]).unwrap();
        assert!(rank_profile_within(&inst, &pi, 4).unwrap());
        assert!(!rank_profile_within(&inst, &pi, 1).unwrap());
        assert!(!rank_profile_within(&inst, &pi, 3).unwrap());
        let other = PreferenceInstance::generate_uniform(7, 5).unwrap();
        let id = CyclicPartition::from_succ((0..7).collect()).unwrap();
        assert!(rank_profile_within(&other, &id, 7).unwrap());
    }
}
