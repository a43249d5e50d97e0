//! Seeded Monte Carlo estimators and experiment drivers.
//!
//! Sample-based estimators split their budget into fixed chunks of
//! [`CHUNK`] samples; chunk `c` draws from stream `(seed, c)` and keeps
//! Welford moments, and the chunk moments are merged in a fixed pairwise
//! tree. Trial-based experiments read instance `t` from stream `(seed, t)`.
//! Either way the output does not depend on how many threads ran the work.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::enumerate::{
    enumerate_all_stable_partitions, enumerate_stable_matchings, enumerate_stable_partitions, multiple_predecessors_of,
};
use crate::error::{Error, Result};
use crate::exact::Integrand;
use crate::instance::{LatentMatrix, PreferenceInstance};
use crate::partition::{is_stable, max_predecessor_rank, rank_sum, CyclicPartition, ReduceChoice};
use crate::rng::{stream_rng, StreamRng};
use crate::solver::{internal_blocking_pairs, solve_report};

/// Samples per chunk.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub label: String,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EstimateResult {
    fn from_moments(label: impl Into<String>, m: &Moments, seed: u64) -> Self {
        EstimateResult {
            label: label.into(),
            mean: m.mean,
            std_error: m.std_error(),
            n_samples: m.count,
            seed,
            note: None,
        }
    }

    fn exact(label: impl Into<String>, value: f64, n_samples: u64, seed: u64, note: &str) -> Self {
        EstimateResult {
            label: label.into(),
            mean: value,
            std_error: 0.0,
            n_samples,
            seed,
            note: Some(note.to_string()),
        }
    }

    /// `|mean − target| ≤ k · std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(a: &Moments, b: &Moments) -> Moments {
        if a.count == 0 {
            return *b;
        }
        if b.count == 0 {
            return *a;
        }
        let count = a.count + b.count;
        let d = b.mean - a.mean;
        let (na, nb, n) = (a.count as f64, b.count as f64, count as f64);
        Moments {
            count,
            mean: a.mean + d * nb / n,
            m2: a.m2 + b.m2 + d * d * na * nb / n,
        }
    }

    /// Merges in a balanced tree over the given order.
    pub fn merge_tree(parts: &[Moments]) -> Moments {
        match parts.len() {
            0 => Moments::default(),
            1 => parts[0],
            len => {
                let (l, r) = parts.split_at(len / 2);
                Moments::merge(&Moments::merge_tree(l), &Moments::merge_tree(r))
            }
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn of(values: impl IntoIterator<Item = f64>) -> Moments {
        let mut m = Moments::default();
        for v in values {
            m.push(v);
        }
        m
    }
}

/// Smallest accepted sample budget.
pub const MIN_SAMPLES: u64 = 1000;

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    Ok(())
}

/// Runs `sample` `n_samples` times over chunked streams and aggregates.
fn run_chunked(n_samples: u64, seed: u64, sample: impl Fn(&mut StreamRng) -> f64 + Sync) -> Moments {
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let size = CHUNK.min(n_samples - c * CHUNK);
            let mut m = Moments::default();
            for _ in 0..size {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect();
    Moments::merge_tree(&parts)
}

/// Proposal density for the integrand estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    Uniform,
    /// `β e^{−βx} / (1 − e^{−β})` on `[0, 1]`.
    Exponential { beta: f64 },
}

impl Proposal {
    /// Exponential with `β = √(n + m)`.
    pub fn default_for(pi: &CyclicPartition) -> Proposal {
        Proposal::Exponential {
            beta: ((pi.n() + pi.odd_size()) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Proposal::Uniform => Ok(()),
            Proposal::Exponential { beta } if beta.is_finite() && beta > 0.0 => Ok(()),
            Proposal::Exponential { beta } => {
                Err(Error::invalid(format!("exponential proposal needs a finite beta > 0, got {beta}")))
            }
        }
    }

    /// Draws `x` and returns it with `1 / g(x)`.
    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> (f64, f64) {
        let u: f64 = rng.gen();
        match *self {
            Proposal::Uniform => (u, 1.0),
            Proposal::Exponential { beta } => {
                let mass = -(-beta).exp_m1();
                let x = (-(-u * mass).ln_1p() / beta).min(1.0);
                (x, mass / (beta * (-beta * x).exp()))
            }
        }
    }
}

impl Integrand {
    /// `∏ x^a (1−x)^b ∏ (1 − x_i x_j)` in floating point.
    pub(crate) fn eval_stability(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (k, &(a, b)) in self.base.iter().enumerate() {
            v *= x[k].powi(a as i32) * (1.0 - x[k]).powi(b as i32);
        }
        for &(i, j) in &self.pairs {
            v *= 1.0 - x[i] * x[j];
        }
        v
    }
}

/// Importance-sampling estimate of `P(Π stable)` from the integral form.
pub fn mc_stability_probability(
    pi: &CyclicPartition,
    n_samples: u64,
    seed: u64,
    proposal: Proposal,
) -> Result<EstimateResult> {
    check_samples(n_samples)?;
    proposal.validate()?;
    if !pi.is_reduced() {
        return Err(Error::invalid(format!("{pi} is not reduced")));
    }
    let integrand = Integrand::stability(pi)?;
    let dim = integrand.vars();
    let m = run_chunked(n_samples, seed, |rng| {
        let mut x = vec![0.0; dim];
        let mut w = 1.0;
        for xi in x.iter_mut() {
            let (v, inv_g) = proposal.draw(rng);
            *xi = v;
            w *= inv_g;
        }
        integrand.eval_stability(&x) * w
    });
    Ok(EstimateResult::from_moments(format!("P({pi} stable)"), &m, seed))
}

/// Frequency of `Π` being stable on latent-matrix instances.
pub fn latent_stability_frequency(pi: &CyclicPartition, n_samples: u64, seed: u64) -> Result<EstimateResult> {
    check_samples(n_samples)?;
    let n = pi.n();
    if n < 2 {
        return Err(Error::invalid("need at least 2 members"));
    }
    let m = run_chunked(n_samples, seed, |rng| {
        let inst = latent_instance(n, rng);
        f64::from(u8::from(is_stable(&inst, pi).expect("sizes match").is_stable()))
    });
    Ok(EstimateResult::from_moments(format!("freq({pi} stable)"), &m, seed))
}

fn latent_instance(n: usize, rng: &mut StreamRng) -> PreferenceInstance {
    LatentMatrix::sample_with(n, rng)
        .and_then(|lm| lm.to_instance())
        .expect("sampled rows are tie-free")
}

/// Latent-matrix estimate of `E[z^{𝓡(Π)} χ(Π stable)]`.
pub fn mc_rank_gf_point(pi: &CyclicPartition, z: f64, n_samples: u64, seed: u64) -> Result<EstimateResult> {
    check_samples(n_samples)?;
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::invalid(format!("z must lie in (0, 1], got {z}")));
    }
    let n = pi.n();
    let m = run_chunked(n_samples, seed, |rng| {
        let inst = latent_instance(n, rng);
        if is_stable(&inst, pi).expect("sizes match").is_stable() {
            z.powi(rank_sum(&inst, pi).expect("sizes match") as i32)
        } else {
            0.0
        }
    });
    Ok(EstimateResult::from_moments(format!("E[z^R; {pi} stable] at z={z}"), &m, seed))
}

/// Alternating circuits of two reduced partitions with the same odd
/// parties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitStructure {
    pub common_pairs: Vec<(usize, usize)>,
    /// Each circuit starts at its smallest member and leaves it along the
    /// first partition's edge.
    pub circuits: Vec<Vec<usize>>,
    /// Members at even positions of each circuit.
    pub a: Vec<usize>,
    /// Members at odd positions of each circuit.
    pub b: Vec<usize>,
}

impl CircuitStructure {
    /// `None` when the odd parties differ.
    pub fn new(p1: &CyclicPartition, p2: &CyclicPartition) -> Result<Option<Self>> {
        for p in [p1, p2] {
            if !p.is_reduced() || p.has_fixed_point() {
                return Err(Error::invalid(format!("{p} must be reduced and fixed-point-free")));
            }
        }
        if p1.n() != p2.n() {
            return Err(Error::invalid("partitions have different sizes"));
        }
        if p1.odd_parties() != p2.odd_parties() {
            return Ok(None);
        }
        let n = p1.n();
        let even: Vec<usize> = (0..n).filter(|&i| p1.succ(p1.succ(i)) == i).collect();
        let mut seen = vec![false; n];
        let mut common_pairs = Vec::new();
        let mut circuits = Vec::new();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for &start in &even {
            if seen[start] {
                continue;
            }
            if p1.succ(start) == p2.succ(start) {
                seen[start] = true;
                seen[p1.succ(start)] = true;
                common_pairs.push((start, p1.succ(start)));
                continue;
            }
            let mut circuit = Vec::new();
            let mut v = start;
            loop {
                seen[v] = true;
                circuit.push(v);
                let next = if circuit.len() % 2 == 1 { p1.succ(v) } else { p2.succ(v) };
                if next == start {
                    break;
                }
                v = next;
            }
            for (k, &v) in circuit.iter().enumerate() {
                if k % 2 == 0 {
                    a.push(v);
                } else {
                    b.push(v);
                }
            }
            circuits.push(circuit);
        }
        a.sort_unstable();
        b.sort_unstable();
        Ok(Some(CircuitStructure {
            common_pairs,
            circuits,
            a,
            b,
        }))
    }

    /// `μ`.
    pub fn mu(&self) -> usize {
        self.circuits.len()
    }

    /// `ν`: half the total circuit length.
    pub fn nu(&self) -> usize {
        self.circuits.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Pairs adjacent in neither partition.
fn pairs_outside(p1: &CyclicPartition, p2: &CyclicPartition) -> Vec<(usize, usize)> {
    let n = p1.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !p1.adjacent(i, j) && !p2.adjacent(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

#[inline]
fn pair_bracket(x: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
    1.0 - x[i] * x[j] - y[i] * y[j] + x[i].min(y[i]) * x[j].min(y[j])
}

/// Estimate of `P(Π₁ and Π₂ both stable)` from the two-partition integral.
///
/// On each circuit the signs of `y_i − x_i` alternate, in one of two
/// patterns, and all `2^μ` pattern choices contribute equally. The estimator
/// takes `y > x` on `A` and `y < x` on `B` and multiplies by `2^μ`.
pub fn mc_pair_probability(p1: &CyclicPartition, p2: &CyclicPartition, n_samples: u64, seed: u64) -> Result<EstimateResult> {
    check_samples(n_samples)?;
    if p1 == p2 {
        return Err(Error::invalid("the two partitions must differ"));
    }
    let label = format!("P({p1} and {p2} stable)");
    let Some(cs) = CircuitStructure::new(p1, p2)? else {
        return Ok(EstimateResult::exact(label, 0.0, n_samples, seed, "odd parties differ; probability is exactly zero"));
    };
    let n = p1.n();
    let pairs = pairs_outside(p1, p2);
    let odd = p1.odd_members();
    let mu = cs.mu();
    let scale = 2f64.powi(mu as i32);
    let m = run_chunked(n_samples, seed, |rng| {
        let mut x = vec![0.0; n];
        for xi in x.iter_mut() {
            *xi = rng.gen();
        }
        let mut y = x.clone();
        let mut w = scale;
        for circuit in &cs.circuits {
            for (k, &v) in circuit.iter().enumerate() {
                let u: f64 = rng.gen();
                if k % 2 == 0 {
                    y[v] = x[v] + u * (1.0 - x[v]);
                    w *= 1.0 - x[v];
                } else {
                    y[v] = u * x[v];
                    w *= x[v];
                }
            }
        }
        for &h in &odd {
            w *= x[h];
        }
        for &(i, j) in &pairs {
            w *= pair_bracket(&x, &y, i, j);
        }
        w
    });
    let mut est = EstimateResult::from_moments(label, &m, seed);
    let rel = est.std_error / est.mean.abs().max(f64::MIN_POSITIVE);
    if rel > 0.1 {
        est.note = Some(format!("relative standard error {rel:.2}; the estimator degrades quickly with n"));
    }
    Ok(est)
}

/// Frequency of both partitions being stable on latent-matrix instances.
pub fn latent_pair_frequency(p1: &CyclicPartition, p2: &CyclicPartition, n_samples: u64, seed: u64) -> Result<EstimateResult> {
    check_samples(n_samples)?;
    if p1.n() != p2.n() {
        return Err(Error::invalid("partitions have different sizes"));
    }
    let n = p1.n();
    let m = run_chunked(n_samples, seed, |rng| {
        let inst = latent_instance(n, rng);
        let both = is_stable(&inst, p1).expect("sizes match").is_stable() && is_stable(&inst, p2).expect("sizes match").is_stable();
        f64::from(u8::from(both))
    });
    Ok(EstimateResult::from_moments(format!("freq({p1} and {p2} stable)"), &m, seed))
}

/// Which optional statistics an experiment computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentOptions {
    /// Stable-partition count and multiple-predecessor fraction by
    /// enumeration.
    pub enumerate: bool,
    /// Completion heuristic blocking count (even `n` only).
    pub heuristic: bool,
    pub enum_cap: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            enumerate: true,
            heuristic: true,
            enum_cap: crate::enumerate::DEFAULT_CAP,
        }
    }
}

/// One row of an instance experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub n: usize,
    pub trial: u64,
    pub m: usize,
    pub odd_parties: usize,
    pub has_fixed_point: bool,
    pub solvable: bool,
    pub rank_sum: usize,
    pub rank_ratio: f64,
    pub r_max: usize,
    pub max_matching_size: usize,
    pub blocking_count: Option<usize>,
    /// Stable reduced partitions without a fixed point.
    pub s_count: Option<usize>,
    /// Stable reduced partitions, a fixed point allowed.
    pub s_count_with_fp: Option<usize>,
    pub q_fraction: Option<f64>,
}

pub const CSV_HEADER: &str =
    "n,trial,m,odd_parties,has_fixed_point,solvable,rank_sum,rank_ratio,r_max,max_matching_size,blocking_count,s_count,q_fraction";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl TrialRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.trial,
            self.m,
            self.odd_parties,
            self.has_fixed_point,
            self.solvable,
            self.rank_sum,
            self.rank_ratio,
            self.r_max,
            self.max_matching_size,
            opt(&self.blocking_count),
            opt(&self.s_count),
            opt(&self.q_fraction),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    /// Statistics that could not be computed, with the reason.
    pub skipped: Vec<String>,
}

/// Solves `trials` uniform instances of size `n`; instance `t` comes from
/// stream `(seed, t)`.
pub fn instance_experiment(n: usize, trials: u64, seed: u64, opts: ExperimentOptions) -> Result<ExperimentResult> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let mut skipped = Vec::new();
    let enumerate = opts.enumerate && n <= opts.enum_cap;
    if opts.enumerate && !enumerate {
        skipped.push(format!("s_count, q_fraction: n = {n} is above the enumeration cap {}", opts.enum_cap));
    }
    let heuristic = opts.heuristic && n % 2 == 0;
    if opts.heuristic && !heuristic {
        skipped.push(format!("blocking_count: n = {n} is odd"));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRow> {
            let inst = PreferenceInstance::generate_with(n, &mut stream_rng(seed, t))?;
            let report = solve_report(&inst);
            let pi = &report.result.partition;
            let rs = rank_sum(&inst, pi)?;
            let (s_count, s_count_with_fp, q_fraction) = if enumerate {
                let with_fp = enumerate_stable_partitions(&inst, true, opts.enum_cap)?;
                let free: Vec<CyclicPartition> = with_fp.iter().filter(|p| !p.has_fixed_point()).cloned().collect();
                let q = multiple_predecessors_of(n, &free).len() as f64 / n as f64;
                (Some(free.len()), Some(with_fp.len()), Some(q))
            } else {
                (None, None, None)
            };
            Ok(TrialRow {
                n,
                trial: t,
                m: pi.odd_size(),
                odd_parties: report.result.odd_party_count,
                has_fixed_point: pi.has_fixed_point(),
                solvable: report.result.solvable,
                rank_sum: rs,
                rank_ratio: rs as f64 / (n as f64).powf(1.5),
                r_max: max_predecessor_rank(&inst, pi)?,
                max_matching_size: report.max_matching.size(),
                blocking_count: if heuristic { report.heuristic.map(|h| h.blocking_count) } else { None },
                s_count,
                s_count_with_fp,
                q_fraction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        n,
        trials,
        seed,
        rows,
        skipped,
    })
}

impl ExperimentResult {
    pub fn to_csv(&self, with_header: bool) -> String {
        let mut out = String::new();
        if with_header {
            out.push_str(CSV_HEADER);
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    fn column(&self, label: &str, f: impl Fn(&TrialRow) -> Option<f64>) -> Option<EstimateResult> {
        let values: Option<Vec<f64>> = self.rows.iter().map(f).collect();
        let m = Moments::of(values?);
        Some(EstimateResult::from_moments(label, &m, self.seed))
    }

    /// Mean and standard error of every available column, plus the second
    /// moment and second factorial moment of the stable-partition count.
    pub fn summary(&self) -> Vec<EstimateResult> {
        let b = |v: bool| f64::from(u8::from(v));
        let cols: Vec<(&str, Box<dyn Fn(&TrialRow) -> Option<f64>>)> = vec![
            ("m", Box::new(|r| Some(r.m as f64))),
            ("odd_parties", Box::new(|r| Some(r.odd_parties as f64))),
            ("has_fixed_point", Box::new(move |r| Some(b(r.has_fixed_point)))),
            ("solvable", Box::new(move |r| Some(b(r.solvable)))),
            ("rank_sum", Box::new(|r| Some(r.rank_sum as f64))),
            ("rank_ratio", Box::new(|r| Some(r.rank_ratio))),
            ("r_max", Box::new(|r| Some(r.r_max as f64))),
            ("max_matching_size", Box::new(|r| Some(r.max_matching_size as f64))),
            ("blocking_count", Box::new(|r| r.blocking_count.map(|v| v as f64))),
            ("s_count", Box::new(|r| r.s_count.map(|v| v as f64))),
            ("s_count_with_fp", Box::new(|r| r.s_count_with_fp.map(|v| v as f64))),
            ("s_count_squared", Box::new(|r| r.s_count.map(|v| (v * v) as f64))),
            (
                "s_count_factorial_2",
                Box::new(|r| r.s_count.map(|v| (v * v.saturating_sub(1)) as f64)),
            ),
            ("q_fraction", Box::new(|r| r.q_fraction)),
        ];
        cols.iter().filter_map(|(label, f)| self.column(label, f)).collect()
    }
}

/// Failure counts of the solver structure checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Solver output unstable or not reduced.
    pub solver_output: u64,
    /// Stable partitions disagreeing on odd parties.
    pub odd_parties: u64,
    /// Solvable flag, odd-party count and matching existence disagreeing.
    pub solvability: u64,
    /// Some reduction of a stable partition is unstable.
    pub reductions: u64,
    /// Maximum stable matching of the wrong size or internally blocked.
    pub max_matching: u64,
}

impl StructureReport {
    pub fn total_failures(&self) -> u64 {
        self.solver_output + self.odd_parties + self.solvability + self.reductions + self.max_matching
    }
}

/// Checks the solver against full enumeration on `trials` uniform
/// instances; instance `t` comes from stream `(seed, t)`.
pub fn structure_suite(n: usize, trials: u64, seed: u64, enum_cap: usize) -> Result<StructureReport> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[bool; 5]> {
            let inst = PreferenceInstance::generate_with(n, &mut stream_rng(seed, t))?;
            let report = solve_report(&inst);
            let sol = &report.result;
            let a = !(sol.partition.is_reduced() && is_stable(&inst, &sol.partition)?.is_stable());

            let all = enumerate_all_stable_partitions(&inst, enum_cap)?;
            let parties = sol.partition.odd_parties();
            let b = all.iter().any(|p| p.odd_parties() != parties);

            let has_matching = n % 2 == 0 && !enumerate_stable_matchings(&inst, enum_cap)?.is_empty();
            let c = sol.solvable != (sol.odd_party_count == 0) || sol.solvable != has_matching;

            let mut d = false;
            for p in all.iter().filter(|p| !p.is_reduced()) {
                let long = p.cycles().iter().filter(|c| c.len() >= 4 && c.len() % 2 == 0).count();
                for mask in 0..1u32 << long {
                    let r = p.reduce(|k| {
                        if mask >> k & 1 == 0 {
                            ReduceChoice::EvenStart
                        } else {
                            ReduceChoice::OddStart
                        }
                    });
                    d |= !is_stable(&inst, &r)?.is_stable();
                }
            }

            let m = &report.max_matching;
            let e = 2 * m.size() != n - sol.odd_party_count || !internal_blocking_pairs(&inst, m).is_empty();
            Ok([a, b, c, d, e])
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |k: usize| per_trial.iter().filter(|f| f[k]).count() as u64;
    Ok(StructureReport {
        n,
        trials,
        seed,
        solver_output: count(0),
        odd_parties: count(1),
        solvability: count(2),
        reductions: count(3),
        max_matching: count(4),
    })
}

/// Outcome of a bound harness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub checked: u64,
    pub violations: u64,
    /// Largest `log LHS − log RHS` seen; negative means every case held.
    pub worst_margin: f64,
}

/// Random fixed-point-free reduced partition: shuffled members cut into
/// cycles of length 2 or odd >= 3.
pub fn random_reduced_partition(n: usize, rng: &mut StreamRng) -> CyclicPartition {
    let mut members: Vec<usize> = (0..n).collect();
    members.shuffle(rng);
    let mut cycles = Vec::new();
    let mut k = 0;
    while k < n {
        let left = n - k;
        let options: Vec<usize> = std::iter::once(2)
            .chain((3..=left).step_by(2))
            .filter(|&l| l <= left && left - l != 1)
            .collect();
        // Favour short cycles, as typical stable partitions do.
        let l = if options.len() > 1 && rng.gen_bool(0.7) { options[0] } else { *options.choose(rng).expect("some length fits") };
        cycles.push(members[k..k + l].to_vec());
        k += l;
    }
    CyclicPartition::from_cycles(n, &cycles).expect("disjoint cycles")
}

/// Uniform point of `[0,1]^n`, scaled by a random factor half the time so
/// the small-`s` region is covered too.
fn sample_point(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let scale = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>().powi(2) };
    (0..n).map(|_| scale * rng.gen::<f64>()).collect()
}

fn run_bound(n_vectors: u64, seed: u64, margin: impl Fn(&mut StreamRng) -> f64 + Sync) -> BoundCheck {
    let chunks = n_vectors.div_ceil(CHUNK);
    let parts: Vec<(u64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let size = CHUNK.min(n_vectors - c * CHUNK);
            let mut violations = 0;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..size {
                let d = margin(&mut rng);
                if d > 0.0 {
                    violations += 1;
                }
                worst = worst.max(d);
            }
            (violations, worst)
        })
        .collect();
    BoundCheck {
        checked: n_vectors,
        violations: parts.iter().map(|p| p.0).sum(),
        worst_margin: parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// `log ∏_{non-adjacent} (1 − x_i x_j) − (−s²/2 + 4.5)`.
pub fn single_bound_margin(pi: &CyclicPartition, x: &[f64]) -> f64 {
    let n = pi.n();
    let mut log_lhs = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if !pi.adjacent(i, j) {
                log_lhs += (-x[i] * x[j]).ln_1p();
            }
        }
    }
    let s: f64 = x.iter().sum();
    log_lhs - (-s * s / 2.0 + 4.5)
}

/// Checks `∏ (1 − x_i x_j) ≤ exp(−s²/2 + 4.5)` on random shapes and points.
pub fn bound_check_single(n_vectors: u64, n: usize, seed: u64) -> Result<BoundCheck> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    Ok(run_bound(n_vectors, seed, |rng| {
        let pi = random_reduced_partition(n, rng);
        let x = sample_point(n, rng);
        single_bound_margin(&pi, &x)
    }))
}

/// `log ∏ bracket − (256 − s₁²/2 − s₂²/2 + s₁₂²/2)` over pairs adjacent in
/// neither partition.
pub fn pair_bound_margin(p1: &CyclicPartition, p2: &CyclicPartition, x: &[f64], y: &[f64]) -> f64 {
    let mut log_lhs = 0.0;
    for (i, j) in pairs_outside(p1, p2) {
        let v = pair_bracket(x, y, i, j);
        log_lhs += if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
    }
    let s1: f64 = x.iter().sum();
    let s2: f64 = y.iter().sum();
    let s12: f64 = x.iter().zip(y).map(|(a, b)| a.min(*b)).sum();
    log_lhs - (256.0 - s1 * s1 / 2.0 - s2 * s2 / 2.0 + s12 * s12 / 2.0)
}

/// Random second partition sharing the odd cycles of `p1`, with a random
/// perfect matching on the remaining members.
fn random_partner(p1: &CyclicPartition, rng: &mut StreamRng) -> CyclicPartition {
    let mut even: Vec<usize> = (0..p1.n()).filter(|&i| p1.succ(p1.succ(i)) == i).collect();
    even.shuffle(rng);
    let mut cycles: Vec<Vec<usize>> = p1.odd_parties();
    cycles.extend(even.chunks(2).map(<[usize]>::to_vec));
    CyclicPartition::from_cycles(p1.n(), &cycles).expect("disjoint cycles")
}

/// Checks the two-partition product bound on random valid configurations.
pub fn bound_check_pair(n_vectors: u64, n: usize, seed: u64) -> Result<BoundCheck> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    Ok(run_bound(n_vectors, seed, |rng| {
        let p1 = random_reduced_partition(n, rng);
        let p2 = random_partner(&p1, rng);
        let cs = CircuitStructure::new(&p1, &p2)
            .expect("partitions are reduced")
            .expect("odd parties agree");
        let x = sample_point(n, rng);
        let mut y = x.clone();
        for circuit in &cs.circuits {
            let flip: bool = rng.gen();
            for (k, &v) in circuit.iter().enumerate() {
                let u: f64 = rng.gen();
                y[v] = if (k % 2 == 0) != flip { x[v] + u * (1.0 - x[v]) } else { u * x[v] };
            }
        }
        pair_bound_margin(&p1, &p2, &x, &y)
    }))
}
