//! Exact results checked against independent computations: exhaustive
//! enumeration of every n = 4 instance, naive subset expansions of the
//! integrands, and brute-force permutation counts.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use stable_partitions::enumerate::{count_shapes, count_shapes_with_fixed_point, enumerate_candidates, ShapeSpec, DEFAULT_CAP};
use stable_partitions::exact::{
    exact_expected_partitions, exact_rank_gf, exact_stability_probability, f_even_circuits_weighted, f_odd,
    f_odd_weighted, gamma_quarter, leading_constant, DEFAULT_GF_PAIR_CAP, DEFAULT_PROB_PAIR_CAP,
};
use stable_partitions::partition::{is_stable, rank_sum};
use stable_partitions::{CyclicPartition, PreferenceInstance};

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// All `((n−1)!)^n` preference profiles on `n` members.
fn all_instances(n: usize) -> Vec<PreferenceInstance> {
    let rows: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|i| permutations(&(0..n).filter(|&j| j != i).collect::<Vec<_>>()))
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        out.push(PreferenceInstance::new((0..n).map(|i| rows[i][idx[i]].clone()).collect()).unwrap());
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < rows[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn all_partitions(n: usize) -> Vec<CyclicPartition> {
    permutations(&(0..n).collect::<Vec<_>>())
        .into_iter()
        .map(|s| CyclicPartition::from_succ(s).unwrap())
        .collect()
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `∫₀¹ x^a (1−x)^b dx`.
fn beta(a: u32, b: u32) -> BigRational {
    BigRational::new(factorial(a) * factorial(b), factorial(a + b + 1))
}

fn shape(s: &str) -> CyclicPartition {
    s.parse::<ShapeSpec>().unwrap().representative()
}

#[test]
fn every_n4_instance_reproduces_the_exact_probabilities() {
    let instances = all_instances(4);
    assert_eq!(instances.len(), 1296);
    for s in ["2,2", "3+fp"] {
        let pi = shape(s);
        let hits = instances.iter().filter(|inst| is_stable(inst, &pi).unwrap().is_stable()).count();
        assert_eq!(exact_stability_probability(&pi, DEFAULT_PROB_PAIR_CAP).unwrap(), ratio(hits, 1296), "{s}");
    }
    assert_eq!(exact_stability_probability(&shape("2,2"), DEFAULT_PROB_PAIR_CAP).unwrap(), ratio(233, 648));
    assert_eq!(exact_stability_probability(&shape("3+fp"), DEFAULT_PROB_PAIR_CAP).unwrap(), ratio(1, 216));
}

#[test]
fn every_n4_instance_reproduces_the_rank_generating_function() {
    let pi = shape("2,2");
    let mut counts = std::collections::BTreeMap::<u32, usize>::new();
    for inst in all_instances(4) {
        if is_stable(&inst, &pi).unwrap().is_stable() {
            *counts.entry(rank_sum(&inst, &pi).unwrap() as u32).or_default() += 1;
        }
    }
    let gf = exact_rank_gf(&pi, DEFAULT_GF_PAIR_CAP).unwrap();
    let powers: Vec<u32> = gf.terms().map(|(k, _)| k).collect();
    assert_eq!(powers, counts.keys().copied().collect::<Vec<_>>());
    for (&k, &c) in &counts {
        assert_eq!(gf.coeff(k), ratio(c, 1296), "z^{k}");
    }
}

#[test]
fn every_n4_instance_reproduces_the_expected_count() {
    let partitions = all_partitions(4);
    let (mut free, mut with_fp) = (0, 0);
    for inst in all_instances(4) {
        for p in partitions.iter().filter(|p| p.is_reduced()) {
            if is_stable(&inst, p).unwrap().is_stable() {
                with_fp += 1;
                if !p.has_fixed_point() {
                    free += 1;
                }
            }
        }
    }
    assert_eq!(exact_expected_partitions(4, false, DEFAULT_PROB_PAIR_CAP).unwrap(), ratio(free, 1296));
    assert_eq!(exact_expected_partitions(4, true, DEFAULT_PROB_PAIR_CAP).unwrap(), ratio(with_fp, 1296));
    assert_eq!(ratio(free, 1296), ratio(233, 216));
}

/// Integrand factors for a reduced partition: per-variable `(a, b)` for
/// `x^a (1−x)^b` and the non-adjacent pairs, both over the variables that
/// remain once a fixed point is dropped.
fn integrand(pi: &CyclicPartition) -> (Vec<(u32, u32)>, Vec<(usize, usize)>) {
    let fixed = pi.fixed_points().first().copied();
    let vars: Vec<usize> = (0..pi.n()).filter(|&i| Some(i) != fixed).collect();
    let odd = pi.odd_members();
    let base = vars
        .iter()
        .map(|i| (u32::from(odd.contains(i)), u32::from(fixed.is_some())))
        .collect();
    let mut pairs = Vec::new();
    for a in 0..vars.len() {
        for b in a + 1..vars.len() {
            if !pi.adjacent(vars[a], vars[b]) {
                pairs.push((a, b));
            }
        }
    }
    (base, pairs)
}

/// Expands `∏ (1 − x_i x_j)` over every subset of pairs.
fn naive_probability(pi: &CyclicPartition) -> BigRational {
    let (base, pairs) = integrand(pi);
    let mut total = BigRational::zero();
    for mask in 0u64..1 << pairs.len() {
        let mut exps = base.clone();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                exps[i].0 += 1;
                exps[j].0 += 1;
            }
        }
        let term = exps.iter().fold(BigRational::one(), |acc, &(a, b)| acc * beta(a, b));
        if mask.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

#[test]
fn subset_expansion_matches_the_exact_probability() {
    for s in ["2", "2,2", "3+fp", "3", "2,2,2", "3,3", "3,2+fp", "5", "5+fp", "3,2,2", "2,2,2+fp", "7"] {
        let pi = shape(s);
        assert_eq!(exact_stability_probability(&pi, DEFAULT_PROB_PAIR_CAP).unwrap(), naive_probability(&pi), "{s}");
    }
}

/// Expands the rank integrand by choosing one of the three terms of every
/// pair factor.
fn naive_rank_gf(pi: &CyclicPartition) -> std::collections::BTreeMap<u32, BigRational> {
    let (base, pairs) = integrand(pi);
    let z0 = (pi.n() + pi.odd_size()) as u32;
    let mut out = std::collections::BTreeMap::<u32, BigRational>::new();
    let mut choice = vec![0u8; pairs.len()];
    loop {
        let mut exps = base.clone();
        let mut z = z0;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            match choice[k] {
                0 => {
                    exps[i].1 += 1;
                    exps[j].1 += 1;
                }
                1 => {
                    exps[i].0 += 1;
                    exps[j].1 += 1;
                    z += 1;
                }
                _ => {
                    exps[i].1 += 1;
                    exps[j].0 += 1;
                    z += 1;
                }
            }
        }
        let term = exps.iter().fold(BigRational::one(), |acc, &(a, b)| acc * beta(a, b));
        *out.entry(z).or_insert_with(BigRational::zero) += term;
        let mut k = 0;
        loop {
            if k == choice.len() {
                out.retain(|_, v| !v.is_zero());
                return out;
            }
            choice[k] += 1;
            if choice[k] < 3 {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn term_expansion_matches_the_rank_generating_function() {
    for s in ["2", "2,2", "3", "2,2,2", "3,3", "5"] {
        let pi = shape(s);
        let gf = exact_rank_gf(&pi, DEFAULT_GF_PAIR_CAP).unwrap();
        let got: std::collections::BTreeMap<u32, BigRational> = gf.terms().map(|(k, c)| (k, c.clone())).collect();
        assert_eq!(got, naive_rank_gf(&pi), "{s}");
        assert!(gf.min_power().unwrap() as usize >= pi.n() + pi.odd_size());
        assert_eq!(gf.eval(&BigRational::one()), exact_stability_probability(&pi, DEFAULT_PROB_PAIR_CAP).unwrap());
    }
}

fn cycle_lengths(succ: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; succ.len()];
    let mut out = Vec::new();
    for s in 0..succ.len() {
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = succ[i];
            len += 1;
        }
        if len > 0 {
            out.push(len);
        }
    }
    out
}

#[test]
fn cycle_type_counts_match_brute_force() {
    for m in 0..=8 {
        let (mut plain, mut weighted) = (0usize, 0usize);
        for p in permutations(&(0..m).collect::<Vec<_>>()) {
            let lens = cycle_lengths(&p);
            if lens.iter().all(|&l| l >= 3 && l % 2 == 1) {
                plain += 1;
                weighted += lens.len();
            }
        }
        assert_eq!(f_odd(m), BigUint::from(plain), "f({m})");
        assert_eq!(f_odd_weighted(m), BigUint::from(weighted), "weighted f({m})");
    }
    for nu in 0..=4 {
        let mut weighted = 0usize;
        for p in permutations(&(0..2 * nu).collect::<Vec<_>>()) {
            let lens = cycle_lengths(&p);
            if lens.iter().all(|&l| l >= 4 && l % 2 == 0) {
                weighted += 1 << lens.len();
            }
        }
        assert_eq!(f_even_circuits_weighted(nu), BigUint::from(weighted), "nu={nu}");
    }
    assert_eq!(f_even_circuits_weighted(2), BigUint::from(12u32));
    assert_eq!(f_odd(12), BigUint::from(31_672_960u64));
}

#[test]
fn shape_counts_match_the_candidate_stream() {
    for n in 1..=9 {
        let mut by_m = std::collections::BTreeMap::<(usize, bool), usize>::new();
        enumerate_candidates(n, true, DEFAULT_CAP, |succ| {
            let lens = cycle_lengths(succ);
            let fp = lens.contains(&1);
            let m: usize = lens.iter().filter(|&&l| l >= 3).sum();
            *by_m.entry((m, fp)).or_default() += 1;
        })
        .unwrap();
        for ((m, fp), count) in by_m {
            let expected = if fp { count_shapes_with_fixed_point(n, m) } else { count_shapes(n, m) }.unwrap();
            assert_eq!(expected, BigUint::from(count), "n={n} m={m} fp={fp}");
        }
    }
}

#[test]
fn gamma_and_leading_constant_match_quadrature() {
    // Γ(1/4) = 4 ∫₀^∞ e^{−u⁴} du, by composite Simpson on [0, 6].
    let steps = 60_000;
    let h = 6.0 / steps as f64;
    let f = |u: f64| (-u.powi(4)).exp();
    let mut sum = f(0.0) + f(6.0);
    for k in 1..steps {
        sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let gamma = 4.0 * sum * h / 3.0;
    assert!((gamma - 3.625_609_908_2).abs() < 1e-9);
    assert!((gamma_quarter() - gamma).abs() < 1e-9);
    let k = gamma / ((std::f64::consts::PI * std::f64::consts::E).sqrt() * 2f64.powf(0.25));
    assert!((leading_constant() - k).abs() < 1e-9);
    assert!((leading_constant() - 1.04325).abs() < 1e-4);
}
