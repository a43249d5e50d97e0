//! Exact values of the stability integrals at small `n`, the counting
//! sequences behind the expected-count formulas, and the closed-form
//! asymptotic constants.
//!
//! For a fixed-point-free reduced partition `Π` on `n` members with `m`
//! members on odd cycles,
//!
//! ```text
//! P(Π stable) = ∫_{[0,1]^n} ∏_{h ∈ Odd} x_h ∏_{{i,j} ∉ D(Π)} (1 − x_i x_j) dx
//! ```
//!
//! and with a fixed point `h*` the variable `x_{h*}` disappears, the pair
//! product runs over members other than `h*`, and every remaining variable
//! picks up a factor `1 − x_k`.
//!
//! Both this integral and the rank generating function are polynomials in
//! `x_k` and `1 − x_k`, so they are expanded pair by pair into monomials
//! `∏ x_k^a (1 − x_k)^b` and integrated with `∫ x^a (1−x)^b = a! b! / (a+b+1)!`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::enumerate::ShapeSpec;
use crate::error::{Error, Result};
use crate::partition::CyclicPartition;

/// Default cap on non-adjacent pairs for [`exact_stability_probability`].
pub const DEFAULT_PROB_PAIR_CAP: usize = 28;
/// Default cap on non-adjacent pairs for [`exact_rank_gf`] (`3^12` terms).
pub const DEFAULT_GF_PAIR_CAP: usize = 12;

/// `k!!` with `(−1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> Result<BigUint> {
    if k < -1 {
        return Err(Error::invalid(format!("double factorial is undefined for {k}")));
    }
    let mut acc = BigUint::one();
    let mut j = k;
    while j > 1 {
        acc *= BigUint::from(j as u64);
        j -= 2;
    }
    Ok(acc)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `exp(h)` truncated after `x^order`, for a series with `h_0 = 0`.
fn series_exp(h: &[BigRational], order: usize) -> Vec<BigRational> {
    let mut g = vec![BigRational::zero(); order + 1];
    g[0] = BigRational::one();
    for k in 1..=order {
        let mut acc = BigRational::zero();
        for j in 1..=k.min(h.len() - 1) {
            if !h[j].is_zero() {
                acc += &h[j] * BigRational::from_integer(BigInt::from(j)) * &g[k - j];
            }
        }
        g[k] = acc / BigRational::from_integer(BigInt::from(k));
    }
    g
}

fn series_mul(a: &[BigRational], b: &[BigRational], order: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `Σ_{j ∈ lengths, j ≤ order} weight · x^j / j`.
fn cycle_series(order: usize, weight: i64, keep: impl Fn(usize) -> bool) -> Vec<BigRational> {
    (0..=order)
        .map(|j| {
            if j > 0 && keep(j) {
                BigRational::new(BigInt::from(weight), BigInt::from(j))
            } else {
                BigRational::zero()
            }
        })
        .collect()
}

fn egf_coefficient(series: &[BigRational], m: usize) -> BigUint {
    let v = &series[m] * BigRational::from_integer(BigInt::from(factorial(m)));
    debug_assert!(v.is_integer());
    v.to_integer().to_biguint().expect("counts are non-negative")
}

fn is_odd_cycle(j: usize) -> bool {
    j >= 3 && j % 2 == 1
}

/// `f(m)`: permutations of `[m]` whose cycles are all odd with length at
/// least 3.
pub fn f_odd(m: usize) -> BigUint {
    let h = cycle_series(m, 1, is_odd_cycle);
    egf_coefficient(&series_exp(&h, m), m)
}

/// `Σ_k k f(m, k)`: the same permutations weighted by their cycle count.
pub fn f_odd_weighted(m: usize) -> BigUint {
    let h = cycle_series(m, 1, is_odd_cycle);
    let g = series_exp(&h, m);
    egf_coefficient(&series_mul(&h, &g, m), m)
}

/// `f(m, k)` for `k = 0..`: odd-cycle permutations of `[m]` by cycle count.
pub fn f_odd_by_cycles(m: usize) -> Vec<BigUint> {
    // Permutations with k cycles: m! [x^m] h^k / k!.
    let h = cycle_series(m, 1, is_odd_cycle);
    let mut power = vec![BigRational::zero(); m + 1];
    power[0] = BigRational::one();
    let mut out = Vec::new();
    for k in 0..=m / 3 {
        let v = &power[m] * BigRational::new(BigInt::from(factorial(m)), BigInt::from(factorial(k)));
        out.push(v.to_integer().to_biguint().expect("counts are non-negative"));
        power = series_mul(&power, &h, m);
    }
    out
}

/// `Σ_μ 2^{2μ} f(2ν, μ)`, where `f(2ν, μ)` counts partitions of `[2ν]` into
/// `μ` undirected alternating circuits of even length at least 4.
///
/// Each undirected circuit of length at least 3 has two cyclic
/// orientations, so `2^μ f(2ν, μ)` counts permutations with even cycles of
/// length at least 4 and the weighted sum is `(2ν)! [x^{2ν}] exp(2 Σ x^j / j)`
/// over even `j ≥ 4`, which equals `e^{−x²} / (1 − x²)`.
pub fn f_even_circuits_weighted(nu: usize) -> BigUint {
    let order = 2 * nu;
    let h = cycle_series(order, 2, |j| j >= 4 && j % 2 == 0);
    egf_coefficient(&series_exp(&h, order), order)
}

/// Polynomial in `z` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankPolynomial {
    coeffs: BTreeMap<u32, BigRational>,
}

impl RankPolynomial {
    pub fn coeff(&self, k: u32) -> BigRational {
        self.coeffs.get(&k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Non-zero coefficients in increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.coeffs.iter().map(|(&k, c)| (k, c))
    }

    pub fn min_power(&self) -> Option<u32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn eval(&self, z: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .map(|(&k, c)| c * num_traits::pow(z.clone(), k as usize))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.coeffs.iter().map(|(&k, c)| rational_to_f64(c) * z.powi(k as i32)).sum()
    }
}

impl fmt::Display for RankPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().map(|(k, c)| format!("{c}*z^{k}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerator and denominator: scale both down first.
        let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

// ---------------------------------------------------------------------------
// Expansion engine
// ---------------------------------------------------------------------------

const BITS_PER_VAR: usize = 8;
const MAX_VARS: usize = 15;
const Z_SHIFT: usize = 120;
const MAX_EXP: u32 = 15;

/// One monomial of a pair factor: `coef · z^z · x_i^{a_i} x̄_i^{b_i} x_j^{a_j} x̄_j^{b_j}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairTerm {
    pub coef: i64,
    pub z: u32,
    pub i: (u32, u32),
    pub j: (u32, u32),
}

/// The integrand `z^{z0} ∏_v x_v^{a_v} x̄_v^{b_v} ∏_{pairs} factor(i, j)`.
#[derive(Debug, Clone)]
pub(crate) struct Integrand {
    pub base: Vec<(u32, u32)>,
    pub pairs: Vec<(usize, usize)>,
    pub z0: u32,
}

fn encode(v: usize, a: u32, b: u32) -> u128 {
    ((a as u128) | ((b as u128) << 4)) << (BITS_PER_VAR * v)
}

impl Integrand {
    /// Stability integrand of a reduced partition.
    pub fn stability(pi: &CyclicPartition) -> Result<Self> {
        let fps = pi.fixed_points();
        if fps.len() > 1 {
            return Err(Error::invalid(format!("{pi} has more than one fixed point")));
        }
        let odd = pi.odd_members();
        let fixed = fps.first().copied();
        let members: Vec<usize> = (0..pi.n()).filter(|&i| Some(i) != fixed).collect();
        let index = |i: usize| members.iter().position(|&k| k == i).expect("member present");
        let base = members
            .iter()
            .map(|i| (u32::from(odd.binary_search(i).is_ok()), u32::from(fixed.is_some())))
            .collect();
        let mut pairs = Vec::new();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if !pi.adjacent(i, j) {
                    pairs.push((index(i), index(j)));
                }
            }
        }
        Ok(Integrand { base, pairs, z0: 0 })
    }

    pub fn vars(&self) -> usize {
        self.base.len()
    }

    /// Expands and integrates, returning the coefficient of each power of
    /// `z`.
    pub fn integrate(&self, factor: &[PairTerm]) -> Result<BTreeMap<u32, BigRational>> {
        let nv = self.vars();
        if nv > MAX_VARS {
            return Err(Error::CapExceeded {
                what: "integration variables",
                actual: nv,
                cap: MAX_VARS,
            });
        }
        let mut degree = vec![0u32; nv];
        for &(i, j) in &self.pairs {
            degree[i] += 1;
            degree[j] += 1;
        }
        let max_step = factor.iter().map(|t| t.i.0.max(t.i.1).max(t.j.0).max(t.j.1)).max().unwrap_or(0);
        for v in 0..nv {
            let top = self.base[v].0.max(self.base[v].1) + degree[v] * max_step;
            if top > MAX_EXP {
                return Err(Error::CapExceeded {
                    what: "per-variable degree",
                    actual: top as usize,
                    cap: MAX_EXP as usize,
                });
            }
        }

        let mut start = (self.z0 as u128) << Z_SHIFT;
        for (v, &(a, b)) in self.base.iter().enumerate() {
            start += encode(v, a, b);
        }
        let mut states: FxHashMap<u128, i64> = FxHashMap::default();
        states.insert(start, 1);
        for &(i, j) in &self.pairs {
            let steps: Vec<(u128, i64)> = factor
                .iter()
                .map(|t| {
                    (
                        ((t.z as u128) << Z_SHIFT) + encode(i, t.i.0, t.i.1) + encode(j, t.j.0, t.j.1),
                        t.coef,
                    )
                })
                .collect();
            let mut next: FxHashMap<u128, i64> =
                FxHashMap::with_capacity_and_hasher(states.len() * 2, Default::default());
            for (&key, &c) in &states {
                for &(delta, coef) in &steps {
                    *next.entry(key + delta).or_insert(0) += c * coef;
                }
            }
            next.retain(|_, c| *c != 0);
            states = next;
        }
        Ok(finish(&states, nv))
    }
}

/// `∫ x^a (1−x)^b dx = a! b! / (a+b+1)!`, scaled to the common denominator
/// `lcm(1..=d+1)` where `d` bounds `a + b`.
fn beta_table(dmax: usize) -> (BigUint, Vec<Vec<u64>>) {
    let l = (1..=dmax as u64 + 1).fold(1u64, |acc, k| acc.lcm(&k));
    let mut table = vec![vec![0u64; dmax + 1]; dmax + 1];
    for a in 0..=dmax {
        for b in 0..=dmax - a {
            // (a+b+1)!/(a!b!) = (a+b+1) C(a+b, a), which divides lcm(1..=a+b+1).
            let inv = (a + b + 1) as u64 * binomial(a + b, a).to_u64().expect("small binomial");
            table[a][b] = l / inv;
        }
    }
    (BigUint::from(l), table)
}

fn finish(states: &FxHashMap<u128, i64>, nv: usize) -> BTreeMap<u32, BigRational> {
    let mut dmax = 0usize;
    for &key in states.keys() {
        for v in 0..nv {
            let cell = (key >> (BITS_PER_VAR * v)) as u32;
            dmax = dmax.max(((cell & 0xF) + ((cell >> 4) & 0xF)) as usize);
        }
    }
    let (l, table) = beta_table(dmax);
    let mut sums: BTreeMap<u32, BigInt> = BTreeMap::new();
    let mut keys: Vec<&u128> = states.keys().collect();
    keys.sort_unstable();
    for key in keys {
        let c = states[key];
        let z = (key >> Z_SHIFT) as u32;
        let mut small: Option<i128> = Some(c as i128);
        let mut big: Option<BigInt> = None;
        for v in 0..nv {
            let cell = (key >> (BITS_PER_VAR * v)) as u32;
            let w = table[(cell & 0xF) as usize][((cell >> 4) & 0xF) as usize];
            match small.and_then(|s| s.checked_mul(w as i128)) {
                Some(s) => small = Some(s),
                None => {
                    let cur = big.take().unwrap_or_else(|| BigInt::from(small.expect("set until overflow")));
                    big = Some(cur * BigInt::from(w));
                    small = None;
                }
            }
        }
        let term = big.unwrap_or_else(|| BigInt::from(small.expect("one of the two is set")));
        *sums.entry(z).or_insert_with(BigInt::zero) += term;
    }
    let denom = BigInt::from(num_traits::pow(l, nv));
    sums.into_iter()
        .filter(|(_, s)| !s.is_zero())
        .map(|(z, s)| (z, BigRational::new(s, denom.clone())))
        .collect()
}

const ONE_MINUS_PRODUCT: [PairTerm; 2] = [
    PairTerm {
        coef: 1,
        z: 0,
        i: (0, 0),
        j: (0, 0),
    },
    PairTerm {
        coef: -1,
        z: 0,
        i: (1, 0),
        j: (1, 0),
    },
];

const RANK_PAIR: [PairTerm; 3] = [
    PairTerm {
        coef: 1,
        z: 0,
        i: (0, 1),
        j: (0, 1),
    },
    PairTerm {
        coef: 1,
        z: 1,
        i: (1, 0),
        j: (0, 1),
    },
    PairTerm {
        coef: 1,
        z: 1,
        i: (0, 1),
        j: (1, 0),
    },
];

fn check_pairs(count: usize, cap: usize) -> Result<()> {
    if count > cap {
        return Err(Error::CapExceeded {
            what: "non-adjacent pair count",
            actual: count,
            cap,
        });
    }
    Ok(())
}

/// Exact `P(Π stable)` for a uniformly random instance. Depends only on the
/// shape of `Π`.
pub fn exact_stability_probability(pi: &CyclicPartition, pair_cap: usize) -> Result<BigRational> {
    if !pi.is_reduced() {
        return Err(Error::invalid(format!("{pi} is not reduced")));
    }
    let integrand = Integrand::stability(pi)?;
    check_pairs(integrand.pairs.len(), pair_cap)?;
    let by_z = integrand.integrate(&ONE_MINUS_PRODUCT)?;
    Ok(by_z.get(&0).cloned().unwrap_or_else(BigRational::zero))
}

pub fn exact_stability_probability_of_shape(shape: &ShapeSpec, pair_cap: usize) -> Result<BigRational> {
    exact_stability_probability(&shape.representative(), pair_cap)
}

/// `E[z^{𝓡(Π)} χ(Π stable)]` as a polynomial in `z`, for a fixed-point-free
/// reduced partition.
pub fn exact_rank_gf(pi: &CyclicPartition, pair_cap: usize) -> Result<RankPolynomial> {
    if pi.has_fixed_point() {
        return Err(Error::invalid(format!(
            "{pi} has a fixed point; the rank generating function needs a fixed-point-free partition"
        )));
    }
    if !pi.is_reduced() {
        return Err(Error::invalid(format!("{pi} is not reduced")));
    }
    let mut integrand = Integrand::stability(pi)?;
    check_pairs(integrand.pairs.len(), pair_cap)?;
    integrand.z0 = (pi.n() + pi.odd_size()) as u32;
    Ok(RankPolynomial {
        coeffs: integrand.integrate(&RANK_PAIR)?,
    })
}

/// `E[S]` at finite `n`: every reduced shape weighted by its labelled count.
pub fn exact_expected_partitions(n: usize, include_fixed_point: bool, pair_cap: usize) -> Result<BigRational> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let mut total = BigRational::zero();
    for shape in ShapeSpec::all(n, include_fixed_point) {
        let p = exact_stability_probability_of_shape(&shape, pair_cap)?;
        total += p * BigRational::from_integer(BigInt::from(shape.labelled_count()));
    }
    Ok(total)
}

/// `Γ(1/4)`.
pub fn gamma_quarter() -> f64 {
    statrs::function::gamma::gamma(0.25)
}

/// `Γ(1/4) / (√(πe) 2^{1/4})`, the constant in `E[S_n] ~ K n^{1/4}`.
pub fn leading_constant() -> f64 {
    gamma_quarter() / ((std::f64::consts::PI * std::f64::consts::E).sqrt() * 2f64.powf(0.25))
}

pub fn asymptotic_expected_partitions(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    Ok(leading_constant() * (n as f64).powf(0.25))
}

/// `e^{1/2} / (n+m−1)!!`.
pub fn asymptotic_p_stable(n: usize, m: usize) -> Result<f64> {
    if n + m < 1 {
        return Err(Error::invalid("n + m must be at least 1"));
    }
    let df = double_factorial((n + m) as i64 - 1)?;
    let r = BigRational::new(BigInt::one(), BigInt::from(df));
    Ok(0.5f64.exp() * rational_to_f64(&r))
}

/// Integrand of the second-moment constant, `x^{−1/2} e^{−x²/2 − 2xy − y²}`.
pub fn second_moment_integrand(x: f64, y: f64) -> f64 {
    x.powf(-0.5) * (-x * x / 2.0 - 2.0 * x * y - y * y).exp()
}

/// `∬_{x,y ≥ 0} x^{−1/2} e^{−x²/2 − 2xy − y²} dx dy`, by nested adaptive
/// Gauss–Kronrod with `x = u²` (so `x^{−1/2} dx = 2 du`).
pub fn second_moment_integral(tol: f64) -> f64 {
    // e^{−u⁴/2} < 1e−300 beyond u = 6.1 and e^{−y²} likewise beyond y = 26.3.
    const U_MAX: f64 = 6.5;
    const Y_MAX: f64 = 27.0;
    let inner = |u: f64| {
        let x = u * u;
        2.0 * adaptive_gk(&|y| (-x * x / 2.0 - 2.0 * x * y - y * y).exp(), 0.0, Y_MAX, tol * 1e-2, 0)
    };
    adaptive_gk(&inner, 0.0, U_MAX, tol, 0)
}

/// `c = e^{−3/2} √(2/π²) ∬ x^{−1/2} e^{−x²/2 − 2xy − y²}`, the second-moment
/// constant.
pub fn second_moment_constant() -> f64 {
    second_moment_constant_with_tol(1e-10)
}

pub fn second_moment_constant_with_tol(tol: f64) -> f64 {
    let pre = (-1.5f64).exp() * (2.0 / (std::f64::consts::PI * std::f64::consts::PI)).sqrt();
    pre * second_moment_integral(tol)
}

/// `2 e c n^{−1/4}`.
pub fn qn_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    Ok(2.0 * std::f64::consts::E * second_moment_constant() * (n as f64).powf(-0.25))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// G7–K15 on `[a, b]`, bisecting until the Gauss/Kronrod gap is below `tol`.
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for k in 0..7 {
        let d = h * GK_NODES[k];
        let pair = f(c - d) + f(c + d);
        kronrod += GK_WEIGHTS[k] * pair;
        if k % 2 == 1 {
            gauss += G_WEIGHTS[k / 2] * pair;
        }
    }
    kronrod *= h;
    gauss *= h;
    // The relative floor stops the bisection once the gap is round-off.
    let err = (kronrod - gauss).abs();
    if err <= tol || err <= 1e-14 * kronrod.abs() || !err.is_finite() || depth >= 30 {
        return kronrod;
    }
    adaptive_gk(f, a, c, tol / 2.0, depth + 1) + adaptive_gk(f, c, b, tol / 2.0, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn shape(s: &str) -> CyclicPartition {
        s.parse::<ShapeSpec>().unwrap().representative()
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(-1).unwrap(), BigUint::one());
        assert_eq!(double_factorial(0).unwrap(), BigUint::one());
        assert_eq!(double_factorial(7).unwrap(), BigUint::from(105u32));
        assert!(double_factorial(-2).is_err());
        for k in 1..=20 {
            assert_eq!(double_factorial(k).unwrap() * double_factorial(k - 1).unwrap(), factorial(k as usize));
        }
    }

    #[test]
    fn odd_cycle_counts() {
        let f: Vec<u64> = (0..=8).map(|m| f_odd(m).to_u64().unwrap()).collect();
        assert_eq!(f, vec![1, 0, 0, 2, 0, 24, 40, 720, 2688]);
        assert_eq!(f_odd_weighted(4), BigUint::zero());
        assert_eq!(f_odd_weighted(6), BigUint::from(80u32));
        assert_eq!(f_odd_weighted(8), BigUint::from(5376u32));
        assert_eq!(f_odd(12), BigUint::from(31_672_960u64));
        for m in 0..=15 {
            let by_k = f_odd_by_cycles(m);
            let total: BigUint = by_k.iter().sum();
            let weighted: BigUint = by_k.iter().enumerate().map(|(k, c)| c * BigUint::from(k)).sum();
            assert_eq!(total, f_odd(m));
            assert_eq!(weighted, f_odd_weighted(m));
        }
    }

    #[test]
    fn circuit_counts() {
        assert_eq!(f_even_circuits_weighted(0), BigUint::one());
        assert_eq!(f_even_circuits_weighted(1), BigUint::zero());
        assert_eq!(f_even_circuits_weighted(2), BigUint::from(12u32));
        // ratio to e^{-1} (2ν)! approaches 1
        let ratio = |nu: usize| {
            let v = rational_to_f64(&BigRational::new(
                BigInt::from(f_even_circuits_weighted(nu)),
                BigInt::from(factorial(2 * nu)),
            ));
            v * std::f64::consts::E
        };
        assert!((ratio(20) - 1.0).abs() < 0.01);
        assert!((ratio(20) - 1.0).abs() < (ratio(5) - 1.0).abs());
    }

    #[test]
    fn stability_probability_examples() {
        let cap = DEFAULT_PROB_PAIR_CAP;
        assert_eq!(exact_stability_probability(&shape("2"), cap).unwrap(), BigRational::one());
        assert_eq!(exact_stability_probability(&shape("2,2"), cap).unwrap(), r(233, 648));
        assert_eq!(exact_stability_probability(&shape("3+fp"), cap).unwrap(), r(1, 216));
        assert!(matches!(
            exact_stability_probability(&shape("2,2,2,2,2"), cap),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn matching_probability_decreases() {
        let p: Vec<BigRational> = [2, 4, 6, 8]
            .iter()
            .map(|&n| exact_stability_probability(&ShapeSpec::matching(n).unwrap().representative(), 28).unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn expected_counts() {
        let cap = DEFAULT_PROB_PAIR_CAP;
        assert_eq!(exact_expected_partitions(2, false, cap).unwrap(), BigRational::one());
        assert_eq!(exact_expected_partitions(4, false, cap).unwrap(), r(233, 216));
        assert_eq!(exact_expected_partitions(4, true, cap).unwrap(), r(241, 216));
    }

    #[test]
    fn rank_gf_n4() {
        let gf = exact_rank_gf(&shape("2,2"), DEFAULT_GF_PAIR_CAP).unwrap();
        assert_eq!(gf.eval(&BigRational::one()), r(233, 648));
        assert!(gf.min_power().unwrap() >= 4);
        assert!(gf.terms().all(|(_, c)| c.is_positive()));
        assert!(exact_rank_gf(&shape("3+fp"), DEFAULT_GF_PAIR_CAP).is_err());
        // 𝓡 = 4 exactly when everyone's predecessor is their first choice.
        // That needs the two pairs to be mutual first choices: (1/3)^4.
        assert_eq!(gf.coeff(4), r(1, 81));
    }

    #[test]
    fn constants() {
        assert!((gamma_quarter() - 3.625_609_908_2).abs() < 1e-9);
        assert!((leading_constant() - 1.043_281_241_8).abs() < 1e-9);
        assert!((asymptotic_expected_partitions(10_000).unwrap() - 10.432_812_4).abs() < 1e-6);
        assert!((asymptotic_p_stable(2, 0).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        assert!((asymptotic_p_stable(4, 0).unwrap() - 0.5f64.exp() / 3.0).abs() < 1e-15);
        let ratio = asymptotic_p_stable(6, 2).unwrap() / asymptotic_p_stable(6, 0).unwrap();
        assert!((ratio - 1.0 / 7.0).abs() < 1e-15);
        assert!((second_moment_integrand(1.0, 0.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn second_moment_quadrature() {
        let fine = second_moment_constant_with_tol(1e-10);
        let coarse = second_moment_constant_with_tol(1e-6);
        assert!((fine - coarse).abs() < 1e-4);
        // One-dimensional form after integrating y out analytically:
        // ∫_0^∞ e^{−y²−2u²y} dy = e^{u⁴} (√π/2) erfc(u²).
        let one_d = adaptive_gk(
            &|u: f64| {
                let x = u * u;
                (x * x / 2.0).exp() * std::f64::consts::PI.sqrt() * statrs::function::erf::erfc(x)
            },
            0.0,
            // e^{u⁴/2} overflows further out; the tail is below e^{−200}.
            4.5,
            1e-12,
            0,
        );
        assert!((second_moment_integral(1e-10) - one_d).abs() < 1e-8);
        assert!((fine - 0.135_694).abs() < 1e-5, "{fine}");
        let q = qn_bound(16).unwrap();
        assert!((q - std::f64::consts::E * fine).abs() < 1e-12);
        assert!(qn_bound(10_000).unwrap() < q);
    }
}
