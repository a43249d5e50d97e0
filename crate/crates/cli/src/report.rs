//! JSON shapes shared by the one-shot commands and experiment configs.
//! Rationals are written as strings, reals in shortest round-trip form.

use std::collections::BTreeMap;

use serde::Serialize;
use stable_partitions::exact::{
    exact_expected_partitions, exact_rank_gf, exact_stability_probability_of_shape, gamma_quarter, leading_constant,
    rational_to_f64, second_moment_constant,
};
use stable_partitions::{CyclicPartition, PreferenceInstance, ShapeSpec};
use stable_partitions::solver::solve_report;

use crate::error::CliResult;

#[derive(Debug, Serialize)]
pub struct ExactValue {
    pub value: String,
    pub approx: f64,
}

impl ExactValue {
    fn of(r: &num_rational::BigRational) -> Self {
        ExactValue {
            value: r.to_string(),
            approx: rational_to_f64(r),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ProbReport {
    pub shape: String,
    #[serde(flatten)]
    pub probability: ExactValue,
}

pub fn exact_prob(shape: &ShapeSpec, pair_cap: usize) -> CliResult<ProbReport> {
    let p = exact_stability_probability_of_shape(shape, pair_cap)?;
    Ok(ProbReport {
        shape: shape.to_string(),
        probability: ExactValue::of(&p),
    })
}

#[derive(Debug, Serialize)]
pub struct GfReport {
    pub shape: String,
    pub coefficients: BTreeMap<u32, String>,
    pub min_power: Option<u32>,
    pub at_one: String,
}

pub fn exact_gf(shape: &ShapeSpec, pair_cap: usize) -> CliResult<GfReport> {
    let gf = exact_rank_gf(&shape.representative(), pair_cap)?;
    let one = num_rational::BigRational::from_integer(1.into());
    Ok(GfReport {
        shape: shape.to_string(),
        coefficients: gf.terms().map(|(k, c)| (k, c.to_string())).collect(),
        min_power: gf.min_power(),
        at_one: gf.eval(&one).to_string(),
    })
}

#[derive(Debug, Serialize)]
pub struct ExpectedReport {
    pub n: usize,
    pub with_fixed_point: bool,
    #[serde(flatten)]
    pub expected: ExactValue,
}

pub fn exact_expected(n: usize, with_fixed_point: bool, pair_cap: usize) -> CliResult<ExpectedReport> {
    let e = exact_expected_partitions(n, with_fixed_point, pair_cap)?;
    Ok(ExpectedReport {
        n,
        with_fixed_point,
        expected: ExactValue::of(&e),
    })
}

#[derive(Debug, Serialize)]
pub struct Constants {
    pub second_moment_constant: f64,
    pub leading_constant: f64,
    pub gamma_quarter: f64,
    pub e_half: f64,
}

pub fn constants() -> Constants {
    Constants {
        second_moment_constant: second_moment_constant(),
        leading_constant: leading_constant(),
        gamma_quarter: gamma_quarter(),
        e_half: 0.5f64.exp(),
    }
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub partition: serde_json::Value,
    pub cycles: String,
    pub odd_parties: Vec<Vec<usize>>,
    pub solvable: bool,
    pub max_matching_size: usize,
    pub heuristic_blocking_count: Option<usize>,
}

pub fn solve(inst: &PreferenceInstance) -> SolveOutput {
    let report = solve_report(inst);
    let pi: &CyclicPartition = &report.result.partition;
    let one_based = |c: &Vec<usize>| c.iter().map(|&i| i + 1).collect::<Vec<_>>();
    SolveOutput {
        partition: serde_json::from_str(&pi.to_json()).expect("partition JSON is valid"),
        cycles: pi.to_string(),
        odd_parties: pi.odd_parties().iter().map(one_based).collect(),
        solvable: report.result.solvable,
        max_matching_size: report.max_matching.size(),
        heuristic_blocking_count: report.heuristic.map(|h| h.blocking_count),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s
}
