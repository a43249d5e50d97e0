//! Experiment configuration files and the runner behind `experiment`.
//!
//! A config is a TOML document of job lists. Every field has a default and
//! unknown keys are rejected. Each job writes deterministic artifacts into
//! the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stable_partitions::enumerate::{ShapeSpec, DEFAULT_CAP};
use stable_partitions::exact::{DEFAULT_GF_PAIR_CAP, DEFAULT_PROB_PAIR_CAP};
use stable_partitions::mc::{
    bound_check_pair, bound_check_single, instance_experiment, latent_pair_frequency, latent_stability_frequency,
    mc_pair_probability, mc_rank_gf_point, mc_stability_probability, structure_suite, BoundCheck, EstimateResult,
    ExperimentOptions, Proposal, StructureReport,
};
use stable_partitions::CyclicPartition;

use crate::error::{CliError, CliResult};
use crate::report;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Permit odd member counts in instance jobs.
    pub allow_odd: bool,
    pub constants: bool,
    pub instances: Vec<InstanceJob>,
    pub structure: Vec<StructureJob>,
    pub estimates: Vec<EstimateJob>,
    pub exact: Vec<ExactJob>,
    pub bounds: Vec<BoundJob>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            out_dir: PathBuf::from("results"),
            allow_odd: false,
            constants: false,
            instances: Vec::new(),
            structure: Vec::new(),
            estimates: Vec::new(),
            exact: Vec::new(),
            bounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceJob {
    pub name: String,
    pub n: Vec<usize>,
    pub trials: u64,
    pub seed: Option<u64>,
    pub enumerate: bool,
    pub heuristic: bool,
    pub enum_cap: usize,
}

impl Default for InstanceJob {
    fn default() -> Self {
        InstanceJob {
            name: "instances".into(),
            n: vec![10],
            trials: 100,
            seed: None,
            enumerate: true,
            heuristic: true,
            enum_cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureJob {
    pub name: String,
    pub n: Vec<usize>,
    pub trials: u64,
    pub seed: Option<u64>,
    pub enum_cap: usize,
}

impl Default for StructureJob {
    fn default() -> Self {
        StructureJob {
            name: "structure".into(),
            n: vec![6],
            trials: 100,
            seed: None,
            enum_cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Stability,
    Latent,
    RankGf,
    Pair,
    LatentPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    Uniform,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateJob {
    pub name: String,
    pub kind: EstimateKind,
    pub shape: String,
    /// Partitions in cycle notation, for the pair kinds.
    pub first: String,
    pub second: String,
    pub samples: u64,
    pub seed: Option<u64>,
    pub proposal: ProposalKind,
    /// Defaults to `√(n + m)`.
    pub beta: Option<f64>,
    pub z: f64,
}

impl Default for EstimateJob {
    fn default() -> Self {
        EstimateJob {
            name: "estimate".into(),
            kind: EstimateKind::Stability,
            shape: "2,2".into(),
            first: "(1 2)(3 4)".into(),
            second: "(1 4)(2 3)".into(),
            samples: 100_000,
            seed: None,
            proposal: ProposalKind::Exponential,
            beta: None,
            z: 0.5,
        }
    }
}

pub fn proposal_for(kind: ProposalKind, beta: Option<f64>, pi: &CyclicPartition) -> Proposal {
    match (kind, beta) {
        (ProposalKind::Uniform, _) => Proposal::Uniform,
        (ProposalKind::Exponential, Some(beta)) => Proposal::Exponential { beta },
        (ProposalKind::Exponential, None) => Proposal::default_for(pi),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactKind {
    Prob,
    Gf,
    Expected,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactJob {
    pub name: String,
    pub kind: ExactKind,
    pub shape: String,
    pub n: usize,
    pub with_fixed_point: bool,
    pub pair_cap: Option<usize>,
}

impl Default for ExactJob {
    fn default() -> Self {
        ExactJob {
            name: "exact".into(),
            kind: ExactKind::Prob,
            shape: "2,2".into(),
            n: 4,
            with_fixed_point: false,
            pair_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Single,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundJob {
    pub name: String,
    pub kind: BoundKind,
    pub n: usize,
    pub vectors: u64,
    pub seed: Option<u64>,
}

impl Default for BoundJob {
    fn default() -> Self {
        BoundJob {
            name: "bound".into(),
            kind: BoundKind::Single,
            n: 50,
            vectors: 100_000,
            seed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        let mut names: Vec<&str> = Vec::new();
        names.extend(self.instances.iter().map(|j| j.name.as_str()));
        names.extend(self.structure.iter().map(|j| j.name.as_str()));
        for name in &names {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(CliError::Config(format!("job name {name:?} must be non-empty ASCII letters, digits, '_' or '-'")));
            }
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!("job name {:?} is used twice", w[0])));
        }
        if !self.allow_odd {
            for job in &self.instances {
                if let Some(n) = job.n.iter().find(|&&n| n % 2 == 1) {
                    return Err(CliError::Config(format!(
                        "instance job {:?} has odd n = {n}; set allow_odd = true to permit it",
                        job.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct InstanceSummary<'a> {
    n: usize,
    trials: u64,
    seed: u64,
    skipped: &'a [String],
    columns: Vec<EstimateResult>,
}

#[derive(Debug, Serialize)]
struct Named<T: Serialize> {
    name: String,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Serialize)]
struct EstimateRecord {
    kind: EstimateKind,
    result: EstimateResult,
}

#[derive(Debug, Serialize)]
struct BoundRecord {
    kind: BoundKind,
    n: usize,
    seed: u64,
    #[serde(flatten)]
    result: BoundCheck,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum ExactRecord {
    Prob(report::ProbReport),
    Gf(report::GfReport),
    Expected(report::ExpectedReport),
}

fn write(dir: &Path, file: &str, contents: &str, written: &mut Vec<PathBuf>) -> CliResult<()> {
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn shape(text: &str) -> CliResult<ShapeSpec> {
    Ok(text.parse::<ShapeSpec>()?)
}

/// Runs every job and returns the artifact paths in write order.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, log: &mut dyn FnMut(&str)) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();

    if cfg.constants {
        log("constants");
        write(out_dir, "constants.json", &report::to_json(&report::constants()), &mut written)?;
    }

    if !cfg.exact.is_empty() {
        let mut records = Vec::new();
        for job in &cfg.exact {
            log(&format!("exact {}", job.name));
            let body = match job.kind {
                ExactKind::Prob => {
                    ExactRecord::Prob(report::exact_prob(&shape(&job.shape)?, job.pair_cap.unwrap_or(DEFAULT_PROB_PAIR_CAP))?)
                }
                ExactKind::Gf => ExactRecord::Gf(report::exact_gf(&shape(&job.shape)?, job.pair_cap.unwrap_or(DEFAULT_GF_PAIR_CAP))?),
                ExactKind::Expected => ExactRecord::Expected(report::exact_expected(
                    job.n,
                    job.with_fixed_point,
                    job.pair_cap.unwrap_or(DEFAULT_PROB_PAIR_CAP),
                )?),
            };
            records.push(Named {
                name: job.name.clone(),
                body,
            });
        }
        write(out_dir, "exact.json", &report::to_json(&records), &mut written)?;
    }

    for job in &cfg.structure {
        let seed = job.seed.unwrap_or(cfg.seed);
        let mut reports: Vec<StructureReport> = Vec::new();
        for &n in &job.n {
            log(&format!("structure {} n={n}", job.name));
            reports.push(structure_suite(n, job.trials, seed, job.enum_cap)?);
        }
        write(out_dir, &format!("{}.json", job.name), &report::to_json(&reports), &mut written)?;
    }

    for job in &cfg.instances {
        let seed = job.seed.unwrap_or(cfg.seed);
        let opts = ExperimentOptions {
            enumerate: job.enumerate,
            heuristic: job.heuristic,
            enum_cap: job.enum_cap,
        };
        for &n in &job.n {
            log(&format!("instances {} n={n}", job.name));
            let result = instance_experiment(n, job.trials, seed, opts)?;
            for reason in &result.skipped {
                log(&format!("  skipped {reason}"));
            }
            write(out_dir, &format!("{}_n{n}.csv", job.name), &result.to_csv(true), &mut written)?;
            let summary = InstanceSummary {
                n,
                trials: job.trials,
                seed,
                skipped: &result.skipped,
                columns: result.summary(),
            };
            write(out_dir, &format!("{}_n{n}_summary.json", job.name), &report::to_json(&summary), &mut written)?;
        }
    }

    if !cfg.estimates.is_empty() {
        let mut records = Vec::new();
        for job in &cfg.estimates {
            log(&format!("estimate {}", job.name));
            let seed = job.seed.unwrap_or(cfg.seed);
            let result = run_estimate(job, seed)?;
            records.push(Named {
                name: job.name.clone(),
                body: EstimateRecord { kind: job.kind, result },
            });
        }
        write(out_dir, "estimates.json", &report::to_json(&records), &mut written)?;
    }

    if !cfg.bounds.is_empty() {
        let mut records = Vec::new();
        for job in &cfg.bounds {
            log(&format!("bound {}", job.name));
            let seed = job.seed.unwrap_or(cfg.seed);
            let result = match job.kind {
                BoundKind::Single => bound_check_single(job.vectors, job.n, seed)?,
                BoundKind::Pair => bound_check_pair(job.vectors, job.n, seed)?,
            };
            records.push(Named {
                name: job.name.clone(),
                body: BoundRecord {
                    kind: job.kind,
                    n: job.n,
                    seed,
                    result,
                },
            });
        }
        write(out_dir, "bounds.json", &report::to_json(&records), &mut written)?;
    }

    Ok(written)
}

pub fn run_estimate(job: &EstimateJob, seed: u64) -> CliResult<EstimateResult> {
    let pair = || -> CliResult<(CyclicPartition, CyclicPartition)> {
        let p1 = CyclicPartition::parse_cycles(&job.first)?;
        let p2 = CyclicPartition::parse_cycles(&job.second)?;
        if p1.n() != p2.n() {
            return Err(CliError::Usage(format!("{} and {} have different sizes", job.first, job.second)));
        }
        Ok((p1, p2))
    };
    Ok(match job.kind {
        EstimateKind::Stability => {
            let pi = shape(&job.shape)?.representative();
            mc_stability_probability(&pi, job.samples, seed, proposal_for(job.proposal, job.beta, &pi))?
        }
        EstimateKind::Latent => latent_stability_frequency(&shape(&job.shape)?.representative(), job.samples, seed)?,
        EstimateKind::RankGf => mc_rank_gf_point(&shape(&job.shape)?.representative(), job.z, job.samples, seed)?,
        EstimateKind::Pair => {
            let (p1, p2) = pair()?;
            mc_pair_probability(&p1, &p2, job.samples, seed)?
        }
        EstimateKind::LatentPair => {
            let (p1, p2) = pair()?;
            latent_pair_frequency(&p1, &p2, job.samples, seed)?
        }
    })
}
