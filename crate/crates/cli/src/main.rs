//! `stablepart`: generate instances, solve and verify them, enumerate
//! stable partitions, evaluate exact formulas and run seeded experiments.
//!
//! Exit status is 0 on success, 1 on invalid input (and for `verify`, an
//! unstable partition) and 2 when a size cap refuses the request.

mod config;
mod error;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stable_partitions::enumerate::{enumerate_all_stable_partitions, enumerate_stable_partitions, ShapeSpec, DEFAULT_CAP};
use stable_partitions::exact::{DEFAULT_GF_PAIR_CAP, DEFAULT_PROB_PAIR_CAP};
use stable_partitions::partition::{is_doubly_stable, is_exchange_stable, is_stable};
use stable_partitions::{CyclicPartition, PreferenceInstance, StabilityVerdict};

use config::{EstimateJob, EstimateKind, ExperimentConfig, ProposalKind};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "stablepart", version, about = "Stable cyclic partitions of random roommates instances")]
struct Cli {
    /// Worker threads for parallel work; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a uniform random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Permit an odd member count.
        #[arg(long)]
        allow_odd: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Solve an instance and report its odd parties.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Check a partition against an instance; exit 0 when it holds.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// File with a partition as JSON or cycle notation.
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Stable)]
        mode: Mode,
    },
    /// List every stable partition of a small instance.
    Enumerate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Include partitions with a fixed point.
        #[arg(long)]
        allow_fp: bool,
        /// Include unreduced partitions (even cycles longer than 2).
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Exact rational evaluation.
    Exact {
        #[command(subcommand)]
        what: ExactCommand,
    },
    /// Monte Carlo estimates.
    Estimate {
        #[command(subcommand)]
        what: EstimateCommand,
    },
    /// Run the jobs of a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the asymptotic constants.
    Constants {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum ExactCommand {
    /// Stability probability of a shape.
    Prob {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = DEFAULT_PROB_PAIR_CAP)]
        pair_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Rank generating function of a shape.
    Gf {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = DEFAULT_GF_PAIR_CAP)]
        pair_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Expected number of stable reduced partitions.
    Expected {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        with_fp: bool,
        #[arg(long, default_value_t = DEFAULT_PROB_PAIR_CAP)]
        pair_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print the asymptotic constants.
    Constants {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum EstimateCommand {
    /// Importance-sampling estimate of a shape's stability probability.
    Stability {
        #[arg(long)]
        shape: String,
        #[arg(long, value_enum, default_value_t = ProposalArg::Exponential)]
        proposal: ProposalArg,
        /// Exponential rate; defaults to sqrt(n + m).
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Stability frequency on simulated instances.
    Latent {
        #[arg(long)]
        shape: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Rank generating function at one point.
    Gf {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        z: f64,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Probability that two partitions are both stable.
    Pair {
        /// Cycle notation, e.g. "(1 2)(3 4)".
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        /// Simulate instances instead of integrating.
        #[arg(long)]
        latent: bool,
        #[command(flatten)]
        sampling: Sampling,
    },
}

#[derive(Args)]
struct Out {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stable,
    Exchange,
    Double,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProposalArg {
    Uniform,
    Exponential,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .expect("global pool is configured once");
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(stable_partitions::Error::CapExceeded { .. }) = e {
                eprintln!("hint: raise the cap flag if the run is really wanted");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_instance(path: &Path) -> CliResult<PreferenceInstance> {
    Ok(PreferenceInstance::parse(&read(path)?)?)
}

fn emit(out: &Out, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn stdout(text: &str) -> CliResult<()> {
    emit(&Out { out: None }, text)
}

fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Gen {
            n,
            seed,
            format,
            allow_odd,
            out,
        } => {
            if n % 2 == 1 && !allow_odd {
                return Err(CliError::Usage(format!("n = {n} is odd; pass --allow-odd to generate it anyway")));
            }
            let inst = PreferenceInstance::generate_uniform(n, seed)?;
            let text = match format {
                Format::Text => inst.to_text(),
                Format::Json => inst.to_json() + "\n",
            };
            emit(&out, &text)?;
        }
        Command::Solve { input, out } => {
            let inst = read_instance(&input)?;
            emit(&out, &report::to_json(&report::solve(&inst)))?;
        }
        Command::Verify { input, partition, mode } => {
            let inst = read_instance(&input)?;
            let pi = CyclicPartition::parse(&read(&partition)?)?;
            let verdict = match mode {
                Mode::Stable => is_stable(&inst, &pi)?,
                Mode::Exchange => is_exchange_stable(&inst, &pi)?,
                Mode::Double => is_doubly_stable(&inst, &pi)?,
            };
            return Ok(match verdict {
                StabilityVerdict::Stable => {
                    stdout(&format!("stable: {pi}\n"))?;
                    0
                }
                StabilityVerdict::Unstable(w) => {
                    stdout(&format!("unstable: {pi}\nwitness: {w}\n"))?;
                    1
                }
            });
        }
        Command::Enumerate {
            input,
            allow_fp,
            all,
            cap,
            csv,
            out,
        } => {
            let inst = read_instance(&input)?;
            let list = if all {
                enumerate_all_stable_partitions(&inst, cap)?
            } else {
                enumerate_stable_partitions(&inst, allow_fp, cap)?
            };
            emit(&out, &enumeration_listing(&list, csv))?;
        }
        Command::Exact { what } => exact(what)?,
        Command::Estimate { what } => {
            let (job, seed) = estimate_job(what);
            stdout(&report::to_json(&config::run_estimate(&job, seed)?))?;
        }
        Command::Experiment { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out_dir.unwrap_or_else(|| cfg.out_dir.clone());
            let written = config::run(&cfg, &dir, &mut |msg| eprintln!("{msg}"))?;
            let listing: String = written.iter().map(|p| format!("{}\n", p.display())).collect();
            stdout(&listing)?;
        }
        Command::Constants { json } => constants(json)?,
    }
    Ok(0)
}

fn shape_label(pi: &CyclicPartition) -> String {
    let mut lengths: Vec<usize> = pi.cycles().iter().map(Vec::len).filter(|&l| l > 1).collect();
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    let body = lengths.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    if pi.has_fixed_point() {
        format!("{body}+fp")
    } else {
        body
    }
}

fn enumeration_listing(list: &[CyclicPartition], csv: bool) -> String {
    let mut counts: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    for pi in list {
        *counts.entry(shape_label(pi)).or_default() += 1;
    }
    let mut out = String::new();
    if csv {
        out.push_str("kind,partition,shape,count\n");
        for pi in list {
            out.push_str(&format!("partition,{pi},\"{}\",\n", shape_label(pi)));
        }
        for (shape, count) in &counts {
            out.push_str(&format!("shape,,\"{shape}\",{count}\n"));
        }
        out.push_str(&format!("total,,,{}\n", list.len()));
    } else {
        for pi in list {
            out.push_str(&format!("{pi}\n"));
        }
        let summary: Vec<String> = counts.iter().map(|(s, c)| format!("{s}: {c}")).collect();
        out.push_str(&format!("# {} stable; {}\n", list.len(), summary.join("; ")));
    }
    out
}

fn exact(what: ExactCommand) -> CliResult<()> {
    match what {
        ExactCommand::Prob { shape, pair_cap, json } => {
            let r = report::exact_prob(&shape.parse::<ShapeSpec>()?, pair_cap)?;
            stdout(&if json { report::to_json(&r) } else { format!("{}\n", r.probability.value) })
        }
        ExactCommand::Gf { shape, pair_cap, json } => {
            let r = report::exact_gf(&shape.parse::<ShapeSpec>()?, pair_cap)?;
            if json {
                return stdout(&report::to_json(&r));
            }
            let mut text: String = r.coefficients.iter().map(|(k, c)| format!("z^{k}\t{c}\n")).collect();
            text.push_str(&format!("# at z=1: {}\n", r.at_one));
            stdout(&text)
        }
        ExactCommand::Expected {
            n,
            with_fp,
            pair_cap,
            json,
        } => {
            let r = report::exact_expected(n, with_fp, pair_cap)?;
            stdout(&if json { report::to_json(&r) } else { format!("{}\n", r.expected.value) })
        }
        ExactCommand::Constants { json } => constants(json),
    }
}

fn constants(json: bool) -> CliResult<()> {
    let c = report::constants();
    if json {
        return stdout(&report::to_json(&c));
    }
    stdout(&format!(
        "second_moment_constant\t{}\nleading_constant\t{}\ngamma_quarter\t{}\ne_half\t{}\n",
        c.second_moment_constant, c.leading_constant, c.gamma_quarter, c.e_half
    ))
}

fn estimate_job(what: EstimateCommand) -> (EstimateJob, u64) {
    let base = EstimateJob::default();
    match what {
        EstimateCommand::Stability {
            shape,
            proposal,
            beta,
            sampling,
        } => (
            EstimateJob {
                kind: EstimateKind::Stability,
                shape,
                proposal: match proposal {
                    ProposalArg::Uniform => ProposalKind::Uniform,
                    ProposalArg::Exponential => ProposalKind::Exponential,
                },
                beta,
                samples: sampling.samples,
                ..base
            },
            sampling.seed,
        ),
        EstimateCommand::Latent { shape, sampling } => (
            EstimateJob {
                kind: EstimateKind::Latent,
                shape,
                samples: sampling.samples,
                ..base
            },
            sampling.seed,
        ),
        EstimateCommand::Gf { shape, z, sampling } => (
            EstimateJob {
                kind: EstimateKind::RankGf,
                shape,
                z,
                samples: sampling.samples,
                ..base
            },
            sampling.seed,
        ),
        EstimateCommand::Pair {
            first,
            second,
            latent,
            sampling,
        } => (
            EstimateJob {
                kind: if latent { EstimateKind::LatentPair } else { EstimateKind::Pair },
                first,
                second,
                samples: sampling.samples,
                ..base
            },
            sampling.seed,
        ),
    }
}
