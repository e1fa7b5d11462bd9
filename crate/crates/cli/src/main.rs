//! `srank1`: sparse rank-1 tensor approximation from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparse_rank1::am::{DEFAULT_AM_TOL, DEFAULT_MAX_SWEEPS};
use sparse_rank1::bench::{gen_cluster_synthetic, gen_sparse_cp, run_experiment, ExperimentSpec};
use sparse_rank1::io::{read_samples, read_sten, write_assignment, write_assignment_csv, write_sten};
use sparse_rank1::{
    am_l0, am_l1, approximate, brute_force_oracle, random_feasible, upper_bound, AmConfig, AmModel, Algorithm,
    DeflationConfig, DenseTensor, Error, GapRule, Init, KChoice, Rank1Result, SparsityBudget, StcConfig,
};

#[derive(Parser)]
#[command(name = "srank1", version, about = "Sparse tensor best rank-1 approximation")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted (required by `gen`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// AM stopping tolerance on the largest block change.
    #[arg(long, global = true, default_value_t = DEFAULT_AM_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic tensor or clustering data set.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Run one of the approximation algorithms A, B, C or D.
    Approx {
        #[arg(long, value_parser = parse_alg)]
        alg: Algorithm,
        #[command(flatten)]
        problem: Problem,
    },
    /// Refine an initial point by alternating maximization.
    Refine {
        #[arg(long, value_enum, default_value_t = Model::L0)]
        model: Model,
        #[arg(long, default_value = "D", value_parser = parse_init)]
        init: Init,
        /// ℓ1 penalties, one value or one per mode.
        #[arg(long, value_delimiter = ',', default_value = "0.2")]
        rho: Vec<f64>,
        #[command(flatten)]
        problem: Problem,
    },
    /// Exhaustive support search; only for tiny instances.
    Oracle {
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[command(flatten)]
        problem: Problem,
    },
    /// Cluster tensor samples and write `sample_index,label` CSV.
    Cluster {
        /// Directory of equal-shape `.sten` samples.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        dir: Option<PathBuf>,
        /// One tensor whose last mode indexes samples.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        ranks: Vec<usize>,
        /// Sample-mode budgets, `;` between candidates, e.g. `7,7;8,8`.
        #[arg(long)]
        budgets: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        k_candidates: Vec<usize>,
        /// Fixed cluster count; skips the gap statistic.
        #[arg(long, conflicts_with = "k_candidates")]
        k: Option<usize>,
        #[arg(long, default_value = "global", value_parser = parse_gap_rule)]
        gap_rule: GapRule,
        #[arg(long, default_value = "D", value_parser = parse_init)]
        init: Init,
    },
    /// Run an experiment spec file and write its CSV table.
    Bench { spec: PathBuf },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Sum of `rank` sparse Gaussian outer products.
    SparseCp {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        rank: usize,
        /// Fraction of each factor set to zero.
        #[arg(long, default_value_t = 0.5)]
        sparsity: f64,
    },
    /// Four-group 20×20 samples; writes a directory with `truth.csv`.
    Cluster {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        /// Write one stacked tensor instead of a directory.
        #[arg(long)]
        stacked: bool,
    },
}

#[derive(Args)]
struct Problem {
    #[arg(long)]
    input: PathBuf,
    /// Per-mode cardinalities; full dimensions when omitted.
    #[arg(long, value_delimiter = ',')]
    budget: Option<Vec<usize>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    L0,
    L1,
}

fn parse_alg(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> Result<Init, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_gap_rule(s: &str) -> Result<GapRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_budgets(s: &str) -> sparse_rank1::Result<Vec<Vec<usize>>> {
    s.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad budget entry '{v}'")))
                })
                .collect()
        })
        .collect()
}

impl Problem {
    fn load(&self) -> sparse_rank1::Result<(DenseTensor, SparsityBudget)> {
        let t = read_sten(&self.input)?;
        let budget = match &self.budget {
            Some(r) => SparsityBudget::new(r.clone())?,
            None => SparsityBudget::full(t.shape()),
        };
        budget.validate(t.shape())?;
        Ok((t, budget))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",")
}

fn report(t: &DenseTensor, res: &Rank1Result) -> sparse_rank1::Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "algorithm,{}", res.algorithm);
    let _ = writeln!(s, "value,{:.12e}", res.value);
    let _ = writeln!(s, "upper_bound,{:.12e}", upper_bound(t)?);
    for (j, x) in res.factors.factors().iter().enumerate() {
        let _ = writeln!(s, "x{},{}", j + 1, join(x.as_slice()));
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> sparse_rank1::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn require_out(out: Option<&Path>) -> sparse_rank1::Result<&Path> {
    out.ok_or_else(|| Error::InvalidArgument("--out is required".into()))
}

fn run(cli: Cli) -> sparse_rank1::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    let am = |model| AmConfig {
        tol: cli.tol,
        max_sweeps: cli.max_sweeps,
        model,
    };
    match cli.cmd {
        Cmd::Gen { what } => {
            let out = require_out(out)?;
            match what {
                GenCmd::SparseCp { dims, rank, sparsity } => {
                    write_sten(out, &gen_sparse_cp(&dims, rank, sparsity, seed)?)?;
                }
                GenCmd::Cluster {
                    samples,
                    noise,
                    mu,
                    stacked,
                } => {
                    let data = gen_cluster_synthetic(samples, noise, mu, seed)?;
                    if stacked {
                        write_sten(out, &data.tensor)?;
                    } else {
                        std::fs::create_dir_all(out)?;
                        for (i, s) in data.samples()?.iter().enumerate() {
                            write_sten(&out.join(format!("sample_{:04}.sten", i + 1)), s)?;
                        }
                        write_assignment_csv(&out.join("truth.csv"), &data.truth)?;
                    }
                }
            }
        }
        Cmd::Approx { alg, problem } => {
            let (t, budget) = problem.load()?;
            let res = approximate(&t, &budget, alg)?;
            emit(out, &report(&t, &res)?)?;
        }
        Cmd::Oracle { restarts, problem } => {
            let (t, budget) = problem.load()?;
            let res = brute_force_oracle(&t, &budget, restarts)?;
            emit(out, &report(&t, &res)?)?;
        }
        Cmd::Refine {
            model,
            init,
            rho,
            problem,
        } => {
            let (t, budget) = problem.load()?;
            let start = match init {
                Init::Approx(alg) => approximate(&t, &budget, alg)?.factors,
                Init::Random => random_feasible(t.shape(), &budget, seed)?,
            };
            let init_value = t.multilinear_value(start.factors())?;
            let mut s = String::new();
            let _ = writeln!(s, "model,{}", if matches!(model, Model::L0) { "l0" } else { "l1" });
            let _ = writeln!(s, "init,{init}");
            let _ = writeln!(s, "init_value,{init_value:.12e}");
            match model {
                Model::L0 => {
                    let (res, trace) = am_l0(&t, &budget, &start, &am(AmModel::L0))?;
                    let _ = writeln!(s, "sweeps,{}", trace.sweeps_used);
                    let _ = writeln!(s, "converged,{}", trace.converged);
                    s.push_str(&report(&t, &res)?);
                }
                Model::L1 => {
                    let raw: Vec<Vec<f64>> = start.factors().iter().map(|x| x.to_vec()).collect();
                    let (res, trace) = am_l1(&t, &raw, &am(AmModel::L1 { rho }))?;
                    let _ = writeln!(s, "sweeps,{}", trace.sweeps_used);
                    let _ = writeln!(s, "converged,{}", trace.converged);
                    let _ = writeln!(s, "value,{:.12e}", res.value);
                    let _ = writeln!(s, "penalized_objective,{:.12e}", res.penalized_objective);
                    for (j, x) in res.factors.iter().enumerate() {
                        let _ = writeln!(s, "x{},{}", j + 1, join(x));
                    }
                }
            }
            emit(out, &s)?;
        }
        Cmd::Cluster {
            dir,
            input,
            ranks,
            budgets,
            k_candidates,
            k,
            gap_rule,
            init,
        } => {
            let path = dir.or(input).expect("clap enforces one source");
            let samples = read_samples(&path)?;
            let cfg = StcConfig {
                ranks,
                budgets: parse_budgets(&budgets)?,
                k: match k {
                    Some(k) => KChoice::Fixed(k),
                    None => KChoice::Gap {
                        candidates: k_candidates,
                        rule: gap_rule,
                    },
                },
                deflation: DeflationConfig {
                    init,
                    am: am(AmModel::L0),
                    seed,
                },
                seed,
            };
            let res = sparse_rank1::stc_pipeline(&samples, &cfg)?;
            eprintln!(
                "rank {} budget {} k {}",
                res.choice.rank,
                res.choice.budget,
                res.assignment.k()
            );
            match out {
                Some(p) => write_assignment_csv(p, &res.assignment)?,
                None => write_assignment(std::io::stdout().lock(), &res.assignment)?,
            }
        }
        Cmd::Bench { spec } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            if let Some(p) = out {
                spec.output = Some(p.to_path_buf());
            }
            let table = run_experiment(&spec)?;
            match &spec.output {
                Some(p) => table.write_path(p)?,
                None => table.write_to(std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
