//! Synthetic data generators and the experiment harness.
//!
//! Experiments are described by flat `key = value` spec files and produce
//! CSV tables whose first line is a `# kind=... version=1` comment.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::am::{am_l0, am_l1, random_feasible, AmConfig, AmModel};
use crate::clustering::{
    cluster_error, initialize, stc_on_tensor, vanilla_kmeans, ClusterAssignment, DeflationConfig, GapRule,
    Init, KChoice, StcConfig,
};
use crate::error::{Error, Result};
use crate::rank1::{approximate, upper_bound, Algorithm, SparsityBudget};
use crate::tensor::DenseTensor;

pub const CSV_VERSION: u32 = 1;

fn normal_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

/// `Σ_{i=1}^{R} u_i^{(1)}∘⋯∘u_i^{(d)}` with standard normal factors, each
/// having `⌊sr·n_j⌋` entries zeroed at uniformly random positions.
pub fn gen_sparse_cp(shape: &[usize], rank: usize, sparsity_ratio: f64, seed: u64) -> Result<DenseTensor> {
    if !(0.0..1.0).contains(&sparsity_ratio) {
        return Err(Error::InvalidArgument(format!(
            "sparsity ratio must lie in [0, 1), got {sparsity_ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = DenseTensor::zeros(shape)?;
    for _ in 0..rank {
        let factors: Vec<Vec<f64>> = shape
            .iter()
            .map(|&n| {
                let mut v = normal_vec(n, &mut rng);
                let zeros = (sparsity_ratio * n as f64 + 1e-9).floor() as usize;
                for i in sample(&mut rng, n, zeros.min(n)) {
                    v[i] = 0.0;
                }
                v
            })
            .collect();
        t.add_outer(&factors, 1.0)?;
    }
    Ok(t)
}

const BLOCK_V: [f64; 4] = [1.0, -1.0, 0.5, -0.5];
pub const CLUSTER_SIDE: usize = 20;

/// Noise-free sample of group `g ∈ 1..=4`: `μ³·diag(s₁Σ, s₂Σ, 0)` with
/// `Σ = v vᵀ` and signs `(+,−)`, `(+,+)`, `(−,+)`, `(−,−)`.
pub fn cluster_block(group: usize, mu: f64) -> Result<DenseTensor> {
    let (s1, s2) = match group {
        1 => (1.0, -1.0),
        2 => (1.0, 1.0),
        3 => (-1.0, 1.0),
        4 => (-1.0, -1.0),
        _ => return Err(Error::InvalidArgument(format!("group {group} outside 1..=4"))),
    };
    let scale = mu.powi(3);
    DenseTensor::from_fn(&[CLUSTER_SIDE, CLUSTER_SIDE], |idx| {
        let (i, j) = (idx[0], idx[1]);
        match (i / 4, j / 4) {
            (0, 0) => s1 * scale * BLOCK_V[i] * BLOCK_V[j],
            (1, 1) => s2 * scale * BLOCK_V[i - 4] * BLOCK_V[j - 4],
            _ => 0.0,
        }
    })
}

#[derive(Debug, Clone)]
pub struct ClusterData {
    /// `𝒯/‖𝒯‖_F + σℰ/‖ℰ‖_F`, samples along the last mode.
    pub tensor: DenseTensor,
    pub truth: ClusterAssignment,
}

impl ClusterData {
    pub fn samples(&self) -> Result<Vec<DenseTensor>> {
        let n = *self.tensor.shape().last().expect("order 3");
        (0..n).map(|i| self.tensor.last_mode_slice(i)).collect()
    }
}

/// `n/4` samples of each group, stacked, normalized, and perturbed by
/// Gaussian noise of relative size `sigma`.
pub fn gen_cluster_synthetic(n: usize, sigma: f64, mu: f64, seed: u64) -> Result<ClusterData> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::BadN(format!("sample count {n} must be a positive multiple of 4")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be nonnegative, got {sigma}")));
    }
    let blocks: Vec<DenseTensor> = (1..=4).map(|g| cluster_block(g, mu)).collect::<Result<_>>()?;
    let samples: Vec<DenseTensor> = (0..n).map(|i| blocks[i / (n / 4)].clone()).collect();
    let clean = crate::clustering::stack_samples(&samples)?;
    let norm_t = clean.frobenius_norm();
    if norm_t == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let mut data: Vec<f64> = clean.data().iter().map(|x| x / norm_t).collect();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = normal_vec(data.len(), &mut rng);
        let norm_e = crate::tensor::norm(&e);
        data.iter_mut().zip(&e).for_each(|(x, z)| *x += sigma * z / norm_e);
    }
    Ok(ClusterData {
        tensor: DenseTensor::new(clean.shape().to_vec(), data)?,
        truth: ClusterAssignment::equal_groups(n, 4)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Rank1Sweep,
    SparsitySweep,
    AmComparison,
    L1Comparison,
    Clustering,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Rank1Sweep => "rank1-sweep",
            ExperimentKind::SparsitySweep => "sparsity-sweep",
            ExperimentKind::AmComparison => "am-comparison",
            ExperimentKind::L1Comparison => "l1-comparison",
            ExperimentKind::Clustering => "clustering",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rank1-sweep" => Ok(ExperimentKind::Rank1Sweep),
            "sparsity-sweep" => Ok(ExperimentKind::SparsitySweep),
            "am-comparison" => Ok(ExperimentKind::AmComparison),
            "l1-comparison" => Ok(ExperimentKind::L1Comparison),
            "clustering" => Ok(ExperimentKind::Clustering),
            other => Err(Error::Parse(format!("unknown experiment kind '{other}'"))),
        }
    }
}

/// Clustering method column of the clustering experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterMethod {
    Stc(Init),
    Vanilla,
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterMethod::Stc(init) => write!(f, "STC({init})"),
            ClusterMethod::Vanilla => f.write_str("kmeans"),
        }
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("kmeans") || s.eq_ignore_ascii_case("vanilla") {
            return Ok(ClusterMethod::Vanilla);
        }
        let inner = s
            .strip_prefix("STC(")
            .or_else(|| s.strip_prefix("stc("))
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(s);
        inner.parse().map(ClusterMethod::Stc)
    }
}

/// One experiment. Unset keys take the defaults below.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Mode sizes `n` (all modes equal).
    pub dims: Vec<usize>,
    pub orders: Vec<usize>,
    /// CP rank of the generator.
    pub rank: usize,
    /// Generator sparsity ratios `sr`.
    pub sparsity: Vec<f64>,
    /// `r_j = ⌊budget_ratio · n⌋`.
    pub budget_ratio: f64,
    pub instances: usize,
    pub seed: u64,
    pub rho: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub samples: Vec<usize>,
    pub noise: Vec<f64>,
    pub mu: f64,
    pub ranks: Vec<usize>,
    pub budgets: Vec<Vec<usize>>,
    pub k_candidates: Vec<usize>,
    pub gap_rule: GapRule,
    pub methods: Vec<ClusterMethod>,
    pub inits: Vec<Init>,
    /// Whether time columns are measured; off gives byte-identical reruns.
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        let (dims, sparsity) = match kind {
            ExperimentKind::SparsitySweep => (vec![100], vec![0.1, 0.3, 0.5, 0.7, 0.9]),
            ExperimentKind::AmComparison | ExperimentKind::L1Comparison => (vec![30], vec![0.7]),
            _ => (vec![20, 40, 60], vec![0.7]),
        };
        Self {
            kind,
            dims,
            orders: vec![3],
            rank: 10,
            sparsity,
            budget_ratio: 0.3,
            instances: 10,
            seed,
            rho: crate::am::DEFAULT_RHO,
            tol: crate::am::DEFAULT_AM_TOL,
            max_sweeps: crate::am::DEFAULT_MAX_SWEEPS,
            samples: vec![20],
            noise: vec![0.1, 0.5, 0.9],
            mu: 0.5,
            ranks: vec![4, 6],
            budgets: vec![vec![7, 7], vec![8, 8]],
            k_candidates: (1..=6).collect(),
            gap_rule: GapRule::default(),
            methods: vec![
                ClusterMethod::Stc(Init::Approx(Algorithm::A)),
                ClusterMethod::Stc(Init::Approx(Algorithm::B)),
                ClusterMethod::Stc(Init::Approx(Algorithm::C)),
                ClusterMethod::Stc(Init::Approx(Algorithm::D)),
                ClusterMethod::Vanilla,
            ],
            inits: vec![Init::Approx(Algorithm::C), Init::Approx(Algorithm::D), Init::Random],
            timing: true,
            output: None,
        }
    }

    /// Parse a `key = value` spec; `#` starts a comment. `kind` and `seed`
    /// are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value'", no + 1)))?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key '{key}'", no + 1)));
            }
        }
        let kind: ExperimentKind = map
            .remove("kind")
            .ok_or_else(|| Error::Parse("missing 'kind'".into()))?
            .parse()?;
        let seed = parse_one(&map.remove("seed").ok_or_else(|| Error::Parse("missing 'seed'".into()))?, "seed")?;
        let mut spec = Self::new(kind, seed);
        for (key, value) in map {
            let v = value.as_str();
            match key.as_str() {
                "dims" => spec.dims = parse_list(v, &key)?,
                "orders" => spec.orders = parse_list(v, &key)?,
                "rank" => spec.rank = parse_one(v, &key)?,
                "sparsity" => spec.sparsity = parse_list(v, &key)?,
                "budget_ratio" => spec.budget_ratio = parse_one(v, &key)?,
                "instances" => spec.instances = parse_one(v, &key)?,
                "rho" => spec.rho = parse_one(v, &key)?,
                "tol" => spec.tol = parse_one(v, &key)?,
                "max_sweeps" => spec.max_sweeps = parse_one(v, &key)?,
                "samples" => spec.samples = parse_list(v, &key)?,
                "noise" => spec.noise = parse_list(v, &key)?,
                "mu" => spec.mu = parse_one(v, &key)?,
                "ranks" => spec.ranks = parse_list(v, &key)?,
                "budgets" => {
                    spec.budgets = v
                        .split(';')
                        .map(|b| parse_list(b, &key))
                        .collect::<Result<_>>()?
                }
                "k_candidates" => spec.k_candidates = parse_list(v, &key)?,
                "gap_rule" => spec.gap_rule = parse_one(v, &key)?,
                "methods" => spec.methods = parse_list(v, &key)?,
                "inits" => spec.inits = parse_list(v, &key)?,
                "timing" => spec.timing = parse_one(v, &key)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                _ => return Err(Error::Parse(format!("unknown key '{key}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn k_choice(&self) -> KChoice {
        KChoice::Gap {
            candidates: self.k_candidates.clone(),
            rule: self.gap_rule,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, is_empty: bool| {
            if is_empty {
                Err(Error::Parse(format!("'{name}' must be nonempty")))
            } else {
                Ok(())
            }
        };
        empty("dims", self.dims.is_empty())?;
        empty("orders", self.orders.is_empty())?;
        empty("sparsity", self.sparsity.is_empty())?;
        empty("samples", self.samples.is_empty())?;
        empty("noise", self.noise.is_empty())?;
        empty("ranks", self.ranks.is_empty())?;
        empty("budgets", self.budgets.is_empty())?;
        empty("k_candidates", self.k_candidates.is_empty())?;
        empty("methods", self.methods.is_empty())?;
        empty("inits", self.inits.is_empty())?;
        if self.instances == 0 {
            return Err(Error::Parse("'instances' must be at least 1".into()));
        }
        if let Some(&d) = self.orders.iter().find(|&&d| d < 3) {
            return Err(Error::Parse(format!("order {d} is below 3")));
        }
        if self.dims.contains(&0) {
            return Err(Error::Parse("dims must be positive".into()));
        }
        Ok(())
    }
}

fn parse_one<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value '{v}' for '{key}'")))
}

fn parse_list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| parse_one(s, key)).collect()
}

/// SplitMix64 finalizer; spreads structured seeds across the seed space.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// A CSV result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: ExperimentKind,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(kind: ExperimentKind, header: &[&str]) -> Self {
        Self {
            kind,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# kind={} version={CSV_VERSION}", self.kind)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric column.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column '{name}'")))?;
        self.rows.iter().map(|r| parse_one(&r[c], name)).collect()
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

struct Timer {
    on: bool,
    start: Instant,
}

impl Timer {
    fn start(on: bool) -> Self {
        Self { on, start: Instant::now() }
    }

    fn secs(&self) -> f64 {
        if self.on {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

fn budget_for(n: usize, d: usize, ratio: f64) -> SparsityBudget {
    SparsityBudget::fraction_of(&vec![n; d], ratio)
}

const ALGS: [Algorithm; 4] = [Algorithm::A, Algorithm::B, Algorithm::C, Algorithm::D];

/// Per-instance results of the approximation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepInstance {
    /// Values of A, B, C, D.
    pub values: [f64; 4],
    pub times: [f64; 4],
    pub random: f64,
    pub upper_bound: f64,
}

/// Run A–D, a random feasible point and `v_ub` on one generated instance.
pub fn sweep_instance(t: &DenseTensor, budget: &SparsityBudget, seed: u64, timing: bool) -> Result<SweepInstance> {
    let mut values = [0.0; 4];
    let mut times = [0.0; 4];
    for (k, alg) in ALGS.iter().enumerate() {
        let timer = Timer::start(timing);
        values[k] = approximate(t, budget, *alg)?.value;
        times[k] = timer.secs();
    }
    let rnd = random_feasible(t.shape(), budget, seed)?;
    Ok(SweepInstance {
        values,
        times,
        random: crate::rank1::objective(t, &rnd)?.abs(),
        upper_bound: upper_bound(t)?,
    })
}

fn sweep_header(first: &str) -> Vec<&str> {
    let mut h = vec![first, "d", "instances", "budget"];
    h.extend([
        "value_A", "value_B", "value_C", "value_D", "value_random", "upper_bound", "ratio_A", "ratio_B",
        "ratio_C", "ratio_D", "time_A", "time_B", "time_C", "time_D",
    ]);
    h
}

fn sweep_row(key: String, d: usize, r: usize, runs: &[SweepInstance]) -> Vec<String> {
    let m = runs.len() as f64;
    let mean = |f: &dyn Fn(&SweepInstance) -> f64| runs.iter().map(f).sum::<f64>() / m;
    let mut row = vec![key, d.to_string(), runs.len().to_string(), r.to_string()];
    for k in 0..4 {
        row.push(fmt_f(mean(&|s| s.values[k])));
    }
    row.push(fmt_f(mean(&|s| s.random)));
    row.push(fmt_f(mean(&|s| s.upper_bound)));
    for k in 0..4 {
        row.push(fmt_f(mean(&|s| s.values[k] / s.upper_bound)));
    }
    for k in 0..4 {
        row.push(fmt_f(mean(&|s| s.times[k])));
    }
    row
}

/// Mean values, ratios to `v_ub` and times of A–D per `(d, n)`.
pub fn run_rank1_sweep(spec: &ExperimentSpec) -> Result<Table> {
    let mut table = Table::new(spec.kind, &sweep_header("n"));
    let sr = spec.sparsity[0];
    for &d in &spec.orders {
        for &n in &spec.dims {
            let budget = budget_for(n, d, spec.budget_ratio);
            let runs = (0..spec.instances)
                .map(|i| {
                    let seed = derive_seed(spec.seed, &[d as u64, n as u64, i as u64]);
                    let t = gen_sparse_cp(&vec![n; d], spec.rank, sr, seed)?;
                    sweep_instance(&t, &budget, seed ^ 1, spec.timing)
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(sweep_row(n.to_string(), d, budget.as_slice()[0], &runs));
        }
    }
    Ok(table)
}

/// As [`run_rank1_sweep`], varying the generator sparsity at the first `n`.
pub fn run_sparsity_sweep(spec: &ExperimentSpec) -> Result<Table> {
    let mut table = Table::new(spec.kind, &sweep_header("sparsity"));
    let n = spec.dims[0];
    for &d in &spec.orders {
        let budget = budget_for(n, d, spec.budget_ratio);
        for (si, &sr) in spec.sparsity.iter().enumerate() {
            let runs = (0..spec.instances)
                .map(|i| {
                    let seed = derive_seed(spec.seed, &[d as u64, si as u64, i as u64]);
                    let t = gen_sparse_cp(&vec![n; d], spec.rank, sr, seed)?;
                    sweep_instance(&t, &budget, seed ^ 1, spec.timing)
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(sweep_row(fmt_f(sr), d, budget.as_slice()[0], &runs));
        }
    }
    Ok(table)
}

/// Initializer then AM, per instance and initializer.
pub fn run_am_comparison(spec: &ExperimentSpec) -> Result<Table> {
    let l1 = spec.kind == ExperimentKind::L1Comparison;
    let mut table = Table::new(
        spec.kind,
        &[
            "n", "d", "instance", "budget", "init", "init_value", "final_value", "penalized_objective", "sweeps",
            "converged", "time",
        ],
    );
    let sr = spec.sparsity[0];
    for &d in &spec.orders {
        for &n in &spec.dims {
            let budget = budget_for(n, d, spec.budget_ratio);
            for i in 0..spec.instances {
                let seed = derive_seed(spec.seed, &[d as u64, n as u64, i as u64]);
                let t = gen_sparse_cp(&vec![n; d], spec.rank, sr, seed)?;
                for init in &spec.inits {
                    let timer = Timer::start(spec.timing);
                    let start = initialize(&t, &budget, *init, seed ^ 2)?;
                    let init_value = t.multilinear_value(start.factors())?;
                    let (final_value, penalized, trace) = if l1 {
                        let cfg = AmConfig {
                            tol: spec.tol,
                            max_sweeps: spec.max_sweeps,
                            model: AmModel::L1 { rho: vec![spec.rho] },
                        };
                        let raw: Vec<Vec<f64>> = start.factors().iter().map(|x| x.to_vec()).collect();
                        let (res, trace) = am_l1(&t, &raw, &cfg)?;
                        (res.value, res.penalized_objective, trace)
                    } else {
                        let cfg = AmConfig {
                            tol: spec.tol,
                            max_sweeps: spec.max_sweeps,
                            model: AmModel::L0,
                        };
                        let (res, trace) = am_l0(&t, &budget, &start, &cfg)?;
                        (res.value, res.value, trace)
                    };
                    let secs = timer.secs();
                    table.rows.push(vec![
                        n.to_string(),
                        d.to_string(),
                        i.to_string(),
                        budget.as_slice()[0].to_string(),
                        init.to_string(),
                        fmt_f(init_value),
                        fmt_f(final_value),
                        fmt_f(penalized),
                        trace.sweeps_used.to_string(),
                        trace.converged.to_string(),
                        fmt_f(secs),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

/// STC configuration used by the clustering experiment.
pub fn stc_config(spec: &ExperimentSpec, init: Init, seed: u64) -> StcConfig {
    StcConfig {
        ranks: spec.ranks.clone(),
        budgets: spec.budgets.clone(),
        k: spec.k_choice(),
        deflation: DeflationConfig {
            init,
            am: AmConfig {
                tol: spec.tol,
                max_sweeps: spec.max_sweeps,
                model: AmModel::L0,
            },
            seed,
        },
        seed,
    }
}

/// Cluster error of one method on one generated data set.
pub fn cluster_once(data: &ClusterData, method: ClusterMethod, spec: &ExperimentSpec, seed: u64) -> Result<f64> {
    let pred = match method {
        ClusterMethod::Stc(init) => stc_on_tensor(&data.tensor, &stc_config(spec, init, seed))?.assignment,
        ClusterMethod::Vanilla => vanilla_kmeans(&data.tensor, &spec.k_choice(), seed)?,
    };
    cluster_error(&pred, &data.truth)
}

/// Mean cluster error and time per `(N, σ, method)`.
pub fn run_clustering_experiment(spec: &ExperimentSpec) -> Result<Table> {
    let mut table = Table::new(spec.kind, &["N", "sigma", "method", "instances", "cluster_err", "time"]);
    for &n in &spec.samples {
        for (si, &sigma) in spec.noise.iter().enumerate() {
            let data: Vec<(ClusterData, u64)> = (0..spec.instances)
                .map(|i| {
                    let seed = derive_seed(spec.seed, &[n as u64, si as u64, i as u64]);
                    gen_cluster_synthetic(n, sigma, spec.mu, seed).map(|d| (d, seed))
                })
                .collect::<Result<_>>()?;
            for &method in &spec.methods {
                let mut err = 0.0;
                let mut secs = 0.0;
                for (d, seed) in &data {
                    let timer = Timer::start(spec.timing);
                    err += cluster_once(d, method, spec, *seed)?;
                    secs += timer.secs();
                }
                let m = data.len() as f64;
                table.rows.push(vec![
                    n.to_string(),
                    fmt_f(sigma),
                    method.to_string(),
                    data.len().to_string(),
                    fmt_f(err / m),
                    fmt_f(secs / m),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Rank1Sweep => run_rank1_sweep(spec),
        ExperimentKind::SparsitySweep => run_sparsity_sweep(spec),
        ExperimentKind::AmComparison | ExperimentKind::L1Comparison => run_am_comparison(spec),
        ExperimentKind::Clustering => run_clustering_experiment(spec),
    }
}
