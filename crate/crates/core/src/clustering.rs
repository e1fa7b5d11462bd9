//! Sparse tensor clustering: stack samples into an order `d+1` tensor,
//! extract `R` sparse rank-1 terms by deflation, and cluster the rows of the
//! weighted sample-mode factor matrix with K-means.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::am::{am_l0, random_feasible, AmConfig};
use crate::error::{Error, Result};
use crate::rank1::{approximate, Algorithm, SparsityBudget};
use crate::tensor::DenseTensor;
use crate::unit_vector::UnitVector;

/// How each deflation step is initialized before AM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Init {
    Approx(Algorithm),
    Random,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Init::Approx(a) => write!(f, "{a}"),
            Init::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("random") {
            Ok(Init::Random)
        } else {
            s.parse().map(Init::Approx)
        }
    }
}

/// Initial factors for `t` under `budget`; `seed` is used only by `Random`.
pub fn initialize(
    t: &DenseTensor,
    budget: &SparsityBudget,
    init: Init,
    seed: u64,
) -> Result<crate::rank1::SparseFactorSet> {
    match init {
        Init::Approx(alg) => Ok(approximate(t, budget, alg)?.factors),
        Init::Random => random_feasible(t.shape(), budget, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflationConfig {
    pub init: Init,
    pub am: AmConfig,
    pub seed: u64,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            init: Init::Approx(Algorithm::D),
            am: AmConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflationTerm {
    /// `d+1` factors; the last indexes samples.
    pub factors: Vec<UnitVector>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflationModel {
    pub terms: Vec<DeflationTerm>,
    /// `‖𝒯 − Σ α_m x^m_1∘⋯∘x^m_{d+1}‖_F` after the last term.
    pub residual_norm: f64,
    /// Residual norm after each term.
    pub residual_trace: Vec<f64>,
}

impl DeflationModel {
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `Σ_m α_m x^m_1∘⋯∘x^m_{d+1}`.
    pub fn reconstruct(&self, shape: &[usize]) -> Result<DenseTensor> {
        let mut out = DenseTensor::zeros(shape)?;
        for term in &self.terms {
            out.add_outer(&term.factors, term.alpha)?;
        }
        Ok(out)
    }

    /// Total `Σ_l Σ_j ‖x^l_j‖₀`.
    pub fn nnz(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .map(|x| x.nnz())
            .sum()
    }
}

/// `𝒯(:,…,:,i) = 𝒜_i`.
pub fn stack_samples(samples: &[DenseTensor]) -> Result<DenseTensor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
    let mut data = Vec::with_capacity(first.len() * samples.len());
    for (i, s) in samples.iter().enumerate() {
        if s.shape() != first.shape() {
            return Err(Error::ShapeMismatch(format!(
                "sample {i} has shape {:?}, expected {:?}",
                s.shape(),
                first.shape()
            )));
        }
        data.extend_from_slice(s.data());
    }
    let mut shape = first.shape().to_vec();
    shape.push(samples.len());
    DenseTensor::new(shape, data)
}

/// Greedy rank-`rank` deflation: each term is the chosen initializer refined
/// by ℓ0 AM on the current residual, with `α_m` the residual's value at the
/// refined factors. Stops early if the residual becomes exactly zero.
pub fn deflate(
    t: &DenseTensor,
    rank: usize,
    budget: &SparsityBudget,
    cfg: &DeflationConfig,
) -> Result<DeflationModel> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    budget.validate(t.shape())?;
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let mut residual = t.clone();
    let mut terms = Vec::with_capacity(rank);
    let mut trace = Vec::with_capacity(rank);
    for m in 0..rank {
        if residual.is_zero() {
            break;
        }
        let start = initialize(&residual, budget, cfg.init, cfg.seed.wrapping_add(m as u64))?;
        let (refined, _) = am_l0(&residual, budget, &start, &cfg.am)?;
        let factors = refined.factors.into_factors();
        let alpha = residual.multilinear_value(&factors)?;
        residual.add_outer(&factors, -alpha)?;
        trace.push(residual.frobenius_norm());
        terms.push(DeflationTerm { factors, alpha });
    }
    Ok(DeflationModel {
        terms,
        residual_norm: residual.frobenius_norm(),
        residual_trace: trace,
    })
}

/// Rows of `X̂ = [α_1 x^1_{d+1}, …, α_R x^R_{d+1}]`; row `i` is the reduced
/// feature vector of sample `i`.
pub fn reduced_samples(model: &DeflationModel) -> Result<Vec<Vec<f64>>> {
    let first = model
        .terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("model has no terms".into()))?;
    let n = first.factors.last().map(|x| x.len()).unwrap_or(0);
    Ok((0..n)
        .map(|i| {
            model
                .terms
                .iter()
                .map(|term| term.alpha * term.factors.last().expect("sample factor")[i])
                .collect()
        })
        .collect())
}

/// Cluster labels in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || labels.len() < k {
            return Err(Error::BadK(format!("k = {k} with {} samples", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::BadK(format!("label {bad} outside 1..={k}")));
        }
        Ok(Self { labels, k })
    }

    /// `N/groups` copies of label 1, then label 2, and so on.
    pub fn equal_groups(n: usize, groups: usize) -> Result<Self> {
        if groups == 0 || !n.is_multiple_of(groups) {
            return Err(Error::BadN(format!("{n} samples do not split into {groups} groups")));
        }
        Self::new((0..n).map(|i| i / (n / groups) + 1).collect(), groups)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Fraction of sample pairs on which "same cluster" disagrees.
pub fn cluster_error(pred: &ClusterAssignment, truth: &ClusterAssignment) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let n = pred.len();
    if n < 2 {
        return Err(Error::InvalidArgument("cluster error needs at least two samples".into()));
    }
    let (p, q) = (pred.labels(), truth.labels());
    let mut bad = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (p[i] == p[j]) != (q[i] == q[j]) {
                bad += 1;
            }
        }
    }
    Ok(bad as f64 / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the returned assignment.
    pub wcss: f64,
    /// WCSS after each Lloyd iteration of the winning restart.
    pub wcss_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // Guard against rounding leaving the pick on a zero-weight point.
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).expect("positive total");
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        // Empty clusters take the point farthest from its current center,
        // never emptying another cluster.
        loop {
            let mut sizes = vec![0usize; k];
            labels.iter().for_each(|&l| sizes[l] += 1);
            let Some(empty) = sizes.iter().position(|&s| s == 0) else { break };
            let far = (0..points.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&i, &j| {
                    sq_dist(&points[i], &centers[labels[i]])
                        .total_cmp(&sq_dist(&points[j], &centers[labels[j]]))
                        .then(j.cmp(&i))
                })
                .expect("n >= k");
            labels[far] = empty;
            centers[empty] = points[far].clone();
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for ((c, s), &m) in centers.iter_mut().zip(sums).zip(&counts) {
            *c = s.into_iter().map(|v| v / m as f64).collect();
        }
        trace.push(points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum());
        let next: Vec<usize> = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| {
                let (c, d) = nearest(p, &centers);
                // Keep the current label on exact ties so the loop terminates.
                if d < sq_dist(p, &centers[l]) { c } else { l }
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    (labels, centers, trace)
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 || k > points.len() {
        return Err(Error::BadK(format!("k = {k} with {} points", points.len())));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    Ok(())
}

/// Lloyd iterations from k-means++ seeds, best of `cfg.restarts` by WCSS.
pub fn kmeans_fit(points: &[Vec<f64>], k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansFit> {
    check_points(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..cfg.restarts.max(1) {
        let centers = plus_plus(points, k, &mut rng);
        let (labels, centers, trace) = lloyd(points, centers, cfg.max_iter.max(1));
        let wcss = *trace.last().expect("at least one iteration");
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansFit {
                assignment: ClusterAssignment::new(labels.into_iter().map(|l| l + 1).collect(), k)?,
                centers,
                wcss,
                wcss_trace: trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// [`kmeans_fit`] with 10 restarts and 100 iterations.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment> {
    Ok(kmeans_fit(points, k, seed, &KMeansConfig::default())?.assignment)
}

pub const GAP_REFERENCES: usize = 20;

/// `Gap(K)` and `SE(K)` for a candidate `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapValue {
    pub k: usize,
    pub gap: f64,
    pub se: f64,
}

fn check_candidates(points: &[Vec<f64>], candidates: &[usize]) -> Result<()> {
    let Some(&last) = candidates.last() else {
        return Err(Error::BadK("no candidates".into()));
    };
    if candidates.windows(2).any(|w| w[0] >= w[1]) || candidates[0] == 0 {
        return Err(Error::BadK("candidates must be positive and ascending".into()));
    }
    if last >= points.len() {
        return Err(Error::BadK(format!(
            "largest candidate {last} must be below the sample count {}",
            points.len()
        )));
    }
    check_points(points, 1)
}

/// Gap statistic against `b` uniform reference sets drawn in the bounding
/// box of `points`: `Gap(K) = mean_b log W_K^ref − log W_K` and
/// `SE(K) = sd_b(log W_K^ref)·√(1 + 1/b)`, with `W` the K-means WCSS.
///
/// `W_K = 0` gives `Gap(K) = +∞`. Returns `None` when the box is a single
/// point.
pub fn gap_statistic(points: &[Vec<f64>], candidates: &[usize], seed: u64, b: usize) -> Result<Option<Vec<GapValue>>> {
    check_candidates(points, candidates)?;
    if b == 0 {
        return Err(Error::InvalidArgument("need at least one reference set".into()));
    }
    let dim = points[0].len();
    let lo: Vec<f64> = (0..dim).map(|c| points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..dim).map(|c| points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max)).collect();
    if lo.iter().zip(&hi).all(|(a, b)| a == b) {
        return Ok(None);
    }
    let cfg = KMeansConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let references: Vec<Vec<Vec<f64>>> = (0..b)
        .map(|_| {
            (0..points.len())
                .map(|_| {
                    lo.iter()
                        .zip(&hi)
                        .map(|(&a, &z)| if a < z { rng.random_range(a..z) } else { a })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(candidates.len());
    for (ci, &k) in candidates.iter().enumerate() {
        let fit_seed = seed.wrapping_add(1 + ci as u64);
        let w = kmeans_fit(points, k, fit_seed, &cfg)?.wcss;
        let logs: Vec<f64> = references
            .iter()
            .enumerate()
            .map(|(bi, r)| {
                let s = fit_seed.wrapping_mul(31).wrapping_add(bi as u64);
                kmeans_fit(r, k, s, &cfg).map(|f| f.wcss.ln())
            })
            .collect::<Result<_>>()?;
        let mean = logs.iter().sum::<f64>() / b as f64;
        let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / b as f64).sqrt();
        out.push(GapValue {
            k,
            gap: if w > 0.0 { mean - w.ln() } else { f64::INFINITY },
            se: sd * (1.0 + 1.0 / b as f64).sqrt(),
        });
    }
    Ok(Some(out))
}

/// How a cluster count is read off the gap curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GapRule {
    /// Smallest `K` with `Gap(K) ≥ Gap(K+1) − SE(K+1)`.
    FirstMaxSe,
    /// Smallest `K` with `Gap(K) ≥ Gap(K*) − SE(K*)`, `K*` the maximizer.
    #[default]
    GlobalMaxSe,
}

impl FromStr for GapRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first" | "first-max-se" => Ok(GapRule::FirstMaxSe),
            "global" | "global-max-se" => Ok(GapRule::GlobalMaxSe),
            other => Err(Error::InvalidArgument(format!("unknown gap rule '{other}'"))),
        }
    }
}

/// Gap-statistic cluster count with the first-maximum rule: the smallest
/// candidate `K` with `Gap(K) ≥ Gap(K+1) − SE(K+1)` over consecutive
/// candidates, else the last. A degenerate bounding box selects the
/// smallest candidate.
pub fn select_k(points: &[Vec<f64>], candidates: &[usize], seed: u64, b: usize) -> Result<usize> {
    select_k_by(points, candidates, seed, b, GapRule::FirstMaxSe)
}

pub fn select_k_by(points: &[Vec<f64>], candidates: &[usize], seed: u64, b: usize, rule: GapRule) -> Result<usize> {
    let Some(gaps) = gap_statistic(points, candidates, seed, b)? else {
        return Ok(candidates[0]);
    };
    match rule {
        GapRule::FirstMaxSe => {
            for w in gaps.windows(2) {
                if w[0].gap >= w[1].gap - w[1].se {
                    return Ok(w[0].k);
                }
            }
            Ok(gaps.last().expect("nonempty").k)
        }
        GapRule::GlobalMaxSe => {
            let top = gaps
                .iter()
                .fold(gaps[0], |best, g| if g.gap > best.gap { *g } else { best });
            let threshold = if top.gap.is_infinite() { top.gap } else { top.gap - top.se };
            Ok(gaps.iter().find(|g| g.gap >= threshold).expect("maximizer qualifies").k)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicScore {
    /// `−∞` when the residual is exactly zero.
    pub value: f64,
    pub rank: usize,
    pub budget: SparsityBudget,
}

/// `log(‖res‖²/P) + log(P)/P · Σ_l Σ_j ‖x^l_j‖₀` with `P` the entry count
/// of `t`; the sample-mode factors are counted.
pub fn bic(t: &DenseTensor, model: &DeflationModel, budget: &SparsityBudget) -> BicScore {
    let p = t.len() as f64;
    let res2 = model.residual_norm * model.residual_norm;
    let value = if res2 == 0.0 {
        f64::NEG_INFINITY
    } else {
        (res2 / p).ln() + p.ln() / p * model.nnz() as f64
    };
    BicScore {
        value,
        rank: model.rank(),
        budget: budget.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct ModelChoice {
    pub rank: usize,
    pub budget: SparsityBudget,
    pub model: DeflationModel,
    pub score: BicScore,
}

/// Fit every `(R, r)` in `ranks × budgets` and keep the smallest BIC; ties
/// go to the smaller `R`, then the lexicographically smaller budget.
pub fn select_model(
    t: &DenseTensor,
    ranks: &[usize],
    budgets: &[SparsityBudget],
    cfg: &DeflationConfig,
) -> Result<ModelChoice> {
    if ranks.is_empty() || budgets.is_empty() {
        return Err(Error::InvalidArgument("empty model grid".into()));
    }
    let mut best: Option<ModelChoice> = None;
    for &rank in ranks {
        for budget in budgets {
            let model = deflate(t, rank, budget, cfg)?;
            let score = bic(t, &model, budget);
            let better = match &best {
                None => true,
                Some(b) => {
                    score.value < b.score.value
                        || (score.value == b.score.value
                            && (rank, budget.as_slice()) < (b.rank, b.budget.as_slice()))
                }
            };
            if better {
                best = Some(ModelChoice {
                    rank,
                    budget: budget.clone(),
                    model,
                    score,
                });
            }
        }
    }
    Ok(best.expect("nonempty grid"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KChoice {
    Fixed(usize),
    /// Gap-statistic selection over ascending candidates.
    Gap { candidates: Vec<usize>, rule: GapRule },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcConfig {
    pub ranks: Vec<usize>,
    /// Caps for the sample modes only; the sample mode is never truncated.
    pub budgets: Vec<Vec<usize>>,
    pub k: KChoice,
    pub deflation: DeflationConfig,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StcOutput {
    pub assignment: ClusterAssignment,
    pub choice: ModelChoice,
    pub reduced: Vec<Vec<f64>>,
}

/// Resolve `cfg.k` for `points`.
pub fn choose_k(points: &[Vec<f64>], k: &KChoice, seed: u64) -> Result<usize> {
    match k {
        KChoice::Fixed(k) => Ok(*k),
        KChoice::Gap { candidates, rule } => select_k_by(points, candidates, seed, GAP_REFERENCES, *rule),
    }
}

/// Stack, select `(R, r)` by BIC, reduce, choose `K`, cluster.
pub fn stc_on_tensor(t: &DenseTensor, cfg: &StcConfig) -> Result<StcOutput> {
    let n = *t.shape().last().expect("nonempty shape");
    if n < 2 {
        return Err(Error::BadN("need at least two samples".into()));
    }
    let budgets = cfg
        .budgets
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(n);
            SparsityBudget::new(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let choice = select_model(t, &cfg.ranks, &budgets, &cfg.deflation)?;
    let reduced = reduced_samples(&choice.model)?;
    let k = choose_k(&reduced, &cfg.k, cfg.seed)?;
    let assignment = kmeans(&reduced, k, cfg.seed)?;
    Ok(StcOutput {
        assignment,
        choice,
        reduced,
    })
}

/// [`stc_on_tensor`] on separately stored samples.
pub fn stc_pipeline(samples: &[DenseTensor], cfg: &StcConfig) -> Result<StcOutput> {
    stc_on_tensor(&stack_samples(samples)?, cfg)
}

/// K-means on vectorized samples, with the same `K` rule as STC.
pub fn vanilla_kmeans(t: &DenseTensor, k: &KChoice, seed: u64) -> Result<ClusterAssignment> {
    let n = *t.shape().last().expect("nonempty shape");
    let per = t.len() / n;
    let points: Vec<Vec<f64>> = t.data().chunks(per).map(<[f64]>::to_vec).collect();
    let k = choose_k(&points, k, seed)?;
    kmeans(&points, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                out.push(
                    c.iter()
                        .map(|&x| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            x + sd * z
                        })
                        .collect(),
                );
            }
        }
        out
    }

    #[test]
    fn stack_two_samples() {
        let a = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseTensor::new(vec![2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let t = stack_samples(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(t.shape(), &[2, 2, 2]);
        assert_eq!(t.last_mode_slice(0).unwrap(), a);
        assert_eq!(t.last_mode_slice(1).unwrap(), b);
        let one = stack_samples(std::slice::from_ref(&a)).unwrap();
        assert_eq!(one.shape(), &[2, 2, 1]);
        let c = DenseTensor::zeros(&[2, 3]).unwrap();
        assert!(matches!(stack_samples(&[a, c]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn cluster_error_examples() {
        let truth = ClusterAssignment::new(vec![1, 1, 2, 2], 2).unwrap();
        let pred = ClusterAssignment::new(vec![1, 2, 1, 2], 2).unwrap();
        assert_abs_diff_eq!(cluster_error(&pred, &truth).unwrap(), 4.0 / 6.0, epsilon = 1e-15);
        assert_eq!(cluster_error(&truth, &truth).unwrap(), 0.0);
        let swapped = ClusterAssignment::new(vec![2, 2, 1, 1], 2).unwrap();
        assert_eq!(cluster_error(&swapped, &truth).unwrap(), 0.0);
        let short = ClusterAssignment::new(vec![1, 1, 2], 2).unwrap();
        assert!(matches!(cluster_error(&short, &truth), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn kmeans_cases() {
        let pts = blobs(&[[10.0, 10.0], [-10.0, -10.0]], 15, 0.1, 1);
        let a = kmeans(&pts, 2, 3).unwrap();
        let truth = ClusterAssignment::equal_groups(30, 2).unwrap();
        assert_eq!(cluster_error(&a, &truth).unwrap(), 0.0);

        assert!(kmeans(&pts, 1, 0).unwrap().labels().iter().all(|&l| l == 1));
        let few = blobs(&[[0.0, 0.0]], 5, 1.0, 2);
        let fit = kmeans_fit(&few, 5, 0, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
        let mut l = fit.assignment.labels().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![1, 2, 3, 4, 5]);
        assert!(matches!(kmeans(&few, 6, 0), Err(Error::BadK(_))));
        assert!(matches!(kmeans(&few, 0, 0), Err(Error::BadK(_))));
        assert_eq!(kmeans(&pts, 2, 9).unwrap(), kmeans(&pts, 2, 9).unwrap());
    }

    #[test]
    fn kmeans_wcss_is_monotone_and_duplicates_are_handled() {
        for seed in 0..20 {
            let pts = blobs(&[[0.0, 0.0], [3.0, 1.0], [1.0, 4.0]], 10, 1.5, seed);
            let fit = kmeans_fit(&pts, 4, seed, &KMeansConfig { restarts: 1, max_iter: 100 }).unwrap();
            for w in fit.wcss_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
        let dup = vec![vec![1.0, 1.0]; 4];
        let fit = kmeans_fit(&dup, 3, 0, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
    }

    #[test]
    fn select_k_cases() {
        let two = blobs(&[[10.0, 10.0], [-10.0, -10.0]], 10, 0.1, 4);
        assert_eq!(select_k(&two, &[1, 2, 3], 0, 20).unwrap(), 2);
        let one = blobs(&[[0.0, 0.0]], 20, 1.0, 5);
        assert_eq!(select_k(&one, &[1, 2], 0, 20).unwrap(), 1);
        let same = vec![vec![2.0, -1.0]; 6];
        assert_eq!(select_k(&same, &[2, 3, 4], 0, 20).unwrap(), 2);
        assert!(select_k(&same, &[2, 6], 0, 20).is_err());

        // Four corners of a square: the first-maximum rule stops early
        // because Gap(1..3) lie within one SE; the global rule finds 4.
        let square = blobs(&[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]], 5, 0.01, 6);
        let c: Vec<usize> = (1..=6).collect();
        assert_eq!(select_k_by(&square, &c, 0, 20, GapRule::GlobalMaxSe).unwrap(), 4);
        assert_eq!(select_k_by(&two, &[1, 2, 3], 0, 20, GapRule::GlobalMaxSe).unwrap(), 2);
        assert!(select_k(&same, &[3, 2], 0, 20).is_err());
    }

    #[test]
    fn bic_cases() {
        let t = DenseTensor::new(vec![2, 2, 2], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let budget = SparsityBudget::ones(3);
        let empty = DeflationModel {
            terms: vec![],
            residual_norm: t.frobenius_norm(),
            residual_trace: vec![],
        };
        assert_abs_diff_eq!(bic(&t, &empty, &budget).value, (5.0f64 / 8.0).ln(), epsilon = 1e-15);

        // One term removing the entry 2: residual 1, three unit supports.
        let model = deflate(&t, 1, &budget, &DeflationConfig::default()).unwrap();
        assert_abs_diff_eq!(model.terms[0].alpha, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.residual_norm, 1.0, epsilon = 1e-12);
        let hand = (1.0f64 / 8.0).ln() + 8.0f64.ln() / 8.0 * 3.0;
        assert_abs_diff_eq!(bic(&t, &model, &budget).value, hand, epsilon = 1e-12);

        let mut doubled = model.clone();
        doubled.terms.push(model.terms[0].clone());
        let inc = bic(&t, &doubled, &budget).value - bic(&t, &model, &budget).value;
        assert_abs_diff_eq!(inc, 8.0f64.ln() / 8.0 * 3.0, epsilon = 1e-12);

        let zero = DeflationModel { residual_norm: 0.0, ..model };
        assert_eq!(bic(&t, &zero, &budget).value, f64::NEG_INFINITY);
    }

    fn sparse_unit(n: usize, support: &[usize], rng: &mut ChaCha8Rng) -> UnitVector {
        let mut v = vec![0.0; n];
        for &i in support {
            v[i] = rng.random_range(0.5..1.5);
        }
        UnitVector::normalize(v).unwrap()
    }

    #[test]
    fn deflation_recovers_rank_one_and_selects_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs = vec![
            sparse_unit(5, &[0, 2], &mut rng),
            sparse_unit(4, &[1, 3], &mut rng),
            sparse_unit(6, &[0, 1, 2, 3, 4, 5], &mut rng),
        ];
        let t = DenseTensor::rank1_outer(&xs, 3.0).unwrap();
        let budget = SparsityBudget::new(vec![2, 2, 6]).unwrap();
        let model = deflate(&t, 1, &budget, &DeflationConfig::default()).unwrap();
        assert!(model.residual_norm <= 1e-8 * t.frobenius_norm());
        let rec = model.reconstruct(t.shape()).unwrap();
        let mut diff = rec.clone();
        diff.add_outer(&xs, -3.0).unwrap();
        assert!(diff.frobenius_norm() < 1e-8);

        let mut nrng = ChaCha8Rng::seed_from_u64(9);
        let noisy = DenseTensor::new(
            t.shape().to_vec(),
            t.data()
                .iter()
                .map(|&x| {
                    let z: f64 = StandardNormal.sample(&mut nrng);
                    x + 1e-3 * z
                })
                .collect(),
        )
        .unwrap();
        let choice = select_model(&noisy, &[1, 2], std::slice::from_ref(&budget), &DeflationConfig::default()).unwrap();
        assert_eq!(choice.rank, 1);

        let single = select_model(&t, &[1], &[budget], &DeflationConfig::default()).unwrap();
        assert_eq!(single.rank, 1);
        assert!(deflate(&t, 0, &SparsityBudget::ones(3), &DeflationConfig::default()).is_err());
    }

    #[test]
    fn residual_trace_and_alpha_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = DenseTensor::from_fn(&[4, 5, 6], |_| rng.random_range(-1.0..1.0)).unwrap();
        let budget = SparsityBudget::new(vec![2, 3, 6]).unwrap();
        let model = deflate(&t, 4, &budget, &DeflationConfig::default()).unwrap();
        let mut prev = t.frobenius_norm();
        let mut residual = t.clone();
        for (term, &norm_after) in model.terms.iter().zip(&model.residual_trace) {
            assert!(norm_after < prev);
            let alpha = residual.multilinear_value(&term.factors).unwrap();
            assert_abs_diff_eq!(alpha, term.alpha, epsilon = 1e-12);
            assert_abs_diff_eq!(norm_after.powi(2), prev.powi(2) - alpha * alpha, epsilon = 1e-10);
            residual.add_outer(&term.factors, -term.alpha).unwrap();
            prev = norm_after;
        }
        let rebuilt = model.reconstruct(t.shape()).unwrap();
        let diff = DenseTensor::new(
            t.shape().to_vec(),
            t.data().iter().zip(rebuilt.data()).map(|(a, b)| a - b).collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(diff.frobenius_norm(), model.residual_norm, epsilon = 1e-12);
    }

    #[test]
    fn reduced_samples_cases() {
        let model = DeflationModel {
            terms: vec![DeflationTerm {
                factors: vec![UnitVector::basis(2, 0), UnitVector::basis(3, 0)],
                alpha: 2.0,
            }],
            residual_norm: 0.0,
            residual_trace: vec![0.0],
        };
        assert_eq!(reduced_samples(&model).unwrap(), vec![vec![2.0], vec![0.0], vec![0.0]]);

        // Two rank-1 samples c_i·u∘v: the reduced feature is ±‖c‖ x_{d+1}.
        let u = UnitVector::normalize(vec![1.0, 2.0]).unwrap();
        let v = UnitVector::normalize(vec![0.0, 1.0, 1.0]).unwrap();
        let a = DenseTensor::rank1_outer(&[&u, &v], 3.0).unwrap();
        let b = DenseTensor::rank1_outer(&[&u, &v], -4.0).unwrap();
        let t = stack_samples(&[a, b]).unwrap();
        let m = deflate(&t, 1, &SparsityBudget::full(t.shape()), &DeflationConfig::default()).unwrap();
        let r = reduced_samples(&m).unwrap();
        let sign = r[0][0].signum();
        assert_abs_diff_eq!(r[0][0], 3.0 * sign, epsilon = 1e-9);
        assert_abs_diff_eq!(r[1][0], -4.0 * sign, epsilon = 1e-9);
    }

    #[test]
    fn identical_samples_form_one_cluster() {
        let a = DenseTensor::new(vec![2, 2], vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let cfg = StcConfig {
            ranks: vec![1],
            budgets: vec![vec![2, 2]],
            k: KChoice::Fixed(1),
            deflation: DeflationConfig::default(),
            seed: 0,
        };
        let out = stc_pipeline(&[a.clone(), a], &cfg).unwrap();
        assert_eq!(out.assignment.labels(), &[1, 1]);
        let truth = ClusterAssignment::new(vec![1, 1], 1).unwrap();
        assert_eq!(cluster_error(&out.assignment, &truth).unwrap(), 0.0);
    }
}
