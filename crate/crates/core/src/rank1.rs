//! Approximation algorithms A, B, C and D for
//!
//! ```text
//! max 𝒜x_1⋯x_d   s.t. ‖x_j‖ = 1, ‖x_j‖₀ ≤ r_j
//! ```
//!
//! plus the upper bound `v_ub` and an enumeration-based oracle for tiny
//! instances. Every algorithm returns unit, `r_j`-sparse factors and a
//! nonnegative objective value for any nonzero tensor of order at least 3.

use std::fmt;
use std::str::FromStr;

use crate::am::{am_l0, random_feasible, AmConfig};
use crate::error::{Error, Result};
use crate::linalg::{lambda_max, leading_singular_triple, MatRef, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::sparse::{truncate_normalize, truncated_norm};
use crate::tensor::DenseTensor;
use crate::unit_vector::UnitVector;

/// Per-mode cardinality caps `r_1, ..., r_d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SparsityBudget(Vec<usize>);

impl SparsityBudget {
    pub fn new(r: Vec<usize>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidArgument("empty sparsity budget".into()));
        }
        if let Some(&bad) = r.iter().find(|&&x| x == 0) {
            return Err(Error::BadCardinality { r: bad, n: 0 });
        }
        Ok(Self(r))
    }

    /// No sparsity: `r_j = n_j`.
    pub fn full(shape: &[usize]) -> Self {
        Self(shape.to_vec())
    }

    pub fn ones(order: usize) -> Self {
        Self(vec![1; order])
    }

    /// `r_j = ⌊fraction · n_j⌋`, clamped to at least 1.
    pub fn fraction_of(shape: &[usize], fraction: f64) -> Self {
        Self(
            shape
                .iter()
                .map(|&n| ((fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        if self.0.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                got: self.0.len(),
            });
        }
        for (&r, &n) in self.0.iter().zip(shape) {
            if r == 0 || r > n {
                return Err(Error::BadCardinality { r, n });
            }
        }
        Ok(())
    }
}

impl fmt::Display for SparsityBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A candidate solution `(x_1, ..., x_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFactorSet(Vec<UnitVector>);

impl SparseFactorSet {
    pub fn new(factors: Vec<UnitVector>) -> Self {
        Self(factors)
    }

    pub fn factors(&self) -> &[UnitVector] {
        &self.0
    }

    pub fn into_factors(self) -> Vec<UnitVector> {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_feasible(&self, budget: &SparsityBudget) -> bool {
        self.0.len() == budget.len()
            && self
                .0
                .iter()
                .zip(budget.as_slice())
                .all(|(x, &r)| x.nnz() <= r)
    }
}

/// Which procedure produced a [`Rank1Result`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    A,
    B,
    C,
    D,
    Oracle,
    AlternatingMax,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::A => "A",
            Algorithm::B => "B",
            Algorithm::C => "C",
            Algorithm::D => "D",
            Algorithm::Oracle => "oracle",
            Algorithm::AlternatingMax => "AM",
        };
        f.write_str(s)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Algorithm::A),
            "B" => Ok(Algorithm::B),
            "C" => Ok(Algorithm::C),
            "D" => Ok(Algorithm::D),
            other => Err(Error::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Fiber (A) or slice (B) index tuple chosen in the selection step, in
    /// the mode order the algorithm ran in.
    pub selected_index: Option<Vec<usize>>,
    /// Mode order the algorithm ran in (A sorts modes by budget).
    pub mode_order: Vec<usize>,
    /// One flag per singular value problem solved (B, C).
    pub converged: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Rank1Result {
    pub factors: SparseFactorSet,
    /// `𝒜x_1⋯x_d`, nonnegative.
    pub value: f64,
    /// Optimal scale `λ` of `λ·x_1∘⋯∘x_d`; equal to `value`.
    pub weight: f64,
    pub algorithm: Algorithm,
    pub diagnostics: Diagnostics,
}

impl Rank1Result {
    /// `λ·x_1∘⋯∘x_d`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        DenseTensor::rank1_outer(self.factors.factors(), self.weight)
    }
}

/// `𝒜x_1⋯x_d`.
pub fn objective(t: &DenseTensor, factors: &SparseFactorSet) -> Result<f64> {
    t.multilinear_value(factors.factors())
}

/// Evaluate, flip one factor if the value came out negative, and package.
pub(crate) fn finalize(
    t: &DenseTensor,
    mut factors: Vec<UnitVector>,
    algorithm: Algorithm,
    diagnostics: Diagnostics,
) -> Result<Rank1Result> {
    let mut value = t.multilinear_value(&factors)?;
    if value < 0.0 {
        factors[0] = factors[0].negated();
        value = -value;
    }
    Ok(Rank1Result {
        factors: SparseFactorSet(factors),
        value,
        weight: value,
        algorithm,
        diagnostics,
    })
}

fn check_input(t: &DenseTensor, budget: &SparsityBudget) -> Result<()> {
    if t.order() < 3 {
        return Err(Error::OrderTooSmall {
            min: 3,
            got: t.order(),
        });
    }
    budget.validate(t.shape())?;
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    Ok(())
}

fn zero_gradient(e: Error) -> Error {
    match e {
        Error::ZeroInput => Error::ZeroTensor,
        other => other,
    }
}

/// Index tuples over `dims` in lexicographic order (first index slowest).
fn for_each_lex(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Step 3 shared by A and B: for `j = d-1, ..., 1`, set
/// `x_j = [𝒜 e^{ī_1}⋯e^{ī_{j-1}} · x_{j+1}⋯x_d]_{r_j}` normalized.
fn backward_sweep(
    t: &DenseTensor,
    budget: &SparsityBudget,
    selected: &[usize],
    last: UnitVector,
) -> Result<Vec<UnitVector>> {
    let d = t.order();
    let shape = t.shape();
    let mut xs: Vec<Vec<f64>> = selected
        .iter()
        .zip(shape)
        .map(|(&i, &n)| UnitVector::basis(n, i).into_inner())
        .collect();
    // Slot d-2 is written before it is read; B selects no index for it.
    xs.truncate(d - 2);
    xs.push(vec![0.0; shape[d - 2]]);
    xs.push(last.into_inner());
    let mut out: Vec<Option<UnitVector>> = vec![None; d];
    for j in (0..d - 1).rev() {
        let g = t.multilinear_grad(&xs, j)?;
        let x = truncate_normalize(&g, budget.as_slice()[j]).map_err(zero_gradient)?;
        xs[j] = x.as_slice().to_vec();
        out[j] = Some(x);
    }
    Ok(xs
        .into_iter()
        .zip(out)
        .map(|(raw, done)| done.unwrap_or_else(|| UnitVector::normalize(raw).expect("unit factor")))
        .collect())
}

/// Algorithm A: best truncated mode-d fiber, then a backward sweep of
/// truncated partial gradients.
///
/// Modes are internally reordered so that `r_1 ≤ ⋯ ≤ r_d` (stable on ties)
/// and the factors are returned in the caller's mode order.
pub fn algorithm_a(t: &DenseTensor, budget: &SparsityBudget) -> Result<Rank1Result> {
    check_input(t, budget)?;
    let d = t.order();
    let mut perm: Vec<usize> = (0..d).collect();
    perm.sort_by_key(|&j| budget.as_slice()[j]);
    let identity = perm.iter().enumerate().all(|(k, &j)| k == j);
    let permuted;
    let (tp, bp) = if identity {
        (t, budget.clone())
    } else {
        permuted = t.permute(&perm)?;
        let r = perm.iter().map(|&j| budget.as_slice()[j]).collect();
        (&permuted, SparsityBudget(r))
    };

    let shape = tp.shape();
    let strides = tp.strides();
    let n_last = shape[d - 1];
    let r_last = bp.as_slice()[d - 1];
    let mut fiber = vec![0.0; n_last];
    let mut best_norm = -1.0;
    let mut best_tuple = vec![0; d - 1];
    let mut best_fiber = vec![0.0; n_last];
    for_each_lex(&shape[..d - 1], |idx| {
        let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        for (k, f) in fiber.iter_mut().enumerate() {
            *f = tp.data()[base + k * strides[d - 1]];
        }
        let nrm = truncated_norm(&fiber, r_last).expect("valid budget");
        if nrm > best_norm {
            best_norm = nrm;
            best_tuple.copy_from_slice(idx);
            best_fiber.copy_from_slice(&fiber);
        }
    });
    let x_last = truncate_normalize(&best_fiber, r_last).map_err(zero_gradient)?;
    let factors_p = backward_sweep(tp, &bp, &best_tuple, x_last)?;

    let mut factors: Vec<Option<UnitVector>> = vec![None; d];
    for (k, x) in factors_p.into_iter().enumerate() {
        factors[perm[k]] = Some(x);
    }
    let factors = factors.into_iter().map(|x| x.expect("every mode filled")).collect();
    finalize(
        t,
        factors,
        Algorithm::A,
        Diagnostics {
            selected_index: Some(best_tuple),
            mode_order: perm,
            converged: Vec::new(),
        },
    )
}

/// Algorithm B: slice `𝒜(i_1, ..., i_{d-2}, :, :)` of largest spectral norm,
/// truncated right singular vector, then the backward sweep of A.
pub fn algorithm_b(t: &DenseTensor, budget: &SparsityBudget) -> Result<Rank1Result> {
    check_input(t, budget)?;
    let d = t.order();
    let shape = t.shape();
    let strides = t.strides();
    let (p, q) = (shape[d - 2], shape[d - 1]);
    let mut slice = vec![0.0; p * q];
    let mut best_sigma = -1.0;
    let mut best_tuple = vec![0; d - 2];
    let mut best_right: Option<UnitVector> = None;
    let mut converged = Vec::new();
    let mut failure = None;
    for_each_lex(&shape[..d - 2], |idx| {
        if failure.is_some() {
            return;
        }
        let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        for b in 0..q {
            for a in 0..p {
                slice[a + p * b] = t.data()[base + a * strides[d - 2] + b * strides[d - 1]];
            }
        }
        let m = MatRef::new(p, q, &slice).expect("slice shape");
        if m.is_zero() {
            return;
        }
        match leading_singular_triple(m, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Ok(tr) => {
                converged.push(tr.converged);
                if tr.sigma > best_sigma {
                    best_sigma = tr.sigma;
                    best_tuple.copy_from_slice(idx);
                    best_right = Some(tr.right);
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let right = best_right.ok_or(Error::ZeroTensor)?;
    let x_last = truncate_normalize(&right, budget.as_slice()[d - 1]).map_err(zero_gradient)?;
    let factors = backward_sweep(t, budget, &best_tuple, x_last)?;
    finalize(
        t,
        factors,
        Algorithm::B,
        Diagnostics {
            selected_index: Some(best_tuple),
            mode_order: (0..d).collect(),
            converged,
        },
    )
}

/// The unfolding cascade shared by C and D.
///
/// `A_1 = reshape(𝒜, n_1, ∏_{j≥2} n_j)`; at each level `pick` proposes
/// `x̄_j` from `A_j`, `x_j = [x̄_j]_{r_j}` normalized, and
/// `A_{j+1} = reshape(A_jᵀ x_j, n_{j+1}, ...)`. Finally
/// `x_d = [A_{d-1}ᵀ x_{d-1}]_{r_d}` normalized.
fn unfolding_cascade(
    t: &DenseTensor,
    budget: &SparsityBudget,
    mut pick: impl FnMut(MatRef<'_>) -> Result<Vec<f64>>,
) -> Result<Vec<UnitVector>> {
    let d = t.order();
    let shape = t.shape();
    let mut factors = Vec::with_capacity(d);
    let mut carried: Option<Vec<f64>> = None;
    for j in 0..d - 1 {
        let data = carried.as_deref().unwrap_or(t.data());
        let rows = shape[j];
        let m = MatRef::new(rows, data.len() / rows, data)?;
        if m.is_zero() {
            return Err(Error::ZeroTensor);
        }
        let xbar = pick(m)?;
        let x = truncate_normalize(&xbar, budget.as_slice()[j]).map_err(zero_gradient)?;
        let next = m.tmul_vec(&x);
        factors.push(x);
        carried = Some(next);
    }
    let last = carried.expect("order at least 3");
    factors.push(truncate_normalize(&last, budget.as_slice()[d - 1]).map_err(zero_gradient)?);
    Ok(factors)
}

/// Algorithm C: truncated leading left singular vectors along the unfolding
/// cascade (C0 when `d = 3`).
pub fn algorithm_c(t: &DenseTensor, budget: &SparsityBudget) -> Result<Rank1Result> {
    check_input(t, budget)?;
    let mut converged = Vec::new();
    let factors = unfolding_cascade(t, budget, |m| {
        let tr = leading_singular_triple(m, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        converged.push(tr.converged);
        Ok(tr.left.into_inner())
    })?;
    finalize(
        t,
        factors,
        Algorithm::C,
        Diagnostics {
            selected_index: None,
            mode_order: (0..t.order()).collect(),
            converged,
        },
    )
}

/// Algorithm D: like C, but `x̄_j = A_j w_j` with `w_j` the normalized
/// largest row of `A_j`; no singular value problems.
pub fn algorithm_d(t: &DenseTensor, budget: &SparsityBudget) -> Result<Rank1Result> {
    check_input(t, budget)?;
    let factors = unfolding_cascade(t, budget, |m| {
        let w = UnitVector::normalize(m.row(m.largest_row())).ok_or(Error::ZeroTensor)?;
        Ok(m.mul_vec(&w))
    })?;
    finalize(
        t,
        factors,
        Algorithm::D,
        Diagnostics {
            selected_index: None,
            mode_order: (0..t.order()).collect(),
            converged: Vec::new(),
        },
    )
}

/// Dispatch on [`Algorithm::A`]..[`Algorithm::D`].
pub fn approximate(t: &DenseTensor, budget: &SparsityBudget, alg: Algorithm) -> Result<Rank1Result> {
    match alg {
        Algorithm::A => algorithm_a(t, budget),
        Algorithm::B => algorithm_b(t, budget),
        Algorithm::C => algorithm_c(t, budget),
        Algorithm::D => algorithm_d(t, budget),
        other => Err(Error::InvalidArgument(format!(
            "{other} is not an approximation algorithm"
        ))),
    }
}

/// `v_ub = min_j λ_max(A_(j))`, an upper bound on the sparse optimum.
pub fn upper_bound(t: &DenseTensor) -> Result<f64> {
    if t.is_zero() {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for j in 0..t.order() {
        let unfolded;
        let (rows, data) = if j == 0 {
            (t.shape()[0], t.data())
        } else {
            unfolded = t.mode_unfold(j)?;
            (unfolded.shape()[0], unfolded.data())
        };
        let m = MatRef::new(rows, data.len() / rows, data)?;
        best = best.min(lambda_max(m));
    }
    Ok(best)
}

/// Oracle guard on the number of support tuples.
pub const ORACLE_LIMIT: u128 = 1_000_000;
const ORACLE_SEED: u64 = 0x0_7ac1e;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for m in i + 1..k {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

/// Enumerate every support tuple (one `r_j`-subset per mode) and solve the
/// dense problem on each restricted subtensor by alternating maximization
/// from `restarts` seeded random starts plus the Algorithm C start.
///
/// The result lower-bounds the true optimum and is exact when every
/// restricted problem is solved globally; for all-ones budgets it is exactly
/// the largest entry in magnitude.
pub fn brute_force_oracle(
    t: &DenseTensor,
    budget: &SparsityBudget,
    restarts: usize,
) -> Result<Rank1Result> {
    budget.validate(t.shape())?;
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let count: u128 = t
        .shape()
        .iter()
        .zip(budget.as_slice())
        .map(|(&n, &r)| binomial(n, r))
        .product();
    if count > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ORACLE_LIMIT,
        });
    }
    let d = t.order();
    let subsets: Vec<Vec<Vec<usize>>> = t
        .shape()
        .iter()
        .zip(budget.as_slice())
        .map(|(&n, &r)| combinations(n, r))
        .collect();
    let counts: Vec<usize> = subsets.iter().map(Vec::len).collect();
    let cfg = AmConfig::default();

    let mut best: Option<(f64, Vec<Vec<usize>>, Vec<UnitVector>)> = None;
    let mut failure = None;
    let mut tuple_no = 0u64;
    for_each_lex(&counts, |choice| {
        if failure.is_some() {
            return;
        }
        tuple_no += 1;
        let supports: Vec<Vec<usize>> = choice
            .iter()
            .zip(&subsets)
            .map(|(&c, s)| s[c].clone())
            .collect();
        let run = || -> Result<Option<(f64, Vec<UnitVector>)>> {
            let sub = t.subtensor(&supports)?;
            if sub.is_zero() {
                return Ok(None);
            }
            let full = SparsityBudget::full(sub.shape());
            let mut starts = Vec::with_capacity(restarts + 1);
            if d >= 3 {
                starts.push(algorithm_c(&sub, &full)?.factors);
            }
            for s in 0..restarts {
                let seed = ORACLE_SEED ^ (tuple_no << 20) ^ s as u64;
                starts.push(random_feasible(sub.shape(), &full, seed)?);
            }
            let mut local: Option<(f64, Vec<UnitVector>)> = None;
            for start in &starts {
                let (res, _) = am_l0(&sub, &full, start, &cfg)?;
                if local.as_ref().is_none_or(|(v, _)| res.value > *v) {
                    local = Some((res.value, res.factors.into_factors()));
                }
            }
            Ok(local)
        };
        match run() {
            Ok(Some((value, factors))) => {
                if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                    best = Some((value, supports, factors));
                }
            }
            Ok(None) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, supports, sub_factors) = best.ok_or(Error::ZeroTensor)?;
    let factors = supports
        .iter()
        .zip(sub_factors)
        .zip(t.shape())
        .map(|((s, x), &n)| {
            let mut full = vec![0.0; n];
            for (&i, &v) in s.iter().zip(x.iter()) {
                full[i] = v;
            }
            UnitVector::normalize(full).expect("embedded unit vector")
        })
        .collect();
    finalize(
        t,
        factors,
        Algorithm::Oracle,
        Diagnostics {
            selected_index: None,
            mode_order: (0..d).collect(),
            converged: Vec::new(),
        },
    )
}
