//! Alternating maximization over the factor blocks `x_1, ..., x_d`.
//!
//! The ℓ0 model solves each block exactly by truncation; the ℓ1 model
//! replaces it with soft thresholding and tracks the penalized objective.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rank1::{finalize, Algorithm, Diagnostics, Rank1Result, SparseFactorSet, SparsityBudget};
use crate::sparse::{soft_threshold_normalize, truncate_normalize};
use crate::tensor::{norm, DenseTensor};
use crate::unit_vector::UnitVector;

pub const DEFAULT_AM_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_SWEEPS: usize = 2000;
pub const DEFAULT_RHO: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum AmModel {
    L0,
    /// Per-mode penalties; a single entry is broadcast to every mode.
    L1 { rho: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub model: AmModel,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_AM_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            model: AmModel::L0,
        }
    }
}

impl AmConfig {
    pub fn l1(rho: Vec<f64>) -> Self {
        Self {
            model: AmModel::L1 { rho },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        if let AmModel::L1 { rho } = &self.model {
            if rho.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidArgument("rho must be nonnegative".into()));
            }
        }
        Ok(())
    }

    fn rho_for(&self, d: usize) -> Result<Vec<f64>> {
        match &self.model {
            AmModel::L1 { rho } if rho.len() == 1 => Ok(vec![rho[0]; d]),
            AmModel::L1 { rho } if rho.len() == d => Ok(rho.clone()),
            AmModel::L1 { rho } => Err(Error::DimensionMismatch {
                expected: d,
                got: rho.len(),
            }),
            AmModel::L0 => Err(Error::InvalidArgument("am_l1 needs an L1 model".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmTrace {
    pub initial_objective: f64,
    /// Objective after each completed sweep.
    pub objective_per_sweep: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn check_init_dims<V: AsRef<[f64]>>(t: &DenseTensor, init: &[V]) -> Result<()> {
    if init.len() != t.order() {
        return Err(Error::DimensionMismatch {
            expected: t.order(),
            got: init.len(),
        });
    }
    for (x, &n) in init.iter().zip(t.shape()) {
        if x.as_ref().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.as_ref().len(),
            });
        }
    }
    Ok(())
}

/// Alternating maximization for the ℓ0-constrained model.
///
/// Each block update `x_j ← [∇_j]_{r_j}/‖[∇_j]_{r_j}‖` is the exact block
/// maximizer, so the objective never decreases. A zero gradient keeps the
/// previous block. Stops when `max_j ‖x_j^{k+1} − x_j^k‖ ≤ tol` or after
/// `max_sweeps` sweeps.
pub fn am_l0(
    t: &DenseTensor,
    budget: &SparsityBudget,
    init: &SparseFactorSet,
    cfg: &AmConfig,
) -> Result<(Rank1Result, AmTrace)> {
    cfg.validate()?;
    budget.validate(t.shape())?;
    check_init_dims(t, init.factors())?;
    if !init.is_feasible(budget) {
        return Err(Error::InfeasibleInit("init exceeds the sparsity budget".into()));
    }
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let d = t.order();
    let mut xs: Vec<UnitVector> = init.factors().to_vec();
    let initial_objective = t.multilinear_value(&xs)?;
    let mut trace = AmTrace {
        initial_objective,
        objective_per_sweep: Vec::new(),
        sweeps_used: 0,
        converged: false,
    };
    while trace.sweeps_used < cfg.max_sweeps {
        let mut change = 0.0f64;
        for j in 0..d {
            let g = t.multilinear_grad(&xs, j)?;
            match truncate_normalize(&g, budget.as_slice()[j]) {
                Ok(x) => {
                    change = change.max(max_change(&x, &xs[j]));
                    xs[j] = x;
                }
                Err(Error::ZeroInput) => {}
                Err(e) => return Err(e),
            }
        }
        trace.sweeps_used += 1;
        trace.objective_per_sweep.push(t.multilinear_value(&xs)?);
        if change <= cfg.tol {
            trace.converged = true;
            break;
        }
    }
    let result = finalize(
        t,
        xs,
        Algorithm::AlternatingMax,
        Diagnostics {
            selected_index: None,
            mode_order: (0..d).collect(),
            converged: vec![trace.converged],
        },
    )?;
    Ok((result, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Result {
    /// Unit vectors where a block was updated; untouched blocks keep the
    /// init, which may have norm below one.
    pub factors: Vec<Vec<f64>>,
    /// `𝒜x_1⋯x_d − Σ_j ρ_j‖x_j‖₁`.
    pub penalized_objective: f64,
    /// `𝒜x_1⋯x_d`.
    pub value: f64,
}

/// `𝒜x_1⋯x_d − Σ_j ρ_j‖x_j‖₁`.
pub fn penalized_objective<V: AsRef<[f64]>>(t: &DenseTensor, xs: &[V], rho: &[f64]) -> Result<f64> {
    let v = t.multilinear_value(xs)?;
    let pen: f64 = xs
        .iter()
        .zip(rho)
        .map(|(x, p)| p * x.as_ref().iter().map(|a| a.abs()).sum::<f64>())
        .sum();
    Ok(v - pen)
}

/// Alternating maximization for the ℓ1-regularized model
/// `max 𝒜x_1⋯x_d − Σ ρ_j‖x_j‖₁  s.t. ‖x_j‖ ≤ 1`.
///
/// A block whose soft-thresholded gradient vanishes keeps its previous
/// iterate.
pub fn am_l1(t: &DenseTensor, init: &[Vec<f64>], cfg: &AmConfig) -> Result<(L1Result, AmTrace)> {
    cfg.validate()?;
    check_init_dims(t, init)?;
    let rho = cfg.rho_for(t.order())?;
    if init.iter().any(|x| norm(x) > 1.0 + 1e-12) {
        return Err(Error::InfeasibleInit("init factors must satisfy ‖x_j‖ ≤ 1".into()));
    }
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let d = t.order();
    let mut xs: Vec<Vec<f64>> = init.to_vec();
    let mut trace = AmTrace {
        initial_objective: penalized_objective(t, &xs, &rho)?,
        objective_per_sweep: Vec::new(),
        sweeps_used: 0,
        converged: false,
    };
    while trace.sweeps_used < cfg.max_sweeps {
        let mut change = 0.0f64;
        for j in 0..d {
            let g = t.multilinear_grad(&xs, j)?;
            if let Some(x) = soft_threshold_normalize(&g, rho[j]) {
                change = change.max(max_change(&x, &xs[j]));
                xs[j] = x.into_inner();
            }
        }
        trace.sweeps_used += 1;
        trace.objective_per_sweep.push(penalized_objective(t, &xs, &rho)?);
        if change <= cfg.tol {
            trace.converged = true;
            break;
        }
    }
    let value = t.multilinear_value(&xs)?;
    let penalized = penalized_objective(t, &xs, &rho)?;
    Ok((
        L1Result {
            factors: xs,
            penalized_objective: penalized,
            value,
        },
        trace,
    ))
}

/// Per mode: `r_j` support indices drawn uniformly without replacement,
/// standard normal values, normalized. Deterministic per seed.
pub fn random_feasible(shape: &[usize], budget: &SparsityBudget, seed: u64) -> Result<SparseFactorSet> {
    budget.validate(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(shape.len());
    for (&n, &r) in shape.iter().zip(budget.as_slice()) {
        loop {
            let mut v = vec![0.0; n];
            for i in sample(&mut rng, n, r) {
                v[i] = StandardNormal.sample(&mut rng);
            }
            if let Some(u) = UnitVector::normalize(v) {
                factors.push(u);
                break;
            }
        }
    }
    Ok(SparseFactorSet::new(factors))
}
