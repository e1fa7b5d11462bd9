//! Leading singular triples by alternating power iteration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{dot, norm, DenseTensor};
use crate::unit_vector::UnitVector;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 5000;
const RESTART_SEED: u64 = 0x5eed_1eaf;

/// Borrowed column-major `rows × cols` matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    rows: usize,
    cols: usize,
    data: &'a [f64],
}

impl<'a> MatRef<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix cannot view {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// View an order-2 tensor as a matrix.
    pub fn from_tensor(t: &'a DenseTensor) -> Result<Self> {
        match t.shape() {
            &[m, n] => Self::new(m, n, t.data()),
            s => Err(Error::ShapeMismatch(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.rows * j]
    }

    fn col(&self, j: usize) -> &'a [f64] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += vj * a;
            }
        }
        out
    }

    /// `Mᵀ u`.
    pub fn tmul_vec(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), u)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * a;
            }
        }
        out
    }

    /// Index of the row with the largest norm; the smallest index wins ties.
    pub fn largest_row(&self) -> usize {
        let norms = self.row_norms_sq();
        let mut best = 0;
        for (i, &n) in norms.iter().enumerate() {
            if n > norms[best] {
                best = i;
            }
        }
        best
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(self.data)
    }

    fn max_col_norm(&self) -> f64 {
        (0..self.cols).map(|j| norm(self.col(j))).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// `σ`, `u`, `v` with `uᵀ M v = σ = ‖M v‖`.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub sigma: f64,
    pub left: UnitVector,
    pub right: UnitVector,
    pub iterations: usize,
    pub converged: bool,
}

struct Iterate {
    sigma: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn power_iterate(m: MatRef<'_>, mut v: Vec<f64>, tol: f64, max_iter: usize) -> Iterate {
    let mut prev = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut u = m.mul_vec(&v);
        let su = norm(&u);
        if su == 0.0 {
            break;
        }
        u.iter_mut().for_each(|x| *x /= su);
        let mut w = m.tmul_vec(&u);
        let sigma = norm(&w);
        w.iter_mut().for_each(|x| *x /= sigma);
        v = w;
        if (sigma - prev).abs() <= tol * sigma {
            converged = true;
            break;
        }
        prev = sigma;
    }
    let mut left = m.mul_vec(&v);
    let sigma = norm(&left);
    if sigma > 0.0 {
        left.iter_mut().for_each(|x| *x /= sigma);
    }
    Iterate {
        sigma,
        left,
        right: v,
        iterations,
        converged,
    }
}

/// Leading singular value and vectors of a nonzero matrix.
///
/// Starts from the largest-norm row of `m`. Non-convergence within `max_iter`
/// is reported through [`SingularTriple::converged`], not as an error. The
/// pair is sign-normalized so the first nonzero entry of `left` is positive.
pub fn leading_singular_triple(m: MatRef<'_>, tol: f64, max_iter: usize) -> Result<SingularTriple> {
    if m.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let start = m.row(m.largest_row());
    let start_norm = norm(&start);
    let mut best = power_iterate(
        m,
        start.into_iter().map(|x| x / start_norm).collect(),
        tol,
        max_iter,
    );

    // λ_max dominates every column norm and ‖M‖_F/√rank; falling short of
    // either means the start missed the leading subspace.
    let floor = m
        .max_col_norm()
        .max(m.frobenius_norm() / (m.rows.min(m.cols) as f64).sqrt());
    if best.sigma < floor * (1.0 - 1e-12) {
        let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
        let v: Vec<f64> = (0..m.cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        let vn = norm(&v);
        let retry = power_iterate(m, v.into_iter().map(|x| x / vn).collect(), tol, max_iter);
        if retry.sigma > best.sigma {
            best = retry;
        }
    }

    if let Some(&first) = best.left.iter().find(|&&x| x != 0.0) {
        if first < 0.0 {
            best.left.iter_mut().for_each(|x| *x = -*x);
            best.right.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(SingularTriple {
        sigma: best.sigma,
        left: UnitVector::normalize(best.left).ok_or(Error::ZeroMatrix)?,
        right: UnitVector::normalize(best.right).ok_or(Error::ZeroMatrix)?,
        iterations: best.iterations,
        converged: best.converged,
    })
}

/// Largest singular value; zero for the zero matrix.
pub fn lambda_max(m: MatRef<'_>) -> f64 {
    match leading_singular_triple(m, DEFAULT_TOL, DEFAULT_MAX_ITER) {
        Ok(t) => t.sigma,
        Err(_) => 0.0,
    }
}
