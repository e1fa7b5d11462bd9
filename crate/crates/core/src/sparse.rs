//! Truncation `[a]_r`, its normalized form, and the soft-threshold step of
//! the ℓ1 model.

use crate::error::{Error, Result};
use crate::unit_vector::UnitVector;

/// `[a]_r` together with the positions it kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub values: Vec<f64>,
    /// Ascending; only nonzero entries of the input are listed.
    pub kept: Vec<usize>,
}

/// Indices of `a` ordered by magnitude descending, index ascending on ties.
fn magnitude_order(a: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    // slice::sort_by is stable, so equal magnitudes stay in index order.
    order.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()));
    order
}

/// Keep the `r` largest-magnitude entries of `a`, zeroing the rest.
///
/// On a tie at the cut the smaller indices win, which makes `[a]_r` unique.
pub fn truncate(a: &[f64], r: usize) -> Result<Truncation> {
    if r == 0 || r > a.len() {
        return Err(Error::BadCardinality { r, n: a.len() });
    }
    let mut kept: Vec<usize> = magnitude_order(a)
        .into_iter()
        .take(r)
        .filter(|&i| a[i] != 0.0)
        .collect();
    kept.sort_unstable();
    let mut values = vec![0.0; a.len()];
    for &i in &kept {
        values[i] = a[i];
    }
    Ok(Truncation { values, kept })
}

/// Euclidean norm of `[a]_r` without materializing it.
pub fn truncated_norm(a: &[f64], r: usize) -> Result<f64> {
    if r == 0 || r > a.len() {
        return Err(Error::BadCardinality { r, n: a.len() });
    }
    if r == a.len() {
        return Ok(a.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let mut sq: Vec<f64> = a.iter().map(|x| x * x).collect();
    sq.select_nth_unstable_by(r - 1, |x, y| y.total_cmp(x));
    Ok(sq[..r].iter().sum::<f64>().sqrt())
}

/// `[a]_r / ‖[a]_r‖`, the maximizer of `⟨a, x⟩` over unit `x` with `‖x‖₀ ≤ r`.
pub fn truncate_normalize(a: &[f64], r: usize) -> Result<UnitVector> {
    let t = truncate(a, r)?;
    UnitVector::normalize(t.values).ok_or(Error::ZeroInput)
}

/// Maximizer of `⟨g, x⟩ − ρ‖x‖₁` over `‖x‖ ≤ 1`: soft-threshold then normalize.
///
/// Returns `None` (the zero flag) when every entry is shrunk to zero.
pub fn soft_threshold_normalize(g: &[f64], rho: f64) -> Option<UnitVector> {
    let shrunk = g
        .iter()
        .map(|&x| x.signum() * (x.abs() - rho).max(0.0))
        .collect();
    UnitVector::normalize(shrunk)
}
