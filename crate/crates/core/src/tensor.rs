//! Dense d-way tensors in column-major layout and the multilinear
//! contractions every algorithm is built from.
//!
//! Mode indices are zero-based throughout the API. The flat layout puts the
//! first index fastest, so an `n_1 × n_2 × ... × n_d` tensor viewed as an
//! `n_1 × (n_2⋯n_d)` matrix needs no data movement.

use crate::error::{Error, Result};

/// A real d-way array with explicit shape, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::ShapeMismatch("tensor order must be at least 1".into()));
    }
    if let Some(m) = shape.iter().position(|&n| n == 0) {
        return Err(Error::ShapeMismatch(format!("mode {m} has zero length")));
    }
    Ok(shape.iter().product())
}

/// Column-major strides for `shape`.
pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(shape.len());
    let mut acc = 1;
    for &n in shape {
        strides.push(acc);
        acc *= n;
    }
    strides
}

/// Contract mode `k` of the column-major array `(shape, data)` with `v`.
fn contract_raw(shape: &[usize], data: &[f64], k: usize, v: &[f64]) -> Vec<f64> {
    let inner: usize = shape[..k].iter().product();
    let nk = shape[k];
    let outer: usize = shape[k + 1..].iter().product();
    let mut out = vec![0.0; inner * outer];
    for o in 0..outer {
        let dst = &mut out[inner * o..inner * (o + 1)];
        for (i, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let start = inner * (i + nk * o);
            for (d, &s) in dst.iter_mut().zip(&data[start..start + inner]) {
                *d += w * s;
            }
        }
    }
    out
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = validate_shape(&shape)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Build a tensor by evaluating `f` at every multi-index (column-major order).
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = validate_shape(shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, &n) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < n {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// An order-1 tensor holding `v`.
    pub fn from_vector(v: Vec<f64>) -> Result<Self> {
        Self::new(vec![v.len()], v)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: index.len(),
            });
        }
        let mut off = 0;
        let mut stride = 1;
        for (mode, (&i, &n)) in index.iter().zip(&self.shape).enumerate() {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    mode,
                    index: i,
                    size: n,
                });
            }
            off += i * stride;
            stride *= n;
        }
        Ok(off)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let off = self.offset(index)?;
        self.data[off] = value;
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    fn check_vectors<V: AsRef<[f64]>>(&self, xs: &[V], skip: Option<usize>) -> Result<()> {
        if xs.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: xs.len(),
            });
        }
        for (j, (x, &n)) in xs.iter().zip(&self.shape).enumerate() {
            if Some(j) != skip && x.as_ref().len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.as_ref().len(),
                });
            }
        }
        Ok(())
    }

    /// Same flat data under a new shape; fails unless the entry counts agree.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        let len = validate_shape(new_shape)?;
        if len != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {:?} ({} entries) to {new_shape:?} ({len} entries)",
                self.shape,
                self.len()
            )));
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Reorder modes: mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let d = self.order();
        if perm.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; d];
        for (k, &m) in perm.iter().enumerate() {
            self.check_mode(m)?;
            if inverse[m] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            inverse[m] = k;
        }
        let new_shape: Vec<usize> = perm.iter().map(|&m| self.shape[m]).collect();
        let new_strides = strides_of(&new_shape);
        // Stride, in the new layout, of each old mode.
        let moved: Vec<usize> = (0..d).map(|m| new_strides[inverse[m]]).collect();

        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0usize; d];
        let mut target = 0usize;
        for &value in &self.data {
            out[target] = value;
            for m in 0..d {
                idx[m] += 1;
                target += moved[m];
                if idx[m] < self.shape[m] {
                    break;
                }
                target -= moved[m] * idx[m];
                idx[m] = 0;
            }
        }
        Ok(Self {
            shape: new_shape,
            data: out,
        })
    }

    /// Mode-`mode` unfolding: an `n_mode × Π_{k≠mode} n_k` matrix whose
    /// columns run column-major over the remaining modes in ascending order.
    pub fn mode_unfold(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let n = self.shape[mode];
        let rest = self.len() / n;
        if mode == 0 {
            return self.reshape(&[n, rest]);
        }
        let mut perm = Vec::with_capacity(self.order());
        perm.push(mode);
        perm.extend((0..self.order()).filter(|&k| k != mode));
        let permuted = self.permute(&perm)?;
        Ok(Self {
            shape: vec![n, rest],
            data: permuted.data,
        })
    }

    /// The mode-d fiber `A(i_1, ..., i_{d-1}, :)`.
    pub fn fiber(&self, fixed: &[usize]) -> Result<Vec<f64>> {
        let d = self.order();
        if fixed.len() + 1 != d {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                got: fixed.len(),
            });
        }
        let mut base = 0;
        let mut stride = 1;
        for (mode, (&i, &n)) in fixed.iter().zip(&self.shape).enumerate() {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    mode,
                    index: i,
                    size: n,
                });
            }
            base += i * stride;
            stride *= n;
        }
        Ok((0..self.shape[d - 1])
            .map(|k| self.data[base + k * stride])
            .collect())
    }

    /// Contract one mode with a vector, dropping that mode.
    pub fn contract_mode(&self, mode: usize, v: &[f64]) -> Result<Self> {
        self.check_mode(mode)?;
        if self.order() < 2 {
            return Err(Error::InvalidArgument(
                "cannot contract the only mode of an order-1 tensor".into(),
            ));
        }
        if v.len() != self.shape[mode] {
            return Err(Error::DimensionMismatch {
                expected: self.shape[mode],
                got: v.len(),
            });
        }
        let data = contract_raw(&self.shape, &self.data, mode, v);
        let mut shape = self.shape.clone();
        shape.remove(mode);
        Ok(Self { shape, data })
    }

    /// Contract every mode for which `xs[k]` is `Some`, last mode first.
    fn contract_selected(&self, xs: &[Option<&[f64]>]) -> (Vec<usize>, Vec<f64>) {
        let mut shape = self.shape.clone();
        let mut data: Option<Vec<f64>> = None;
        for k in (0..xs.len()).rev() {
            if let Some(v) = xs[k] {
                let next = contract_raw(&shape, data.as_deref().unwrap_or(&self.data), k, v);
                shape.remove(k);
                data = Some(next);
            }
        }
        (shape, data.unwrap_or_else(|| self.data.clone()))
    }

    /// The full contraction `𝒜x_1⋯x_d = ⟨𝒜, x_1∘⋯∘x_d⟩`.
    pub fn multilinear_value<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<f64> {
        self.check_vectors(xs, None)?;
        let mut slots: Vec<Option<&[f64]>> = xs.iter().map(|x| Some(x.as_ref())).collect();
        slots[0] = None;
        let (_, rest) = self.contract_selected(&slots);
        Ok(dot(&rest, xs[0].as_ref()))
    }

    /// Partial gradient with respect to `x_mode`; the `mode` slot of `xs` is ignored.
    pub fn multilinear_grad<V: AsRef<[f64]>>(&self, xs: &[V], mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        self.check_vectors(xs, Some(mode))?;
        let slots: Vec<Option<&[f64]>> = xs
            .iter()
            .enumerate()
            .map(|(k, x)| if k == mode { None } else { Some(x.as_ref()) })
            .collect();
        Ok(self.contract_selected(&slots).1)
    }

    /// The `n_{d-1} × n_d` matrix `𝒜x_1⋯x_{d-2}` (partial Hessian in the last two modes).
    pub fn partial_hessian<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<Self> {
        let d = self.order();
        if d < 3 {
            return Err(Error::OrderTooSmall { min: 3, got: d });
        }
        if xs.len() != d - 2 {
            return Err(Error::DimensionMismatch {
                expected: d - 2,
                got: xs.len(),
            });
        }
        let mut slots: Vec<Option<&[f64]>> = Vec::with_capacity(d);
        for (x, &n) in xs.iter().zip(&self.shape) {
            if x.as_ref().len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.as_ref().len(),
                });
            }
            slots.push(Some(x.as_ref()));
        }
        slots.extend([None, None]);
        let (shape, data) = self.contract_selected(&slots);
        Ok(Self { shape, data })
    }

    /// `weight · x_1∘⋯∘x_d`.
    pub fn rank1_outer<V: AsRef<[f64]>>(xs: &[V], weight: f64) -> Result<Self> {
        let shape: Vec<usize> = xs.iter().map(|x| x.as_ref().len()).collect();
        let mut out = Self::zeros(&shape)?;
        out.add_outer(xs, weight)?;
        Ok(out)
    }

    /// In place `self += weight · x_1∘⋯∘x_d`.
    pub fn add_outer<V: AsRef<[f64]>>(&mut self, xs: &[V], weight: f64) -> Result<()> {
        self.check_vectors(xs, None)?;
        // Build the outer product one mode at a time in column-major order.
        let mut acc = vec![weight];
        for x in xs {
            let x = x.as_ref();
            let mut next = Vec::with_capacity(acc.len() * x.len());
            for &xi in x {
                next.extend(acc.iter().map(|&a| a * xi));
            }
            acc = next;
        }
        for (d, a) in self.data.iter_mut().zip(acc) {
            *d += a;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// Slice `i` along the last mode, as a tensor of order `d - 1`.
    pub fn last_mode_slice(&self, i: usize) -> Result<Self> {
        let d = self.order();
        if d < 2 {
            return Err(Error::InvalidArgument(
                "an order-1 tensor has no slices".into(),
            ));
        }
        let n = self.shape[d - 1];
        if i >= n {
            return Err(Error::IndexOutOfRange {
                mode: d - 1,
                index: i,
                size: n,
            });
        }
        let block = self.len() / n;
        Self::new(
            self.shape[..d - 1].to_vec(),
            self.data[block * i..block * (i + 1)].to_vec(),
        )
    }

    /// The subtensor on the Cartesian product of per-mode index lists.
    pub fn subtensor(&self, supports: &[Vec<usize>]) -> Result<Self> {
        if supports.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: supports.len(),
            });
        }
        let strides = self.strides();
        let shape: Vec<usize> = supports.iter().map(Vec::len).collect();
        for (mode, (s, &n)) in supports.iter().zip(&self.shape).enumerate() {
            if let Some(&bad) = s.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange {
                    mode,
                    index: bad,
                    size: n,
                });
            }
        }
        Self::from_fn(&shape, |idx| {
            let off: usize = idx
                .iter()
                .zip(supports)
                .zip(&strides)
                .map(|((&i, s), &st)| s[i] * st)
                .sum();
            self.data[off]
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
