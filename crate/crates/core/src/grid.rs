//! Grid sequences indexed by integers and difference operators acting on them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vector-valued sequence `j -> U_j in C^N` stored on a contiguous index window.
///
/// With `implicit_zero` set, reads outside the window return zero instead of failing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSequence {
    dim: usize,
    offset: i64,
    data: Vec<Complex64>,
    implicit_zero: bool,
    zero: Vec<Complex64>,
}

impl GridSequence {
    pub fn zeros(dim: usize, first: i64, len: usize) -> Self {
        Self {
            dim,
            offset: first,
            data: vec![Complex64::new(0.0, 0.0); dim * len],
            implicit_zero: false,
            zero: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn from_fn(dim: usize, first: i64, len: usize, mut f: impl FnMut(i64, &mut [Complex64])) -> Self {
        let mut s = Self::zeros(dim, first, len);
        for k in 0..len {
            f(first + k as i64, &mut s.data[k * dim..(k + 1) * dim]);
        }
        s
    }

    pub fn scalar(first: i64, values: &[Complex64]) -> Self {
        Self::from_fn(1, first, values.len(), |j, out| out[0] = values[(j - first) as usize])
    }

    pub fn real_scalar(first: i64, values: &[f64]) -> Self {
        Self::from_fn(1, first, values.len(), |j, out| {
            out[0] = Complex64::new(values[(j - first) as usize], 0.0)
        })
    }

    pub fn with_implicit_zero(mut self, on: bool) -> Self {
        self.implicit_zero = on;
        self
    }

    pub fn implicit_zero(&self) -> bool {
        self.implicit_zero
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn first(&self) -> i64 {
        self.offset
    }
    /// Last stored index (inclusive).
    pub fn last(&self) -> i64 {
        self.offset + self.len() as i64 - 1
    }
    pub fn contains(&self, j: i64) -> bool {
        j >= self.first() && j <= self.last()
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, j: i64) -> Result<&[Complex64]> {
        if self.contains(j) {
            let k = (j - self.offset) as usize;
            Ok(&self.data[k * self.dim..(k + 1) * self.dim])
        } else if self.implicit_zero {
            Ok(&self.zero)
        } else {
            Err(Error::RangeViolation { index: j, first: self.first(), last: self.last() })
        }
    }

    pub fn get_mut(&mut self, j: i64) -> Result<&mut [Complex64]> {
        if self.contains(j) {
            let k = (j - self.offset) as usize;
            Ok(&mut self.data[k * self.dim..(k + 1) * self.dim])
        } else {
            Err(Error::RangeViolation { index: j, first: self.first(), last: self.last() })
        }
    }

    /// `sum_j |U_j|^2` over the stored window.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `sum_{j in [lo, hi]} |U_j|^2`, treating indices outside the window as zero.
    pub fn norm_sqr_between(&self, lo: i64, hi: i64) -> f64 {
        let lo = lo.max(self.first());
        let hi = hi.min(self.last());
        if lo > hi {
            return 0.0;
        }
        let a = (lo - self.offset) as usize * self.dim;
        let b = (hi - self.offset + 1) as usize * self.dim;
        self.data[a..b].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Copy of the sub-window `[lo, hi]`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self> {
        if lo < self.first() || hi > self.last() || lo > hi + 1 {
            return Err(Error::RangeViolation { index: lo, first: self.first(), last: self.last() });
        }
        let a = (lo - self.offset) as usize * self.dim;
        let b = (hi - self.offset + 1) as usize * self.dim;
        Ok(Self {
            dim: self.dim,
            offset: lo,
            data: self.data[a..b].to_vec(),
            implicit_zero: self.implicit_zero,
            zero: self.zero.clone(),
        })
    }

    /// Copy on `[lo, hi]`, reading through `get` (so implicit zeros fill the gaps).
    pub fn resample(&self, lo: i64, hi: i64) -> Result<Self> {
        let len = (hi - lo + 1).max(0) as usize;
        let mut out = Self::zeros(self.dim, lo, len).with_implicit_zero(self.implicit_zero);
        for j in lo..=hi {
            out.get_mut(j)?.copy_from_slice(self.get(j)?);
        }
        Ok(out)
    }
}

/// Finite linear combination `sum_shift M_shift T^shift` with `(T^l v)_j = v_{j+l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOp {
    dim: usize,
    taps: BTreeMap<i64, DMatrix<f64>>,
}

impl DifferenceOp {
    pub fn new(dim: usize, taps: BTreeMap<i64, DMatrix<f64>>) -> Result<Self> {
        for m in taps.values() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput("tap has wrong shape".into()));
            }
        }
        Ok(Self { dim, taps })
    }

    pub fn identity(dim: usize) -> Self {
        Self::shift(dim, 0)
    }

    pub fn shift(dim: usize, by: i64) -> Self {
        Self { dim, taps: BTreeMap::from([(by, DMatrix::identity(dim, dim))]) }
    }

    /// `D = T - I`.
    pub fn forward_difference(dim: usize) -> Self {
        Self::shift(dim, 1).add(&Self::shift(dim, 0).scale(-1.0))
    }

    /// `D^k`.
    pub fn difference_power(dim: usize, k: usize) -> Self {
        let d = Self::forward_difference(dim);
        (0..k).fold(Self::identity(dim), |acc, _| acc.compose(&d))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn taps(&self) -> &BTreeMap<i64, DMatrix<f64>> {
        &self.taps
    }

    pub fn min_shift(&self) -> i64 {
        self.taps.keys().next().copied().unwrap_or(0)
    }

    pub fn max_shift(&self) -> i64 {
        self.taps.keys().next_back().copied().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, taps: self.taps.iter().map(|(&k, m)| (k, m * s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut taps = self.taps.clone();
        for (&k, m) in &other.taps {
            taps.entry(k).and_modify(|e| *e += m).or_insert_with(|| m.clone());
        }
        taps.retain(|_, m| m.iter().any(|&x| x != 0.0));
        Self { dim: self.dim, taps }
    }

    /// Operator product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let mut taps: BTreeMap<i64, DMatrix<f64>> = BTreeMap::new();
        for (&a, ma) in &self.taps {
            for (&b, mb) in &other.taps {
                let prod = ma * mb;
                taps.entry(a + b).and_modify(|e| *e += &prod).or_insert(prod);
            }
        }
        taps.retain(|_, m| m.iter().any(|&x| x != 0.0));
        Self { dim: self.dim, taps }
    }
}

/// Apply a difference operator to a grid sequence.
///
/// Without implicit zeros the valid window shrinks by the stencil extent; with
/// implicit zeros the result covers the full support of the image.
pub fn apply_op(op: &DifferenceOp, u: &GridSequence) -> Result<GridSequence> {
    if op.dim() != u.dim() {
        return Err(Error::InvalidInput(format!(
            "operator dimension {} does not match sequence dimension {}",
            op.dim(),
            u.dim()
        )));
    }
    let (lo, hi) = if u.implicit_zero() {
        (u.first() - op.max_shift(), u.last() - op.min_shift())
    } else {
        (u.first() - op.min_shift(), u.last() - op.max_shift())
    };
    if hi < lo {
        return Err(Error::StencilTooWide { extent: op.max_shift() - op.min_shift(), len: u.len() });
    }
    let n = u.dim();
    let mut out = GridSequence::zeros(n, lo, (hi - lo + 1) as usize).with_implicit_zero(u.implicit_zero());
    for j in lo..=hi {
        let dst = out.get_mut(j)?;
        for (&shift, m) in op.taps() {
            let src = u.get(j + shift)?;
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += m[(r, c)] * src[c];
                }
                dst[r] += acc;
            }
        }
    }
    Ok(out)
}

/// `D^k u` with `D = T - I`.
pub fn discrete_derivative(k: usize, u: &GridSequence) -> Result<GridSequence> {
    apply_op(&DifferenceOp::difference_power(u.dim(), k), u)
}
