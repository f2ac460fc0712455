//! Dense real tensors with row-major storage.
//!
//! Mode indices are zero-based throughout the crate API. A tensor of shape
//! `[M_1, .., M_N]` stores entry `(d_1, .., d_N)` at flat offset
//! `sum_i d_i * prod_{k>i} M_k`, i.e. the last index varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of entries of any tensor the crate materializes.
pub const DEFAULT_SIZE_CAP: u128 = 100_000_000;

/// Entry cap honoured by size-checked constructors. `TNARCH_SIZE_CAP` overrides the default.
pub fn size_cap() -> u128 {
    std::env::var("TNARCH_SIZE_CAP")
        .ok()
        .and_then(|v| v.trim().parse::<u128>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_SIZE_CAP)
}

/// Product of `dims`, or `None` on `u128` overflow.
pub(crate) fn checked_volume(dims: impl IntoIterator<Item = usize>) -> Option<u128> {
    dims.into_iter()
        .try_fold(1u128, |acc, d| acc.checked_mul(d as u128))
}

pub(crate) fn check_size(what: impl Into<String>, dims: &[usize], cap: u128) -> Result<usize> {
    let what = what.into();
    match checked_volume(dims.iter().copied()) {
        Some(n) if n <= cap && n <= usize::MAX as u128 => Ok(n as usize),
        Some(n) => Err(Error::SizeLimit { what, needed: n, cap }),
        None => Err(Error::SizeLimit {
            what,
            needed: u128::MAX,
            cap,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Shape("tensor order must be at least 1".into()));
        }
        if let Some(pos) = shape.iter().position(|&d| d == 0) {
            return Err(Error::Shape(format!("mode {pos} has dimension 0")));
        }
        let expected = checked_volume(shape.iter().copied())
            .ok_or_else(|| Error::Shape("shape volume overflows".into()))?;
        if expected != data.len() as u128 {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = check_size("zeros", &shape, size_cap())?;
        Self::new(shape, vec![0.0; n])
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = check_size("from_fn", &shape, size_cap())?;
        if shape.is_empty() {
            return Err(Error::Shape("tensor order must be at least 1".into()));
        }
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Self::new(shape, data)
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    /// Matrix from row slices; all rows must have equal length.
    pub fn matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Self::new(vec![r, c], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
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

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(self.strides())
            .map(|(&i, s)| i * s)
            .sum()
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, d)| i >= d) {
            return None;
        }
        Some(self.data[self.offset(index)])
    }

    /// Row `r` of an order-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        assert_eq!(self.order(), 2, "row() needs a matrix");
        let c = self.shape[1];
        &self.data[r * c..(r + 1) * c]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Frobenius inner product; shapes must agree exactly.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "inner product of shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Outer product: the result has shape `self.shape ++ other.shape`.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let n = check_size("tensor product", &shape, size_cap())?;
        let mut data = Vec::with_capacity(n);
        for &a in &self.data {
            data.extend(other.data.iter().map(|&b| a * b));
        }
        Self::new(shape, data)
    }

    /// Rearranges the tensor as a matrix with the modes of `p.rows()` indexing rows
    /// and `p.cols()` indexing columns, each group in ascending mode order with its
    /// last mode varying fastest.
    pub fn matricize(&self, p: &IndexPartition) -> Result<Self> {
        p.check_covers(self.order())?;
        let (rows, cols) = matricization_dims(&self.shape, p);
        let row_of = group_offsets(&self.shape, p.rows());
        let col_of = group_offsets(&self.shape, p.cols());
        let mut out = vec![0.0; rows * cols];
        let mut idx = vec![0usize; self.order()];
        for &v in &self.data {
            let r: usize = p.rows().iter().map(|&m| row_of[m] * idx[m]).sum();
            let c: usize = p.cols().iter().map(|&m| col_of[m] * idx[m]).sum();
            out[r * cols + c] = v;
            increment(&mut idx, &self.shape);
        }
        Self::new(vec![rows, cols], out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn unmatricize(matrix: &Self, shape: &[usize], p: &IndexPartition) -> Result<Self> {
        p.check_covers(shape.len())?;
        let (rows, cols) = matricization_dims(shape, p);
        if matrix.shape != [rows, cols] {
            return Err(Error::Shape(format!(
                "expected a {rows}x{cols} matrix, got {:?}",
                matrix.shape
            )));
        }
        let row_of = group_offsets(shape, p.rows());
        let col_of = group_offsets(shape, p.cols());
        Self::from_fn(shape.to_vec(), |idx| {
            let r: usize = p.rows().iter().map(|&m| row_of[m] * idx[m]).sum();
            let c: usize = p.cols().iter().map(|&m| col_of[m] * idx[m]).sum();
            matrix.data[r * cols + c]
        })
    }
}

/// Order-N tensor `v_1 ⊗ .. ⊗ v_N` from order-1 tensors.
pub fn rank1_from_vectors(vs: &[DenseTensor]) -> Result<DenseTensor> {
    let (first, rest) = vs
        .split_first()
        .ok_or_else(|| Error::Shape("rank-1 construction needs at least one vector".into()))?;
    if let Some(bad) = vs.iter().position(|v| v.order() != 1) {
        return Err(Error::Shape(format!("factor {bad} is not a vector")));
    }
    rest.iter()
        .try_fold(first.clone(), |acc, v| acc.tensor_product(v))
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Advances a row-major multi-index; wraps to all zeros after the last entry.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn matricization_dims(shape: &[usize], p: &IndexPartition) -> (usize, usize) {
    let rows = p.rows().iter().map(|&m| shape[m]).product();
    let cols = p.cols().iter().map(|&m| shape[m]).product();
    (rows, cols)
}

/// Per-mode multiplier within its group: `prod_{t' > t} M_{i_t'}`.
fn group_offsets(shape: &[usize], group: &[usize]) -> Vec<usize> {
    let mut mult = vec![0usize; shape.len()];
    let mut acc = 1usize;
    for &m in group.iter().rev() {
        mult[m] = acc;
        acc *= shape[m];
    }
    mult
}

/// A split of the modes `0..order` into row modes and column modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexPartition {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl IndexPartition {
    /// Both groups are sorted on construction; they must be disjoint.
    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Result<Self> {
        rows.sort_unstable();
        cols.sort_unstable();
        for g in [&rows, &cols] {
            if g.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Partition(format!("duplicated mode in {g:?}")));
            }
        }
        if let Some(m) = rows.iter().find(|m| cols.binary_search(m).is_ok()) {
            return Err(Error::Partition(format!("mode {m} appears on both sides")));
        }
        Ok(Self { rows, cols })
    }

    /// Partition of `0..order` with `rows` on one side and every other mode on the other.
    pub fn from_rows(rows: Vec<usize>, order: usize) -> Result<Self> {
        let cols = (0..order).filter(|m| !rows.contains(m)).collect();
        let p = Self::new(rows, cols)?;
        p.check_covers(order)?;
        Ok(p)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn order(&self) -> usize {
        self.rows.len() + self.cols.len()
    }

    pub fn check_covers(&self, order: usize) -> Result<()> {
        if self.order() != order
            || self.rows.iter().chain(&self.cols).any(|&m| m >= order)
        {
            return Err(Error::Partition(format!(
                "{:?} | {:?} does not partition modes 0..{order}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}
