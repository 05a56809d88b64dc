//! Numeric reference implementations of the six stages, bound to the
//! reaction rules by [`pipeline`].
//!
//! Everything here is generic over [`Scalar`] (`f32` or `f64`); the crate
//! root re-exports `f64` aliases.

mod dataset;
mod ensemble;
mod memory;
mod percept;
pub mod pipeline;
mod reinforce;
mod saliency;
mod sense;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use thiserror::Error;

pub use dataset::{
    export_dataset, gen_synthetic_dataset, import_dataset, spatial_template, temporal_template,
    MediaSample, SPATIAL_SIDE, TEMPORAL_LEN,
};
pub use ensemble::{adaboost_alpha, expert_votes, expert_weights, stage_el, SemanticDecision, EXPERTS};
pub use memory::{stage_il, FeedbackBundle, IlConfig, IlObservation, IlOutcome, MemoryHistory};
pub use percept::{posterior, stage_cc, PerceptFeatures};
pub use reinforce::{stage_rl, Expectation, RlConfig, RlFeedback};
pub use saliency::{local_contrast, stage_sc, ScConfig, SaliencyPair};
pub use sense::{softmax, stage_dl, DlModel, SenseFeatures};

/// Real scalar the stages compute in.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error("{stage}: dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        stage: &'static str,
        expected: String,
        found: String,
    },
    #[error("{stage}: invalid configuration: {message}")]
    InvalidConfig { stage: &'static str, message: String },
    #[error("EL: every expert weight is zero")]
    NoExperts,
    #[error("EL: expert weights must be finite and non-negative")]
    NegativeWeight,
    #[error("CC: prior is not a probability vector")]
    InvalidPrior,
    #[error("RL: expectation does not match the class set")]
    InvalidExpectation,
    #[error("binding: {0}")]
    Binding(String),
    #[error("io: {0}")]
    Io(String),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<StageError>,
    },
}

pub(crate) fn dim_err(stage: &'static str, expected: impl Display, found: impl Display) -> StageError {
    StageError::DimensionMismatch {
        stage,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, StageError> {
        if data.len() != rows * cols {
            return Err(dim_err("matrix", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, StageError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(dim_err("matrix", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row_matrix(row: &[T]) -> Self {
        Self {
            rows: 1,
            cols: row.len(),
            data: row.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Mean of the rows; empty for a matrix with no rows.
    pub fn mean_row(&self) -> Vec<T> {
        let mut mean = vec![T::zero(); self.cols];
        if self.rows == 0 {
            return mean;
        }
        for r in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(r)) {
                *m = *m + *v;
            }
        }
        let n = T::from_usize(self.rows).expect("row count");
        mean.iter_mut().for_each(|m| *m = *m / n);
        mean
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>, StageError> {
        if self.shape() != other.shape() {
            return Err(dim_err(
                "matrix",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        })
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(self.row(r), x))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Sparse `rows x cols` map stored as `(flat index, value)` pairs sorted by
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMap<T> {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseMap<T> {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|(_, v)| !v.is_zero()).count()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.size()];
        for (i, v) in &self.entries {
            out[*i] = *v;
        }
        out
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stage-local seed: `splitmix64(seed ^ splitmix64(fnv1a(stage) ^ splitmix64(iteration)))`.
pub fn derive_seed(seed: u64, stage: &str, iteration: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(seed ^ splitmix64(h ^ splitmix64(iteration)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[1.0f32]), 0);
    }

    #[test]
    fn seeds_differ_by_stage_and_iteration() {
        let a = derive_seed(7, "DL", 0);
        assert_eq!(a, derive_seed(7, "DL", 0));
        assert_ne!(a, derive_seed(7, "SC", 0));
        assert_ne!(a, derive_seed(7, "DL", 1));
        assert_ne!(a, derive_seed(8, "DL", 0));
    }

    #[test]
    fn mean_row_and_shapes() {
        let m = Matrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(m.mean_row(), vec![2.0, 4.0]);
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Matrix::<f64>::zeros(2, 2).add(&Matrix::zeros(2, 3)).is_err());
    }
}
