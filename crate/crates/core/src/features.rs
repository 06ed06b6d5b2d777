//! PCNP feature extraction and feature standardization.

use crate::clustering::{SegmentedImage, MASKED_LABEL};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::{real, Real};

/// Per-cluster number of pixels: counts[i] is how many visible pixels of
/// the segmented image carry label i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcnpVector {
    pub counts: Vec<u64>,
}

impl PcnpVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_reals<T: Real>(&self) -> Vec<T> {
        self.counts.iter().map(|&c| real(c as f64)).collect()
    }
}

pub fn extract_pcnp<T: Real>(segmented: &SegmentedImage<T>) -> PcnpVector {
    let mut counts = vec![0u64; segmented.palette.k()];
    for &label in &segmented.labels {
        if label != MASKED_LABEL {
            counts[label as usize] += 1;
        }
    }
    PcnpVector { counts }
}

/// Per-column affine rescaler to zero mean and unit standard deviation.
/// Uses the population (divide-by-n) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler<T> {
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

pub fn fit_scaler<T: Real>(matrix: &Matrix<T>) -> Result<StandardScaler<T>> {
    if matrix.rows() == 0 || matrix.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = real::<T>(matrix.rows() as f64);
    let cols = matrix.cols();
    let mut means = vec![T::zero(); cols];
    for row in matrix.iter_rows() {
        for (m, &x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    let mut vars = vec![T::zero(); cols];
    for row in matrix.iter_rows() {
        for ((v, &m), &x) in vars.iter_mut().zip(&means).zip(row) {
            let d = x - m;
            *v += d * d;
        }
    }
    let stds = vars.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(StandardScaler { means, stds })
}

impl<T: Real> StandardScaler<T> {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Zero-std columns map to 0.
    pub fn transform_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.means.len() {
            return Err(Error::LengthMismatch { expected: self.means.len(), got: row.len() });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&x, (&m, &s))| if s > T::zero() { (x - m) / s } else { T::zero() })
            .collect())
    }

    pub fn transform(&self, matrix: &Matrix<T>) -> Result<Matrix<T>> {
        if matrix.cols() != self.means.len() {
            return Err(Error::LengthMismatch { expected: self.means.len(), got: matrix.cols() });
        }
        let mut out = matrix.clone();
        for i in 0..out.rows() {
            let row = self.transform_row(matrix.row(i))?;
            out.row_mut(i).copy_from_slice(&row);
        }
        Ok(out)
    }
}
