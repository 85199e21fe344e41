//! Normalization and the folding encoding.
//!
//! The intended pipeline is `zscore_normalize` followed by `fold`: z-scoring
//! produces negative values, and folding turns the signed matrix `U`
//! (m × n′) into a non-negative matrix `X` (m × 2n′). Column `i` of `X`
//! holds the positive parts of column `i` of `U`, column `n′ + i` holds the
//! magnitudes of its negative parts, so `U = X[:, ..n′] − X[:, n′..]`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Raw signed data with optional per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset<L = String> {
    pub u: Matrix,
    pub labels: Option<Vec<L>>,
}

impl<L> RawDataset<L> {
    pub fn new(u: Matrix, labels: Option<Vec<L>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != u.rows() {
                return Err(Error::Shape(format!(
                    "{} labels for {} samples",
                    l.len(),
                    u.rows()
                )));
            }
        }
        Ok(Self { u, labels })
    }
}

/// Non-negative encoding of a signed matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedDataset {
    pub x: Matrix,
    /// Column count n′ of the signed matrix this was folded from.
    pub origin_cols: usize,
}

impl FoldedDataset {
    pub fn new(x: Matrix, origin_cols: usize) -> Result<Self> {
        if x.cols() != 2 * origin_cols {
            return Err(Error::Shape(format!(
                "folded matrix has {} columns, expected 2x{origin_cols}",
                x.cols()
            )));
        }
        Ok(Self { x, origin_cols })
    }
}

/// Per-column statistics recorded by [`zscore_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreStats {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a constant column.
    pub stds: Vec<f64>,
}

impl ZScoreStats {
    /// Applies stored statistics to new data. Constant columns map to zero.
    pub fn apply(&self, u: &Matrix) -> Result<Matrix> {
        if u.cols() != self.means.len() {
            return Err(Error::Shape(format!(
                "data has {} columns, statistics cover {}",
                u.cols(),
                self.means.len()
            )));
        }
        let cols = u.cols();
        Ok(Matrix::from_fn(u.rows(), cols, |i, j| {
            if self.stds[j] > 0.0 {
                (u.get(i, j) - self.means[j]) / self.stds[j]
            } else {
                0.0
            }
        }))
    }
}

/// Column-wise z-scoring with the population (divide-by-m) convention.
pub fn zscore_normalize(u: &Matrix) -> Result<(Matrix, ZScoreStats)> {
    let (m, n) = u.shape();
    if m < 2 {
        return Err(Error::Parameter(format!(
            "z-score normalization needs at least 2 samples, got {m}"
        )));
    }
    let mut means = vec![0.0; n];
    for row in u.iter_rows() {
        for (acc, &x) in means.iter_mut().zip(row) {
            *acc += x;
        }
    }
    for mean in &mut means {
        *mean /= m as f64;
    }
    let mut stds = vec![0.0; n];
    for row in u.iter_rows() {
        for ((acc, &x), &mean) in stds.iter_mut().zip(row).zip(&means) {
            *acc += (x - mean) * (x - mean);
        }
    }
    for sd in &mut stds {
        *sd = (*sd / m as f64).sqrt();
    }
    let stats = ZScoreStats { means, stds };
    let z = stats.apply(u)?;
    Ok((z, stats))
}

pub fn fold(u: &Matrix) -> FoldedDataset {
    let (m, n) = u.shape();
    let mut x = Matrix::zeros(m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let v = u.get(i, j);
            if v > 0.0 {
                x.set(i, j, v);
            } else if v < 0.0 {
                x.set(i, n + j, -v);
            }
        }
    }
    FoldedDataset { x, origin_cols: n }
}

pub fn unfold(folded: &FoldedDataset) -> Result<Matrix> {
    let x = &folded.x;
    let n = folded.origin_cols;
    if !x.cols().is_multiple_of(2) || x.cols() != 2 * n {
        return Err(Error::Shape(format!(
            "cannot unfold {} columns into {n}",
            x.cols()
        )));
    }
    Ok(Matrix::from_fn(x.rows(), n, |i, j| {
        x.get(i, j) - x.get(i, n + j)
    }))
}

/// Target dimension `⌊n′·f⌋` for a reduction fraction `f ∈ (0, 1)`.
pub fn reduced_dim(n_prime: usize, f: f64) -> Result<usize> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Parameter(format!(
            "fraction f must lie in (0,1), got {f}"
        )));
    }
    // Relative nudge so that products like 100 × 0.29 = 28.999999999999996
    // floor to the intended 29.
    let product = n_prime as f64 * f;
    let r = (product * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    if r == 0 {
        return Err(Error::Parameter(format!(
            "floor({n_prime} x {f}) is 0; choose a larger fraction"
        )));
    }
    Ok(r)
}
