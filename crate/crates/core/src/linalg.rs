//! Dense linear algebra helpers over row-major `Vec<f64>` matrices, backed by nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Sample mean and unbiased covariance (row-major, `dim × dim`).
///
/// A single vector yields a zero covariance.
pub fn mean_and_covariance(vectors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; dim * dim];
    if n > 1 {
        for v in vectors {
            for i in 0..dim {
                let di = v[i] - mean[i];
                for j in i..dim {
                    cov[i * dim + j] += di * (v[j] - mean[j]);
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let c = cov[i * dim + j] / (n - 1) as f64;
                cov[i * dim + j] = c;
                cov[j * dim + i] = c;
            }
        }
    }
    (mean, cov)
}

pub fn to_matrix(dim: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, row_major)
}

/// `sqrt(dᵀ ((Σ1 + Σ2)/2 + εI)⁻¹ d)` with `d = μ1 − μ2`.
pub fn pooled_mahalanobis(mu1: &[f64], cov1: &[f64], mu2: &[f64], cov2: &[f64], eps: f64) -> Result<f64> {
    let dim = mu1.len();
    if mu2.len() != dim {
        return Err(Error::FeatureDimension {
            expected: dim,
            found: mu2.len(),
        });
    }
    if cov1.len() != dim * dim || cov2.len() != dim * dim {
        return Err(Error::FeatureDimension {
            expected: dim * dim,
            found: cov1.len().max(cov2.len()),
        });
    }
    let d = DVector::from_iterator(dim, mu1.iter().zip(mu2).map(|(a, b)| a - b));
    if d.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut pooled = (to_matrix(dim, cov1) + to_matrix(dim, cov2)) * 0.5;
    for i in 0..dim {
        pooled[(i, i)] += eps;
    }
    let solved = match pooled.clone().cholesky() {
        Some(ch) => ch.solve(&d),
        None => pooled
            .lu()
            .solve(&d)
            .ok_or_else(|| Error::InvalidInput("singular pooled covariance".into()))?,
    };
    Ok(d.dot(&solved).max(0.0).sqrt())
}

/// Eigen-decomposition of a symmetric matrix; `None` when the iteration does not converge.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Option<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, 1e-14, 10_000)
}
