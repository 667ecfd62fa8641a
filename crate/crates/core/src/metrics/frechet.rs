use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, symmetric_eigen, to_matrix};

/// Diagonal loading applied to empirical covariances.
pub const FRECHET_EPS: f64 = 1e-6;
/// Eigenvalues below `-NEGATIVE_TOLERANCE` mean the input was not PSD.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

/// Mean and row-major covariance of a feature distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
}

impl GaussianSummary {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let s = Self { mean, covariance };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.covariance.len() != d * d {
            return Err(Error::FeatureDimension {
                expected: d * d,
                found: self.covariance.len(),
            });
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (self.covariance[i * d + j], self.covariance[j * d + i]);
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidInput(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// Empirical mean and unbiased covariance plus `eps` on the diagonal.
    pub fn from_vectors(vectors: &[Vec<f64>], eps: f64) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::InsufficientSamples {
                need: 2,
                got: vectors.len(),
            });
        }
        let (mean, mut covariance) = mean_and_covariance(vectors);
        let d = mean.len();
        for i in 0..d {
            covariance[i * d + i] += eps;
        }
        Self::new(mean, covariance)
    }
}

/// Square root of a symmetric PSD matrix by eigendecomposition.
fn psd_sqrt(m: DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let m = (&m + m.transpose()) * 0.5;
    let eig =
        symmetric_eigen(m).ok_or_else(|| Error::MatrixSqrt(format!("{what}: eigendecomposition did not converge")))?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if l < -NEGATIVE_TOLERANCE * scale {
            return Err(Error::MatrixSqrt(format!("{what}: eigenvalue {l:e} is negative")));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots.clone()));
    let q = &eig.eigenvectors;
    Ok((q * d * q.transpose(), roots))
}

/// `‖μ1 − μ2‖² + Tr(Σ1 + Σ2 − 2 (Σ1 Σ2)^½)`.
///
/// `Tr((Σ1 Σ2)^½)` is evaluated as `Tr((Σ1^½ Σ2 Σ1^½)^½)`, which shares its
/// eigenvalues and is symmetric.
pub fn frechet_distance(g1: &GaussianSummary, g2: &GaussianSummary) -> Result<f64> {
    g1.validate()?;
    g2.validate()?;
    let d = g1.dim();
    if g2.dim() != d {
        return Err(Error::FeatureDimension {
            expected: d,
            found: g2.dim(),
        });
    }
    let mean_term: f64 = g1.mean.iter().zip(&g2.mean).map(|(a, b)| (a - b) * (a - b)).sum();
    // Equal covariances: (Σ Σ)^½ = Σ, so the trace term vanishes exactly.
    if d == 0 || g1.covariance == g2.covariance {
        return Ok(mean_term);
    }
    let s1 = to_matrix(d, &g1.covariance);
    let s2 = to_matrix(d, &g2.covariance);
    let (r1, _) = psd_sqrt(s1.clone(), "first covariance")?;
    let inner = &r1 * &s2 * &r1;
    let (_, roots) = psd_sqrt(inner, "covariance product")?;
    let cross: f64 = roots.iter().sum();
    let value = mean_term + s1.trace() + s2.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}
