//! No-reference quality scoring: NIQE, BRISQUE features, a face-region
//! sharpness proxy and an external scorer protocol.

mod brisque;
mod external;
mod face;
mod niqe;
pub mod nss;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::Frame;
use crate::error::{Error, Result};
use crate::linalg;

pub use brisque::{brisque_features, brisque_score, fit_brisque_model, BrisqueScorer, BRISQUE_DIM};
pub use external::{ExternalScorer, ExternalScorerConfig};
pub use face::{face_quality_score, FaceQualityProxy, FaceRegion, FACE_PROXY_ID};
pub use niqe::{fit_quality_model, niqe_patch_features, niqe_score, NiqeScorer, NIQE_PATCH};
pub use nss::mscn_coefficients;

/// Diagonal loading applied before inverting covariances.
pub const COVARIANCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub value: f64,
    pub polarity: Polarity,
    pub scorer_id: String,
}

impl QualityScore {
    pub fn new(value: f64, polarity: Polarity, scorer_id: impl Into<String>) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite quality score {value}")));
        }
        Ok(Self {
            value,
            polarity,
            scorer_id: scorer_id.into(),
        })
    }

    /// The score with lower-is-better orientation.
    pub fn oriented(&self) -> f64 {
        match self.polarity {
            Polarity::LowerIsBetter => self.value,
            Polarity::HigherIsBetter => -self.value,
        }
    }
}

/// Multivariate Gaussian over a feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub feature_dim: usize,
    pub mean: Vec<f64>,
    /// Row-major `feature_dim × feature_dim`.
    pub covariance: Vec<f64>,
}

impl QualityModel {
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or(Error::InsufficientSamples { need: 1, got: 0 })?;
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::FeatureDimension {
                expected: dim,
                found: v.len(),
            });
        }
        let (mean, covariance) = linalg::mean_and_covariance(vectors);
        Ok(Self {
            feature_dim: dim,
            mean,
            covariance,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.feature_dim;
        if self.mean.len() != d {
            return Err(Error::FeatureDimension {
                expected: d,
                found: self.mean.len(),
            });
        }
        if self.covariance.len() != d * d {
            return Err(Error::FeatureDimension {
                expected: d * d,
                found: self.covariance.len(),
            });
        }
        for i in 0..d {
            for j in i + 1..d {
                if (self.covariance[i * d + j] - self.covariance[j * d + i]).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// Pooled-covariance distance between this model and a sample summary.
    pub fn distance(&self, mean: &[f64], covariance: &[f64]) -> Result<f64> {
        if mean.len() != self.feature_dim {
            return Err(Error::FeatureDimension {
                expected: self.feature_dim,
                found: mean.len(),
            });
        }
        linalg::pooled_mahalanobis(&self.mean, &self.covariance, mean, covariance, COVARIANCE_EPS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        let m: QualityModel = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::with_path(e, path))
    }
}

/// A quality scorer with declared polarity, usable for exemplar selection.
pub trait QualityScorer: Send + Sync {
    fn id(&self) -> &str;
    fn polarity(&self) -> Polarity;
    fn score(&self, frame: &Frame) -> Result<QualityScore>;
}
