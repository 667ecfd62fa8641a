use rayon::prelude::*;

use super::niqe::is_flat;
use super::nss::two_scale_features;
use super::{Polarity, QualityModel, QualityScore, QualityScorer};
use crate::color::Frame;
use crate::error::{Error, Result};
use crate::filter::Plane;

pub const BRISQUE_DIM: usize = 36;
const MIN_SIDE: u32 = 32;

/// GGD fit of the MSCN field plus AGGD fits of its four neighbour products,
/// at full and half resolution.
///
/// A constant frame yields the documented fallback: shape 2, spread
/// [`DEGENERATE_SPREAD`](super::nss::DEGENERATE_SPREAD), zero AGGD mean.
pub fn brisque_features(f: &Frame) -> Result<Vec<f64>> {
    if f.width() < MIN_SIDE || f.height() < MIN_SIDE {
        return Err(Error::FrameTooSmall {
            width: f.width(),
            height: f.height(),
            min: MIN_SIDE,
        });
    }
    Ok(two_scale_features(&Plane::luma(f)))
}

/// Distance of a feature vector from the model; a single vector has zero spread.
pub fn brisque_score(v: &[f64], m: &QualityModel) -> Result<QualityScore> {
    if v.len() != m.feature_dim {
        return Err(Error::FeatureDimension {
            expected: m.feature_dim,
            found: v.len(),
        });
    }
    let zero = vec![0.0; v.len() * v.len()];
    QualityScore::new(m.distance(v, &zero)?, Polarity::LowerIsBetter, "brisque")
}

pub fn fit_brisque_model(corpus: &[Frame]) -> Result<QualityModel> {
    if corpus.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: corpus.len(),
        });
    }
    if corpus.iter().all(is_flat) {
        return Err(Error::DegenerateCorpus("every frame is constant".into()));
    }
    let feats: Vec<Vec<f64>> = corpus.par_iter().map(brisque_features).collect::<Result<_>>()?;
    QualityModel::from_vectors(&feats)
}

pub struct BrisqueScorer {
    pub model: QualityModel,
}

impl QualityScorer for BrisqueScorer {
    fn id(&self) -> &str {
        "brisque"
    }

    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }

    fn score(&self, frame: &Frame) -> Result<QualityScore> {
        brisque_score(&brisque_features(frame)?, &self.model)
    }
}
