use rayon::prelude::*;

use super::nss::{mscn_plane, nss_features};
use super::{Polarity, QualityModel, QualityScore, QualityScorer};
use crate::color::Frame;
use crate::error::{Error, Result};
use crate::filter::Plane;
use crate::linalg::mean_and_covariance;

/// Patch side at full resolution; patches are laid out with stride equal to the side.
pub const NIQE_PATCH: usize = 96;
const MIN_SIDE: u32 = 32;

/// 36-dimensional NSS features for every patch of the frame.
///
/// Frames narrower or shorter than [`NIQE_PATCH`] contribute a single patch
/// spanning that axis (rounded down to an even length).
pub fn niqe_patch_features(f: &Frame) -> Result<Vec<Vec<f64>>> {
    if f.width() < MIN_SIDE || f.height() < MIN_SIDE {
        return Err(Error::FrameTooSmall {
            width: f.width(),
            height: f.height(),
            min: MIN_SIDE,
        });
    }
    let full = Plane::luma(f);
    let half = full.downsample2();
    let m1 = mscn_plane(&full);
    let m2 = mscn_plane(&half);
    let pw = NIQE_PATCH.min(full.width & !1);
    let ph = NIQE_PATCH.min(full.height & !1);
    let mut out = Vec::new();
    for py in 0..full.height / ph {
        for px in 0..full.width / pw {
            let mut v = nss_features(&m1.crop(px * pw, py * ph, pw, ph)).to_vec();
            v.extend_from_slice(&nss_features(&m2.crop(px * pw / 2, py * ph / 2, pw / 2, ph / 2)));
            out.push(v);
        }
    }
    Ok(out)
}

/// Fits the pristine-statistics model from the patch features of `corpus`.
pub fn fit_quality_model(corpus: &[Frame]) -> Result<QualityModel> {
    if corpus.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: corpus.len(),
        });
    }
    if corpus.iter().all(is_flat) {
        return Err(Error::DegenerateCorpus("every frame is constant".into()));
    }
    let per_frame: Vec<Vec<Vec<f64>>> = corpus.par_iter().map(niqe_patch_features).collect::<Result<_>>()?;
    QualityModel::from_vectors(&per_frame.concat())
}

pub(crate) fn is_flat(f: &Frame) -> bool {
    let l = f.luma_f64();
    l.iter().all(|&v| v == l[0])
}

pub fn niqe_score(f: &Frame, m: &QualityModel) -> Result<QualityScore> {
    let feats = niqe_patch_features(f)?;
    if feats[0].len() != m.feature_dim {
        return Err(Error::FeatureDimension {
            expected: m.feature_dim,
            found: feats[0].len(),
        });
    }
    let (mean, cov) = mean_and_covariance(&feats);
    QualityScore::new(m.distance(&mean, &cov)?, Polarity::LowerIsBetter, "niqe")
}

pub struct NiqeScorer {
    pub model: QualityModel,
}

impl QualityScorer for NiqeScorer {
    fn id(&self) -> &str {
        "niqe"
    }

    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }

    fn score(&self, frame: &Frame) -> Result<QualityScore> {
        niqe_score(frame, &self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Pixel;
    use crate::filter::gaussian_blur;
    use crate::synthetic::textured_frame;

    #[test]
    fn patch_layout() {
        assert_eq!(niqe_patch_features(&textured_frame(1, 200, 100)).unwrap().len(), 2);
        assert_eq!(niqe_patch_features(&textured_frame(1, 64, 40)).unwrap().len(), 1);
        assert_eq!(niqe_patch_features(&textured_frame(1, 64, 40)).unwrap()[0].len(), 36);
    }

    #[test]
    fn identical_corpus_has_zero_covariance_and_scores_zero() {
        let f = textured_frame(3, 128, 128);
        let m = fit_quality_model(&[f.clone(), f.clone()]).unwrap();
        assert!(m.covariance.iter().all(|&c| c == 0.0));
        assert_eq!(niqe_score(&f, &m).unwrap().value, 0.0);
    }

    #[test]
    fn two_frame_mean() {
        let a = textured_frame(4, 96, 96);
        let b = textured_frame(5, 96, 96);
        let fa = niqe_patch_features(&a).unwrap().remove(0);
        let fb = niqe_patch_features(&b).unwrap().remove(0);
        let m = fit_quality_model(&[a, b]).unwrap();
        for i in 0..36 {
            assert!((m.mean[i] - (fa[i] + fb[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_corpus() {
        let c = Frame::filled(64, 64, Pixel::gray(9));
        assert!(matches!(
            fit_quality_model(&[c.clone(), c]),
            Err(Error::DegenerateCorpus(_))
        ));
        assert!(fit_quality_model(&[textured_frame(1, 64, 64)]).is_err());
    }

    #[test]
    fn ordering_member_blur_noise() {
        let corpus: Vec<Frame> = (0..20).map(|s| textured_frame(100 + s, 128, 128)).collect();
        let m = fit_quality_model(&corpus).unwrap();
        let member = niqe_score(&corpus[3], &m).unwrap().value;
        let blurred = niqe_score(&gaussian_blur(&corpus[3], 2.0), &m).unwrap().value;
        let noisy = niqe_score(&crate::synthetic::noise_frame(77, 128, 128, 90.0), &m)
            .unwrap()
            .value;
        assert!(member < blurred, "member {member} blurred {blurred}");
        assert!(member < noisy, "member {member} noisy {noisy}");
    }

    #[test]
    fn dimension_mismatch() {
        let m = QualityModel::from_vectors(&[vec![0.0; 3], vec![1.0; 3]]).unwrap();
        assert!(matches!(
            niqe_score(&textured_frame(1, 64, 64), &m),
            Err(Error::FeatureDimension { .. })
        ));
    }
}
