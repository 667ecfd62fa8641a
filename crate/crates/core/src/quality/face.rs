use serde::{Deserialize, Serialize};

use super::{Polarity, QualityScore, QualityScorer};
use crate::color::Frame;
use crate::error::{Error, Result};

pub const FACE_PROXY_ID: &str = "face-proxy";
const MIN_REGION: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRegion {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl FaceRegion {
    /// Centred box covering half of each dimension.
    pub fn centered(frame_w: u32, frame_h: u32) -> Self {
        Self {
            x: frame_w / 4,
            y: frame_h / 4,
            w: frame_w / 2,
            h: frame_h / 2,
        }
    }

    pub fn validate(&self, frame: &Frame) -> Result<()> {
        let (fw, fh) = frame.dims();
        let inside = self.x as u64 + self.w as u64 <= fw as u64 && self.y as u64 + self.h as u64 <= fh as u64;
        if !inside || self.w < MIN_REGION || self.h < MIN_REGION {
            return Err(Error::RegionOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                frame_w: fw,
                frame_h: fh,
            });
        }
        Ok(())
    }
}

/// Sharpness proxy for face image quality: the variance of the 3×3 Laplacian
/// response inside the region, averaged over the R, G and B channels.
/// Only pixels whose full neighbourhood lies in the region contribute.
pub fn face_quality_score(f: &Frame, region: Option<&FaceRegion>) -> Result<QualityScore> {
    let r = region
        .copied()
        .unwrap_or_else(|| FaceRegion::centered(f.width(), f.height()));
    r.validate(f)?;
    let mut total = 0.0;
    for c in 0..3 {
        let at = |x: u32, y: u32| f.get(x, y).channels()[c] as f64;
        let (mut s, mut s2, mut n) = (0.0, 0.0, 0.0);
        for y in r.y + 1..r.y + r.h - 1 {
            for x in r.x + 1..r.x + r.w - 1 {
                let lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y);
                s += lap;
                s2 += lap * lap;
                n += 1.0;
            }
        }
        let mean = s / n;
        total += (s2 / n - mean * mean).max(0.0);
    }
    QualityScore::new(total / 3.0, Polarity::HigherIsBetter, FACE_PROXY_ID)
}

#[derive(Debug, Clone, Default)]
pub struct FaceQualityProxy {
    pub region: Option<FaceRegion>,
}

impl QualityScorer for FaceQualityProxy {
    fn id(&self) -> &str {
        FACE_PROXY_ID
    }

    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }

    fn score(&self, frame: &Frame) -> Result<QualityScore> {
        face_quality_score(frame, self.region.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Pixel;
    use crate::filter::gaussian_blur;
    use crate::synthetic::textured_frame;

    #[test]
    fn constant_is_zero() {
        let s = face_quality_score(&Frame::filled(32, 32, Pixel::new(5, 6, 7)), None).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.polarity, Polarity::HigherIsBetter);
    }

    #[test]
    fn blur_strictly_decreases() {
        let f = textured_frame(12, 96, 96);
        let scores: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
            .iter()
            .map(|&s| face_quality_score(&gaussian_blur(&f, s), None).unwrap().value)
            .collect();
        for w in scores.windows(2) {
            assert!(w[0] > w[1], "{scores:?}");
        }
    }

    #[test]
    fn translation_invariant() {
        let patch = textured_frame(2, 24, 24);
        let place = |ox: u32, oy: u32| {
            let mut f = Frame::filled(64, 64, Pixel::gray(0));
            for y in 0..24 {
                for x in 0..24 {
                    f.set(ox + x, oy + y, patch.get(x, y));
                }
            }
            let r = FaceRegion {
                x: ox,
                y: oy,
                w: 24,
                h: 24,
            };
            face_quality_score(&f, Some(&r)).unwrap().value
        };
        let a = place(3, 5);
        assert_eq!(a, place(30, 17));
        assert_eq!(a, place(0, 40));
    }

    #[test]
    fn region_bounds() {
        let f = Frame::filled(32, 32, Pixel::gray(1));
        let bad = FaceRegion {
            x: 30,
            y: 0,
            w: 8,
            h: 8,
        };
        assert!(matches!(
            face_quality_score(&f, Some(&bad)),
            Err(Error::RegionOutOfBounds { .. })
        ));
        let tiny = FaceRegion { x: 0, y: 0, w: 4, h: 8 };
        assert!(face_quality_score(&f, Some(&tiny)).is_err());
    }
}
