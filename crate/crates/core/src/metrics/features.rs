//! Feature sets, the text feature-file format and the built-in toy extractors.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frechet::{frechet_distance, GaussianSummary, FRECHET_EPS};
use crate::color::{rgb_to_lab, Frame};
use crate::error::{Error, Result};
use crate::frame_io::Clip;

pub const TOY_FRAME_EXTRACTOR: &str = "toy-lab-grid";
pub const TOY_CLIP_EXTRACTOR: &str = "toy-lab-temporal";
pub const TOY_GRID: usize = 4;
pub const TOY_FRAME_DIM: usize = TOY_GRID * TOY_GRID * 3;
pub const TOY_CLIP_DIM: usize = 2 * TOY_FRAME_DIM;
/// Preferred clip length for FVD windows.
pub const FVD_WINDOW: usize = 16;

const FILE_MAGIC: &str = "ccol-features";
const FILE_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureUnit {
    Frame,
    Clip,
}

impl FeatureUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureUnit::Frame => "frame",
            FeatureUnit::Clip => "clip",
        }
    }
}

impl std::str::FromStr for FeatureUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(FeatureUnit::Frame),
            "clip" => Ok(FeatureUnit::Clip),
            other => Err(Error::Parse(format!("unknown feature unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    vectors: Vec<Vec<f64>>,
    pub extractor_id: String,
    pub unit: FeatureUnit,
}

impl FeatureSet {
    pub fn new(vectors: Vec<Vec<f64>>, extractor_id: impl Into<String>, unit: FeatureUnit) -> Result<Self> {
        let extractor_id = extractor_id.into();
        if vectors.is_empty() {
            return Err(Error::InvalidInput("feature set is empty".into()));
        }
        if extractor_id.is_empty() || extractor_id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid extractor id `{extractor_id}`")));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("feature vectors have dimension 0".into()));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::FeatureDimension {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("feature vector holds a non-finite value".into()));
            }
        }
        Ok(Self {
            vectors,
            extractor_id,
            unit,
        })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn summary(&self) -> Result<GaussianSummary> {
        GaussianSummary::from_vectors(&self.vectors, FRECHET_EPS)
    }

    /// `ccol-features v1 <count> <dim> <unit> <extractor_id>` then one
    /// space-separated vector per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{FILE_MAGIC} {FILE_VERSION} {} {} {} {}\n",
            self.len(),
            self.dim(),
            self.unit.as_str(),
            self.extractor_id
        );
        for v in &self.vectors {
            let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty feature file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != FILE_MAGIC || fields[1] != FILE_VERSION {
            return Err(Error::Parse(format!("bad feature file header `{header}`")));
        }
        let count: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad count `{}`", fields[2])))?;
        let dim: usize = fields[3]
            .parse()
            .map_err(|_| Error::Parse(format!("bad dim `{}`", fields[3])))?;
        let unit: FeatureUnit = fields[4].parse()?;
        let mut vectors = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let v = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("vector {i}: bad number `{t}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != dim {
                return Err(Error::FeatureDimension {
                    expected: dim,
                    found: v.len(),
                });
            }
            vectors.push(v);
        }
        if vectors.len() != count {
            return Err(Error::Parse(format!(
                "header declares {count} vectors, found {}",
                vectors.len()
            )));
        }
        Self::new(vectors, fields[5], unit)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        Self::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::with_path(e, path))
    }
}

fn check_pair(real: &FeatureSet, generated: &FeatureSet, unit: FeatureUnit) -> Result<()> {
    for s in [real, generated] {
        if s.unit != unit {
            return Err(Error::MismatchedFeatures(format!(
                "expected {}-level features, got {}-level",
                unit.as_str(),
                s.unit.as_str()
            )));
        }
        if s.len() < 2 {
            return Err(Error::InsufficientSamples { need: 2, got: s.len() });
        }
    }
    if real.extractor_id != generated.extractor_id {
        return Err(Error::MismatchedFeatures(format!(
            "extractor `{}` vs `{}`",
            real.extractor_id, generated.extractor_id
        )));
    }
    if real.dim() != generated.dim() {
        return Err(Error::FeatureDimension {
            expected: real.dim(),
            found: generated.dim(),
        });
    }
    Ok(())
}

/// Fréchet distance between two frame-level feature sets.
pub fn fid(real: &FeatureSet, generated: &FeatureSet) -> Result<f64> {
    check_pair(real, generated, FeatureUnit::Frame)?;
    frechet_distance(&real.summary()?, &generated.summary()?)
}

/// Fréchet distance between two clip-level feature sets.
pub fn fvd(real: &FeatureSet, generated: &FeatureSet) -> Result<f64> {
    check_pair(real, generated, FeatureUnit::Clip)?;
    frechet_distance(&real.summary()?, &generated.summary()?)
}

/// Cell `i` of `n` along an axis of length `len`; never empty.
fn cell_range(i: usize, n: usize, len: usize) -> std::ops::Range<usize> {
    let lo = (i * len / n).min(len - 1);
    let hi = ((i + 1) * len / n).max(lo + 1);
    lo..hi
}

/// Mean Lab `(L, a, b)` over each cell of a 4×4 grid, row-major.
pub fn toy_frame_features(f: &Frame) -> Vec<f64> {
    let (w, h) = (f.width() as usize, f.height() as usize);
    let lab: Vec<_> = f.pixels().iter().map(|p| rgb_to_lab(*p)).collect();
    let mut out = Vec::with_capacity(TOY_FRAME_DIM);
    for gy in 0..TOY_GRID {
        for gx in 0..TOY_GRID {
            let (mut s, mut n) = ([0.0; 3], 0.0);
            for y in cell_range(gy, TOY_GRID, h) {
                for x in cell_range(gx, TOY_GRID, w) {
                    let q = lab[y * w + x];
                    s[0] += q.l;
                    s[1] += q.a;
                    s[2] += q.b;
                    n += 1.0;
                }
            }
            out.extend(s.iter().map(|v| v / n));
        }
    }
    out
}

/// Mean frame features followed by the mean absolute frame-to-frame change.
pub fn toy_clip_features(frames: &[Frame]) -> Result<Vec<f64>> {
    if frames.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: frames.len(),
        });
    }
    let feats: Vec<Vec<f64>> = frames.iter().map(toy_frame_features).collect();
    let n = feats.len() as f64;
    let mut out = vec![0.0; TOY_CLIP_DIM];
    for v in &feats {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x / n;
        }
    }
    let m = (feats.len() - 1) as f64;
    for pair in feats.windows(2) {
        for (k, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            out[TOY_FRAME_DIM + k] += (b - a).abs() / m;
        }
    }
    Ok(out)
}

pub fn toy_frame_feature_set(frames: &[Frame]) -> Result<FeatureSet> {
    use rayon::prelude::*;
    let vectors = frames.par_iter().map(toy_frame_features).collect();
    FeatureSet::new(vectors, TOY_FRAME_EXTRACTOR, FeatureUnit::Frame)
}

/// Window length used to cut a clip of `n` frames into FVD units: 16 frames,
/// halved until the clip yields at least two windows, never below 2.
pub fn fvd_window_len(n: usize) -> usize {
    let mut len = FVD_WINDOW;
    while len > 2 && n / len < 2 {
        len /= 2;
    }
    len
}

/// Non-overlapping windows of `len` frames; a short trailing window is dropped.
pub fn clip_windows(clip: &Clip, len: usize) -> Vec<&[Frame]> {
    clip.frames().chunks_exact(len).collect()
}

pub fn toy_clip_feature_set(clips: &[&Clip], window: usize) -> Result<FeatureSet> {
    let mut vectors = Vec::new();
    for c in clips {
        for w in clip_windows(c, window) {
            vectors.push(toy_clip_features(w)?);
        }
    }
    if vectors.is_empty() {
        return Err(Error::InsufficientSamples {
            need: window,
            got: clips.iter().map(|c| c.len()).max().unwrap_or(0),
        });
    }
    FeatureSet::new(vectors, TOY_CLIP_EXTRACTOR, FeatureUnit::Clip)
}
