//! Clip manifests (`clip.json`), PNG frame sequences and resampling.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{quantize, Frame};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "clip.json";

const MANIFEST_KEYS: [&str; 7] = [
    "name",
    "fps",
    "width",
    "height",
    "frame_paths",
    "caption",
    "ground_truth_paths",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipManifest {
    pub name: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    /// Paths are resolved relative to the manifest's directory unless absolute.
    pub frame_paths: Vec<PathBuf>,
    #[serde(default)]
    pub caption: Option<String>,
    #[serde(default)]
    pub ground_truth_paths: Option<Vec<PathBuf>>,
}

impl ClipManifest {
    pub fn validate(&self) -> Result<()> {
        if self.frame_paths.is_empty() {
            return Err(Error::InvalidManifest(format!("{}: frame_paths is empty", self.name)));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidManifest(format!(
                "{}: fps must be positive, got {}",
                self.name, self.fps
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidManifest(format!(
                "{}: width and height must be positive",
                self.name
            )));
        }
        if let Some(gt) = &self.ground_truth_paths {
            if gt.len() != self.frame_paths.len() {
                return Err(Error::InvalidManifest(format!(
                    "{}: {} ground truth paths for {} frames",
                    self.name,
                    gt.len(),
                    self.frame_paths.len()
                )));
            }
        }
        Ok(())
    }

    /// Reads and validates a manifest file. Unknown keys are ignored with a warning.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
        if let Some(obj) = value.as_object() {
            for key in obj.keys() {
                if !MANIFEST_KEYS.contains(&key.as_str()) {
                    tracing::warn!(manifest = %path.display(), key, "ignoring unknown manifest key");
                }
            }
        }
        let manifest: ClipManifest =
            serde_json::from_value(value).map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::with_path(e, path))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    frames: Vec<Frame>,
    pub fps: f64,
    pub caption: Option<String>,
}

impl Clip {
    pub fn new(frames: Vec<Frame>, fps: f64, caption: Option<String>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidInput("clip has no frames".into()))?;
        for f in &frames[1..] {
            first.same_dims(f)?;
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidInput(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { frames, fps, caption })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames[0].dims()
    }

    pub fn is_grayscale(&self) -> bool {
        self.frames.iter().all(Frame::is_grayscale)
    }

    /// Same metadata, new frames.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        Clip::new(frames, self.fps, self.caption.clone())
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn read_png(path: &Path) -> Result<Frame> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Frame::from_rgb_bytes(w, h, rgb.as_raw())
}

pub fn write_png(frame: &Frame, path: &Path) -> Result<()> {
    image::save_buffer_with_format(
        path,
        &frame.to_rgb_bytes(),
        frame.width(),
        frame.height(),
        image::ColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(io) => Error::with_path(io, path),
        other => Error::Io(std::io::Error::other(format!("{}: {other}", path.display()))),
    })
}

fn load_frames(base: &Path, paths: &[PathBuf], w: u32, h: u32) -> Result<Vec<Frame>> {
    paths
        .par_iter()
        .map(|p| {
            let path = resolve(base, p);
            let f = read_png(&path)?;
            if f.dims() != (w, h) {
                return Err(Error::DimensionMismatch {
                    path,
                    expected_w: w,
                    expected_h: h,
                    found_w: f.width(),
                    found_h: f.height(),
                });
            }
            Ok(f)
        })
        .collect()
}

/// Loads the frames listed in `manifest`, resolving relative paths against `base`.
pub fn load_clip(manifest: &ClipManifest, base: &Path) -> Result<Clip> {
    manifest.validate()?;
    let frames = load_frames(base, &manifest.frame_paths, manifest.width, manifest.height)?;
    Clip::new(frames, manifest.fps, manifest.caption.clone())
}

/// Loads the ground-truth frames of a manifest, if it lists any.
pub fn load_ground_truth(manifest: &ClipManifest, base: &Path) -> Result<Option<Clip>> {
    match &manifest.ground_truth_paths {
        None => Ok(None),
        Some(paths) => {
            let frames = load_frames(base, paths, manifest.width, manifest.height)?;
            Ok(Some(Clip::new(frames, manifest.fps, manifest.caption.clone())?))
        }
    }
}

/// Reads `path` (a manifest file, or a directory containing `clip.json`) and loads its clip.
pub fn load_clip_file(path: &Path) -> Result<(ClipManifest, Clip)> {
    let file = manifest_path(path);
    let manifest = ClipManifest::read(&file)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let clip = load_clip(&manifest, base)?;
    Ok((manifest, clip))
}

pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn frame_file_name(i: usize) -> String {
    format!("frame_{i:06}.png")
}

fn is_frame_file(name: &str) -> bool {
    name.len() == "frame_000000.png".len()
        && name.starts_with("frame_")
        && name.ends_with(".png")
        && name[6..12].bytes().all(|b| b.is_ascii_digit())
}

/// Writes `clip` as `frame_%06d.png` files plus `clip.json` into `dir`.
///
/// Stale frame files from a previous, longer clip in the same directory are removed.
pub fn save_clip(clip: &Clip, dir: &Path) -> Result<ClipManifest> {
    save_clip_named(clip, dir, None)
}

pub fn save_clip_named(clip: &Clip, dir: &Path, name: Option<&str>) -> Result<ClipManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::with_path(e, dir))?;
    let names: Vec<String> = (0..clip.len()).map(frame_file_name).collect();
    clip.frames()
        .par_iter()
        .zip(names.par_iter())
        .try_for_each(|(f, n)| write_png(f, &dir.join(n)))?;

    let keep: BTreeSet<&str> = names.iter().map(String::as_str).collect();
    for entry in fs::read_dir(dir).map_err(|e| Error::with_path(e, dir))? {
        let entry = entry?;
        let file_name = entry.file_name();
        let Some(s) = file_name.to_str() else { continue };
        if is_frame_file(s) && !keep.contains(s) {
            fs::remove_file(entry.path())?;
        }
    }

    let (width, height) = clip.dims();
    let name = name
        .map(str::to_owned)
        .unwrap_or_else(|| dir.file_name().and_then(|s| s.to_str()).unwrap_or("clip").to_owned());
    let manifest = ClipManifest {
        name,
        fps: clip.fps,
        width,
        height,
        frame_paths: names.into_iter().map(PathBuf::from).collect(),
        caption: clip.caption.clone(),
        ground_truth_paths: None,
    };
    manifest.write(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Per-axis resampling weights: `(first source index, weights)` for each output index.
fn axis_weights(src: usize, dst: usize) -> Vec<(usize, Vec<f64>)> {
    if src == dst {
        return (0..dst).map(|i| (i, vec![1.0])).collect();
    }
    let scale = src as f64 / dst as f64;
    if dst < src {
        // Area averaging: each output sample covers [i*scale, (i+1)*scale).
        (0..dst)
            .map(|i| {
                let lo = i as f64 * scale;
                let hi = (i + 1) as f64 * scale;
                let first = lo.floor() as usize;
                let last = (hi.ceil() as usize).min(src);
                let w = (first..last)
                    .map(|s| {
                        let a = lo.max(s as f64);
                        let b = hi.min((s + 1) as f64);
                        (b - a).max(0.0) / scale
                    })
                    .collect();
                (first, w)
            })
            .collect()
    } else {
        // Bilinear with pixel-centre alignment.
        (0..dst)
            .map(|i| {
                let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = pos.floor() as usize;
                let frac = pos - i0 as f64;
                if i0 + 1 < src && frac > 0.0 {
                    (i0, vec![1.0 - frac, frac])
                } else {
                    (i0, vec![1.0])
                }
            })
            .collect()
    }
}

/// Resizes with area averaging when shrinking an axis and bilinear
/// interpolation when growing it. Results are rounded half-up.
pub fn resize(f: &Frame, w: u32, h: u32) -> Frame {
    assert!(w >= 1 && h >= 1, "target dimensions must be positive");
    if f.dims() == (w, h) {
        return f.clone();
    }
    let (sw, sh) = (f.width() as usize, f.height() as usize);
    let xw = axis_weights(sw, w as usize);
    let yw = axis_weights(sh, h as usize);

    // Horizontal pass into f64 rows, then vertical.
    let mut tmp = vec![[0.0f64; 3]; w as usize * sh];
    for y in 0..sh {
        for (x, (first, weights)) in xw.iter().enumerate() {
            let mut acc = [0.0; 3];
            for (k, wt) in weights.iter().enumerate() {
                let p = f.pixels()[y * sw + first + k];
                acc[0] += wt * p.r as f64;
                acc[1] += wt * p.g as f64;
                acc[2] += wt * p.b as f64;
            }
            tmp[y * w as usize + x] = acc;
        }
    }
    Frame::from_fn(w, h, |x, y| {
        let (first, weights) = &yw[y as usize];
        let mut acc = [0.0; 3];
        for (k, wt) in weights.iter().enumerate() {
            let v = tmp[(first + k) * w as usize + x as usize];
            acc[0] += wt * v[0];
            acc[1] += wt * v[1];
            acc[2] += wt * v[2];
        }
        crate::color::Pixel::new(quantize(acc[0]), quantize(acc[1]), quantize(acc[2]))
    })
}
