//! Exemplar-guided propagation through a luminance-indexed chroma table with
//! exponential temporal smoothing.

use rayon::prelude::*;

use crate::color::{lab_to_rgb_f64, rgb_to_lab, with_luma, Frame, LabPixel, Pixel};
use crate::error::{Error, Result};
use crate::frame_io::Clip;

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Mean Lab `(a, b)` of the exemplar for each 8-bit luma level.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaLut {
    pub entries: [(f64, f64); 256],
    /// Exemplar pixels that fell in each bucket before filling.
    pub counts: [u64; 256],
}

impl ChromaLut {
    #[inline]
    pub fn get(&self, level: u8) -> (f64, f64) {
        self.entries[level as usize]
    }

    /// Largest Euclidean distance between any two entries.
    pub fn spread(&self) -> f64 {
        let mut distinct: Vec<(f64, f64)> = self.entries.to_vec();
        distinct.dedup();
        let mut best: f64 = 0.0;
        for (i, a) in distinct.iter().enumerate() {
            for b in &distinct[i + 1..] {
                best = best.max((a.0 - b.0).hypot(a.1 - b.1));
            }
        }
        best
    }
}

pub fn build_chroma_lut(exemplar: &Frame) -> ChromaLut {
    let mut sums = [(0.0f64, 0.0f64); 256];
    let mut counts = [0u64; 256];
    for p in exemplar.pixels() {
        let lab = rgb_to_lab(*p);
        let k = p.luma() as usize;
        sums[k].0 += lab.a;
        sums[k].1 += lab.b;
        counts[k] += 1;
    }
    let populated: Vec<usize> = (0..256).filter(|&k| counts[k] > 0).collect();
    let mut entries = [(0.0, 0.0); 256];
    for (k, e) in entries.iter_mut().enumerate() {
        // Nearest populated bucket; ties go to the darker one.
        let src = *populated
            .iter()
            .min_by_key(|&&p| (p as i32 - k as i32).unsigned_abs())
            .expect("a frame has at least one pixel");
        let n = counts[src] as f64;
        *e = (sums[src].0 / n, sums[src].1 / n);
    }
    ChromaLut { entries, counts }
}

fn lightness_table() -> [f64; 256] {
    let mut t = [0.0; 256];
    for (v, l) in t.iter_mut().enumerate() {
        *l = rgb_to_lab(Pixel::gray(v as u8)).l;
    }
    t
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Smoothed per-pixel chroma for every frame:
/// `c_0 = lut(y_0)`, `c_t = alpha * c_{t-1} + (1 - alpha) * lut(y_t)`.
pub fn propagate_chroma(gray: &Clip, lut: &ChromaLut, alpha: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    check_alpha(alpha)?;
    let mut out: Vec<Vec<(f64, f64)>> = Vec::with_capacity(gray.len());
    for f in gray.frames() {
        let target = f.pixels().iter().map(|p| lut.get(p.luma()));
        let state = match out.last() {
            None => target.collect(),
            Some(prev) => prev
                .iter()
                .zip(target)
                .map(|(c, t)| (alpha * c.0 + (1.0 - alpha) * t.0, alpha * c.1 + (1.0 - alpha) * t.1))
                .collect(),
        };
        out.push(state);
    }
    Ok(out)
}

/// Colourizes a grayscale clip from an exemplar. The output's Rec.601 luma
/// equals the input's exactly.
pub fn exemplar_propagate(gray: &Clip, exemplar: &Frame, alpha: f64) -> Result<Clip> {
    gray.frames()[0].same_dims(exemplar)?;
    let lut = build_chroma_lut(exemplar);
    let chroma = propagate_chroma(gray, &lut, alpha)?;
    let lightness = lightness_table();
    let frames = gray
        .frames()
        .par_iter()
        .zip(chroma.par_iter())
        .map(|(f, c)| {
            let pixels = f
                .pixels()
                .iter()
                .zip(c)
                .map(|(p, &(a, b))| {
                    let y = p.luma();
                    if a == 0.0 && b == 0.0 {
                        Pixel::gray(y)
                    } else {
                        with_luma(y, lab_to_rgb_f64(LabPixel::new(lightness[y as usize], a, b)))
                    }
                })
                .collect();
            Frame::new(f.width(), f.height(), pixels)
        })
        .collect::<Result<Vec<_>>>()?;
    gray.with_frames(frames)
}
