//! Float planes and small separable filters shared by the quality scorers and metrics.

use crate::color::{quantize, Frame, Pixel};

/// Single-channel `f64` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn luma(frame: &Frame) -> Self {
        Self::new(frame.width() as usize, frame.height() as usize, frame.luma_f64())
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.at(x, y)
    }

    /// 2×2 box downsample; odd trailing rows/columns are dropped.
    pub fn downsample2(&self) -> Plane {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                data.push(s / 4.0);
            }
        }
        Plane::new(w, h, data)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Plane {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Plane::new(w, h, data)
    }
}

/// Normalized 1-D Gaussian taps of length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable convolution with edge replication. Output has the input's size.
pub fn convolve_replicate(p: &Plane, k: &[f64]) -> Plane {
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; p.data.len()];
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for (i, w) in k.iter().enumerate() {
                acc += w * p.clamped(x as isize + i as isize - r, y as isize);
            }
            tmp[y * p.width + x] = acc;
        }
    }
    let tmp = Plane::new(p.width, p.height, tmp);
    let mut out = vec![0.0; p.data.len()];
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for (i, w) in k.iter().enumerate() {
                acc += w * tmp.clamped(x as isize, y as isize + i as isize - r);
            }
            out[y * p.width + x] = acc;
        }
    }
    Plane::new(p.width, p.height, out)
}

/// Gaussian blur of every channel; `sigma <= 0` returns a copy.
pub fn gaussian_blur(f: &Frame, sigma: f64) -> Frame {
    if sigma <= 0.0 {
        return f.clone();
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let k = gaussian_kernel(2 * radius + 1, sigma);
    let (w, h) = (f.width() as usize, f.height() as usize);
    let channel = |c: usize| {
        let data = f.pixels().iter().map(|p| p.channels()[c] as f64).collect();
        convolve_replicate(&Plane::new(w, h, data), &k)
    };
    let (r, g, b) = (channel(0), channel(1), channel(2));
    Frame::from_fn(f.width(), f.height(), |x, y| {
        let i = y as usize * w + x as usize;
        Pixel::new(quantize(r.data[i]), quantize(g.data[i]), quantize(b.data[i]))
    })
}
