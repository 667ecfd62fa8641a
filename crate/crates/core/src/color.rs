//! sRGB / CIELAB conversion, Rec.601 desaturation and the [`Frame`] raster.
//!
//! Lab values use the D65 white point with the 2° observer. The white point is
//! taken as the row sums of the sRGB→XYZ matrix so that neutral pixels map to
//! `a == b == 0` up to floating point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit sRGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Pixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Pixel {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: u8) -> Self {
        Self { r: v, g: v, b: v }
    }

    pub fn is_gray(&self) -> bool {
        self.r == self.g && self.g == self.b
    }

    /// Rec.601 luma, rounded half-up. Exact integer arithmetic.
    pub fn luma(&self) -> u8 {
        luma601(self.r, self.g, self.b)
    }

    pub fn channels(&self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabPixel {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabPixel {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn chroma(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Result of [`lab_to_rgb`]: the nearest representable pixel and whether any
/// channel had to be clamped into `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgbConversion {
    pub pixel: Pixel,
    pub clamped: bool,
}

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<Pixel>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<Pixel>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} frame needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, p: Pixel) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![p; width as usize * height as usize],
        }
    }

    /// Builds a frame by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Pixel) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Pixel] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<Pixel> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Pixel {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, p: Pixel) {
        self.pixels[y as usize * self.width as usize + x as usize] = p;
    }

    pub fn is_grayscale(&self) -> bool {
        self.pixels.iter().all(Pixel::is_gray)
    }

    pub fn same_dims(&self, other: &Frame) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::FrameSizeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Rec.601 integer luma per pixel.
    pub fn luma_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(Pixel::luma).collect()
    }

    /// Unrounded Rec.601 luma per pixel on the `[0, 255]` scale.
    pub fn luma_f64(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| 0.299 * p.r as f64 + 0.587 * p.g as f64 + 0.114 * p.b as f64)
            .collect()
    }

    /// Interleaved RGB bytes, the layout used by PNG encoders.
    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.channels()).collect()
    }

    pub fn from_rgb_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width as usize * height as usize * 3 {
            return Err(Error::InvalidInput(format!(
                "expected {} RGB bytes for {width}x{height}, got {}",
                width as usize * height as usize * 3,
                bytes.len()
            )));
        }
        let pixels = bytes.chunks_exact(3).map(|c| Pixel::new(c[0], c[1], c[2])).collect();
        Frame::new(width, height, pixels)
    }
}

/// Quantizes with round-half-up and clamps to `[0, 255]`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[inline]
fn luma601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// sRGB electro-optical transfer: 8-bit code value to linear intensity in `[0, 1]`.
pub fn srgb_to_linear(c: u8) -> f64 {
    decode_gamma(c as f64 / 255.0)
}

#[inline]
fn decode_gamma(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse transfer, extended odd-symmetrically so out-of-gamut values stay finite.
#[inline]
fn encode_gamma(v: f64) -> f64 {
    if v.abs() <= 0.003_130_8 {
        12.92 * v
    } else {
        v.signum() * (1.055 * v.abs().powf(1.0 / 2.4) - 0.055)
    }
}

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

pub fn rgb_to_lab(p: Pixel) -> LabPixel {
    let lin = [srgb_to_linear(p.r), srgb_to_linear(p.g), srgb_to_linear(p.b)];
    let xyz = |row: &[f64; 3]| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    let fx = lab_f(xyz(&RGB_TO_XYZ[0]) / WHITE[0]);
    let fy = lab_f(xyz(&RGB_TO_XYZ[1]) / WHITE[1]);
    let fz = lab_f(xyz(&RGB_TO_XYZ[2]) / WHITE[2]);
    LabPixel {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Lab to unclamped, unquantized sRGB on the `[0, 255]` scale.
pub fn lab_to_rgb_f64(q: LabPixel) -> [f64; 3] {
    let fy = (q.l + 16.0) / 116.0;
    let fx = fy + q.a / 500.0;
    let fz = fy - q.b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(XYZ_TO_RGB.iter()) {
        let lin = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
        *o = encode_gamma(lin) * 255.0;
    }
    out
}

/// Lab to the nearest 8-bit pixel. Out-of-gamut input is clamped, never rejected.
pub fn lab_to_rgb(q: LabPixel) -> RgbConversion {
    let [r, g, b] = lab_to_rgb_f64(q);
    let clamped = [r, g, b].iter().any(|&v| !(-0.5..255.5).contains(&v));
    RgbConversion {
        pixel: Pixel::new(quantize(r), quantize(g), quantize(b)),
        clamped,
    }
}

/// Replaces every pixel by its Rec.601 luma replicated over the three channels.
pub fn desaturate(f: &Frame) -> Frame {
    Frame {
        width: f.width,
        height: f.height,
        pixels: f.pixels.iter().map(|p| Pixel::gray(p.luma())).collect(),
    }
}

/// Quantizes a floating point RGB colour so that its Rec.601 luma is exactly
/// `luma`.
///
/// The colour is first re-centred on the target luma; if that leaves the
/// gamut, its chroma is scaled toward gray until it fits. Rounding error is
/// then absorbed by single-step channel adjustments, each of which moves the
/// integer luma by at most one, so the target is always reached.
pub fn with_luma(luma: u8, rgb: [f64; 3]) -> Pixel {
    let y = luma as f64;
    let current = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
    let offsets = [rgb[0] - current, rgb[1] - current, rgb[2] - current];
    if offsets.iter().all(|o| o.abs() < 1e-12) {
        return Pixel::gray(luma);
    }
    let mut t: f64 = 1.0;
    for o in offsets {
        if y + o > 255.0 {
            t = t.min((255.0 - y) / o);
        } else if y + o < 0.0 {
            t = t.min(-y / o);
        }
    }
    let mut c = [
        quantize(y + t * offsets[0]),
        quantize(y + t * offsets[1]),
        quantize(y + t * offsets[2]),
    ];
    // Channel order by descending weight keeps the correction small.
    const ORDER: [usize; 3] = [1, 0, 2];
    loop {
        let l = luma601(c[0], c[1], c[2]);
        if l == luma {
            break;
        }
        if l < luma {
            match ORDER.iter().find(|&&i| c[i] < 255) {
                Some(&i) => c[i] += 1,
                None => break,
            }
        } else {
            match ORDER.iter().find(|&&i| c[i] > 0) {
                Some(&i) => c[i] -= 1,
                None => break,
            }
        }
    }
    Pixel::new(c[0], c[1], c[2])
}
