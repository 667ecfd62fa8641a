//! Deterministic synthetic frames and clips for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::{quantize, Frame, Pixel};
use crate::frame_io::Clip;

pub const SPEAKER_CAPTION: &str = "a speaker in a green top in front of a red background";

/// Smooth colour gradients, a few hard-edged shapes and mild grain.
pub fn textured_frame(seed: u64, w: u32, h: u32) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = [
        rng.gen_range(40.0..200.0),
        rng.gen_range(40.0..200.0),
        rng.gen_range(40.0..200.0),
    ];
    let grad: [f64; 3] = [
        rng.gen_range(-60.0..60.0),
        rng.gen_range(-60.0..60.0),
        rng.gen_range(-60.0..60.0),
    ];
    let shapes: Vec<(f64, f64, f64, [f64; 3])> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(4.0..(w.min(h) as f64 / 3.0).max(5.0)),
                [
                    rng.gen_range(-70.0..70.0),
                    rng.gen_range(-70.0..70.0),
                    rng.gen_range(-70.0..70.0),
                ],
            )
        })
        .collect();
    let freq = rng.gen_range(0.15..0.5);
    Frame::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let t = (xf / w as f64 + yf / h as f64) / 2.0;
        let mut c = [0.0; 3];
        for (k, v) in c.iter_mut().enumerate() {
            *v = base[k] + grad[k] * t + 12.0 * (freq * xf).sin() * (freq * 0.7 * yf).cos();
        }
        for (cx, cy, r, d) in &shapes {
            if (xf - cx).powi(2) + (yf - cy).powi(2) < r * r {
                for k in 0..3 {
                    c[k] += d[k];
                }
            }
        }
        let g = grain(seed, x, y, 0) * 4.0;
        Pixel::new(quantize(c[0] + g), quantize(c[1] + g), quantize(c[2] + g))
    })
}

/// Mid-gray frame with i.i.d. Gaussian noise of standard deviation `sigma`.
pub fn noise_frame(seed: u64, w: u32, h: u32, sigma: f64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::from_fn(w, h, |_, _| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        Pixel::gray(quantize(128.0 + sigma * n))
    })
}

/// Hash-based grain in `[-1, 1]`, stable per `(seed, x, y, t)`.
fn grain(seed: u64, x: u32, y: u32, t: u32) -> f64 {
    let mut z = seed
        ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (t as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Colour head-and-shoulders clip: a swaying speaker with a moving mouth,
/// green top, dark red backdrop and skin-toned face.
pub fn speaker_clip(frames: usize, w: u32, h: u32, seed: u64) -> Clip {
    let (wf, hf) = (w as f64, h as f64);
    let out = (0..frames)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / 12.0;
            let cx = wf / 2.0 + 0.04 * wf * phase.sin();
            let cy = 0.42 * hf + 0.01 * hf * (2.0 * phase).sin();
            let (rx, ry) = (0.17 * wf, 0.22 * hf);
            let mouth_open = 0.012 * hf * (1.0 + (1.7 * phase).sin());
            Frame::from_fn(w, h, |x, y| {
                let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
                let mut c = [118.0 + 40.0 * yf / hf, 18.0, 24.0];
                let shoulder = 0.66 * hf + 0.25 * ((xf - cx) / (0.5 * wf)).powi(2) * hf;
                if yf > shoulder {
                    let stripe = if ((xf - cx) / 5.0).floor() as i64 % 2 == 0 {
                        10.0
                    } else {
                        -6.0
                    };
                    c = [48.0 + stripe, 140.0 + stripe, 62.0 + stripe];
                }
                let nx = (xf - cx) / rx;
                let ny = (yf - cy) / ry;
                if nx * nx + ny * ny < 1.0 {
                    let shade = 18.0 * (1.0 - nx * nx - ny * ny).sqrt();
                    c = [206.0 + shade, 164.0 + shade, 136.0 + shade];
                    if ny < -0.55 {
                        c = [72.0, 46.0, 30.0];
                    }
                    for ex in [-0.38, 0.38] {
                        if ((nx - ex) / 0.14).powi(2) + ((ny + 0.1) / 0.07).powi(2) < 1.0 {
                            c = [40.0, 30.0, 28.0];
                        }
                    }
                    let my = cy + 0.45 * ry;
                    if ((xf - cx) / (0.3 * rx)).powi(2) + ((yf - my) / mouth_open.max(0.5)).powi(2) < 1.0 {
                        c = [120.0, 40.0, 48.0];
                    }
                }
                let g = 2.0 * grain(seed, x, y, t as u32);
                Pixel::new(quantize(c[0] + g), quantize(c[1] + g), quantize(c[2] + g))
            })
        })
        .collect();
    Clip::new(out, 25.0, Some(SPEAKER_CAPTION.to_owned())).expect("non-empty uniform clip")
}
