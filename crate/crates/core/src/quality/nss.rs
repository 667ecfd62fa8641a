//! Natural-scene-statistics front end shared by NIQE and BRISQUE:
//! MSCN coefficients and generalized Gaussian moment-matching fits.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::color::Frame;
use crate::error::{Error, Result};
use crate::filter::{gaussian_kernel, Plane};

/// Stabilizing constant in the MSCN denominator, on the `[0, 255]` scale.
pub const MSCN_C: f64 = 1.0;
pub const MSCN_WINDOW: usize = 7;
pub const MSCN_SIGMA: f64 = 7.0 / 6.0;
pub const MSCN_MIN_SIDE: u32 = 16;

/// Spread reported for a degenerate (all-zero) coefficient field.
pub const DEGENERATE_SPREAD: f64 = 1e-6;
const DEGENERATE_SHAPE: f64 = 2.0;

/// Mean-subtracted contrast-normalized coefficients of the frame's luma.
pub fn mscn_coefficients(f: &Frame) -> Result<Plane> {
    if f.width() < MSCN_MIN_SIDE || f.height() < MSCN_MIN_SIDE {
        return Err(Error::FrameTooSmall {
            width: f.width(),
            height: f.height(),
            min: MSCN_MIN_SIDE,
        });
    }
    Ok(mscn_plane(&Plane::luma(f)))
}

/// MSCN over an arbitrary plane. Local statistics are accumulated as offsets
/// from the centre sample, so flat regions give exactly zero.
pub(crate) fn mscn_plane(p: &Plane) -> Plane {
    let k1 = gaussian_kernel(MSCN_WINDOW, MSCN_SIGMA);
    let r = (MSCN_WINDOW / 2) as isize;
    let (w, h) = (p.width as isize, p.height as isize);
    let mut out = Vec::with_capacity(p.data.len());
    for y in 0..h {
        for x in 0..w {
            let centre = p.at(x as usize, y as usize);
            let (mut m, mut m2) = (0.0, 0.0);
            for (j, wy) in k1.iter().enumerate() {
                let yy = (y + j as isize - r).clamp(0, h - 1) as usize;
                for (i, wx) in k1.iter().enumerate() {
                    let xx = (x + i as isize - r).clamp(0, w - 1) as usize;
                    let d = p.at(xx, yy) - centre;
                    let wt = wx * wy;
                    m += wt * d;
                    m2 += wt * d * d;
                }
            }
            let sigma = (m2 - m * m).max(0.0).sqrt();
            out.push(-m / (sigma + MSCN_C));
        }
    }
    Plane::new(p.width, p.height, out)
}

const SHAPE_MIN: f64 = 0.2;
const SHAPE_STEP: f64 = 0.001;
const SHAPE_COUNT: usize = 9801;

fn shape_grid() -> &'static [(f64, f64, f64)] {
    static GRID: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    GRID.get_or_init(|| {
        (0..SHAPE_COUNT)
            .map(|i| {
                let g = SHAPE_MIN + i as f64 * SHAPE_STEP;
                let l1 = ln_gamma(1.0 / g);
                let l2 = ln_gamma(2.0 / g);
                let l3 = ln_gamma(3.0 / g);
                // GGD ratio E[x^2]/E[|x|]^2 and its reciprocal for the AGGD fit.
                let ggd = (l1 + l3 - 2.0 * l2).exp();
                (g, ggd, 1.0 / ggd)
            })
            .collect()
    })
}

fn argmin_by(target: f64, pick: impl Fn(&(f64, f64, f64)) -> f64) -> f64 {
    let grid = shape_grid();
    let mut best = (f64::INFINITY, grid[0].0);
    for e in grid {
        let d = (pick(e) - target).abs();
        if d < best.0 {
            best = (d, e.0);
        }
    }
    best.1
}

/// Generalized Gaussian fit by moment matching. Returns `(shape, variance)`.
pub fn ggd_fit(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let var = values.iter().map(|v| v * v).sum::<f64>() / n;
    let mean_abs = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    if values.is_empty() || mean_abs <= 0.0 || var <= 0.0 {
        return (DEGENERATE_SHAPE, DEGENERATE_SPREAD);
    }
    let rho = var / (mean_abs * mean_abs);
    (argmin_by(rho, |e| e.1), var)
}

/// Asymmetric generalized Gaussian fit. Returns `(shape, mean, left variance, right variance)`.
pub fn aggd_fit(values: &[f64]) -> [f64; 4] {
    let (mut ls, mut ln, mut rs, mut rn) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &v in values {
        if v < 0.0 {
            ls += v * v;
            ln += 1;
        } else if v > 0.0 {
            rs += v * v;
            rn += 1;
        }
        abs_sum += v.abs();
        sq_sum += v * v;
    }
    if values.is_empty() || sq_sum <= 0.0 {
        return [DEGENERATE_SHAPE, 0.0, DEGENERATE_SPREAD, DEGENERATE_SPREAD];
    }
    let left_var = if ln > 0 { ls / ln as f64 } else { DEGENERATE_SPREAD };
    let right_var = if rn > 0 { rs / rn as f64 } else { DEGENERATE_SPREAD };
    let n = values.len() as f64;
    let gamma_hat = left_var.sqrt() / right_var.sqrt();
    let r_hat = (abs_sum / n).powi(2) / (sq_sum / n);
    let r_hat_norm = r_hat * (gamma_hat.powi(3) + 1.0) * (gamma_hat + 1.0) / (gamma_hat * gamma_hat + 1.0).powi(2);
    let alpha = argmin_by(r_hat_norm, |e| e.2);
    let l1 = ln_gamma(1.0 / alpha);
    let l2 = ln_gamma(2.0 / alpha);
    let l3 = ln_gamma(3.0 / alpha);
    let mean = (right_var.sqrt() - left_var.sqrt()) * (l2 - l1).exp() * (0.5 * (l1 - l3)).exp();
    [alpha, mean, left_var, right_var]
}

/// The 18 statistics of one MSCN field: GGD `(shape, variance)` of the
/// coefficients followed by AGGD parameters of the horizontal, vertical and
/// two diagonal neighbour products.
pub fn nss_features(m: &Plane) -> [f64; 18] {
    let mut out = [0.0; 18];
    let (shape, var) = ggd_fit(&m.data);
    out[0] = shape;
    out[1] = var;
    let (w, h) = (m.width, m.height);
    let shifts: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    for (k, (dx, dy)) in shifts.iter().enumerate() {
        let mut prods = Vec::with_capacity(w * h);
        for y in 0..h as isize {
            let y2 = y + dy;
            if y2 < 0 || y2 >= h as isize {
                continue;
            }
            for x in 0..w as isize {
                let x2 = x + dx;
                if x2 < 0 || x2 >= w as isize {
                    continue;
                }
                prods.push(m.at(x as usize, y as usize) * m.at(x2 as usize, y2 as usize));
            }
        }
        out[2 + 4 * k..6 + 4 * k].copy_from_slice(&aggd_fit(&prods));
    }
    out
}

/// 36 features: [`nss_features`] at full and half resolution.
pub(crate) fn two_scale_features(p: &Plane) -> Vec<f64> {
    let mut v = nss_features(&mscn_plane(p)).to_vec();
    v.extend_from_slice(&nss_features(&mscn_plane(&p.downsample2())));
    v
}
