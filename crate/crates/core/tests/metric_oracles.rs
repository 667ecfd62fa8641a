//! Metrics checked against independently written reference computations.

#![allow(clippy::needless_range_loop)]

use ccol_core::color::{rgb_to_lab, Frame, Pixel};
use ccol_core::frame_io::Clip;
use ccol_core::metrics::{
    fid, frechet_distance, fvd, psnr, ssim, toy_clip_feature_set, toy_clip_features, toy_frame_features, FeatureSet,
    FeatureUnit, GaussianSummary,
};
use ccol_core::synthetic::speaker_clip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Frame {
    Frame::from_fn(w, h, |_, _| Pixel::new(rng.gen(), rng.gen(), rng.gen()))
}

fn psnr_oracle(a: &Frame, b: &Frame) -> f64 {
    let mut sse = 0.0;
    for (p, q) in a.pixels().iter().zip(b.pixels()) {
        for (x, y) in [(p.r, q.r), (p.g, q.g), (p.b, q.b)] {
            sse += (x as f64 - y as f64).powi(2);
        }
    }
    let mse = sse / (a.pixels().len() as f64 * 3.0);
    20.0 * 255f64.log10() - 10.0 * mse.log10()
}

/// Direct 2-D sliding window with explicitly built 2-D Gaussian weights.
fn ssim_oracle(a: &Frame, b: &Frame) -> f64 {
    let luma = |p: &Pixel| ((299 * p.r as u32 + 587 * p.g as u32 + 114 * p.b as u32 + 500) / 1000) as f64;
    let (w, h) = (a.width() as usize, a.height() as usize);
    let x: Vec<f64> = a.pixels().iter().map(luma).collect();
    let y: Vec<f64> = b.pixels().iter().map(luma).collect();
    let mut g = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut sum = 0.0;
    let mut count = 0.0;
    for oy in 0..=h - 11 {
        for ox in 0..=w - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = (oy + i) * w + ox + j;
                    mx += g[i][j] / total * x[k];
                    my += g[i][j] / total * y[k];
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = (oy + i) * w + ox + j;
                    let wt = g[i][j] / total;
                    vx += wt * (x[k] - mx).powi(2);
                    vy += wt * (y[k] - my).powi(2);
                    cxy += wt * (x[k] - mx) * (y[k] - my);
                }
            }
            sum += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1.0;
        }
    }
    sum / count
}

#[test]
fn psnr_and_ssim_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let a = random_frame(&mut rng, 16, 16);
        let b = random_frame(&mut rng, 16, 16);
        assert!((psnr(&a, &b).unwrap().0 - psnr_oracle(&a, &b)).abs() <= 1e-9);
        assert!((ssim(&a, &b).unwrap() - ssim_oracle(&a, &b)).abs() <= 1e-6);
    }
}

#[test]
fn ssim_on_structured_pair() {
    let c = speaker_clip(2, 40, 40, 5);
    let (a, b) = (&c.frames()[0], &c.frames()[1]);
    let v = ssim(a, b).unwrap();
    assert!((v - ssim_oracle(a, b)).abs() <= 1e-6);
    assert!(v > 0.5 && v < 1.0);
}

// Matrix helpers for a square-root oracle that shares no code with the library.
type M = Vec<Vec<f64>>;

fn mat_mul(a: &M, b: &M) -> M {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn mat_inv(a: &M) -> M {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                m[r].iter_mut().zip(&pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Denman–Beavers iteration for the principal square root.
fn sqrtm(a: &M) -> M {
    let n = a.len();
    let mut y = a.clone();
    let mut z: M = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let (yi, zi) = (mat_inv(&y), mat_inv(&z));
        let ny: M = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (y[i][j] + zi[i][j])).collect())
            .collect();
        let nz: M = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (z[i][j] + yi[i][j])).collect())
            .collect();
        y = ny;
        z = nz;
    }
    y
}

fn frechet_oracle(m1: &[f64], s1: &M, m2: &[f64], s2: &M) -> f64 {
    let n = m1.len();
    let mean: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b).powi(2)).sum();
    let root = sqrtm(&mat_mul(s1, s2));
    mean + (0..n).map(|i| s1[i][i] + s2[i][i] - 2.0 * root[i][i]).sum::<f64>()
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> M {
    let a: M = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                .collect()
        })
        .collect()
}

fn summary(mean: Vec<f64>, cov: &M) -> GaussianSummary {
    GaussianSummary::new(mean, cov.iter().flatten().copied().collect()).unwrap()
}

#[test]
fn frechet_matches_denman_beavers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1, 2, 3, 5, 8] {
        for _ in 0..5 {
            let (s1, s2) = (random_spd(&mut rng, n), random_spd(&mut rng, n));
            let m1: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let m2: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = frechet_distance(&summary(m1.clone(), &s1), &summary(m2.clone(), &s2)).unwrap();
            let want = frechet_oracle(&m1, &s1, &m2, &s2);
            assert!(
                (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                "n={n}: {got} vs {want}"
            );
            let swapped = frechet_distance(&summary(m2, &s2), &summary(m1, &s1)).unwrap();
            assert!((got - swapped).abs() <= 1e-8 * (1.0 + got));
            assert!(got >= 0.0);
        }
    }
}

#[test]
fn frechet_analytic_cases() {
    let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let four = vec![vec![4.0, 0.0], vec![0.0, 4.0]];
    let g = summary(vec![0.0, 0.0], &eye);
    assert!(frechet_distance(&g, &g).unwrap().abs() <= 1e-8);
    assert!((frechet_distance(&g, &summary(vec![3.0, 4.0], &eye)).unwrap() - 25.0).abs() <= 1e-9);
    assert!((frechet_distance(&summary(vec![0.0, 0.0], &four), &g).unwrap() - 2.0).abs() <= 1e-9);
    // Non-diagonal but identical covariances reduce to the mean term.
    let c = vec![vec![2.0, 0.7], vec![0.7, 1.0]];
    let d = frechet_distance(&summary(vec![1.0, 0.0], &c), &summary(vec![0.0, 2.0], &c)).unwrap();
    assert!((d - 5.0).abs() <= 1e-9);
}

fn gaussian_set(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> FeatureSet {
    let v = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen();
                    shift + (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect()
        })
        .collect();
    FeatureSet::new(v, "gauss", FeatureUnit::Frame).unwrap()
}

#[test]
fn fid_shrinks_with_sample_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let values: Vec<f64> = [50, 500, 5000]
        .iter()
        .map(|&n| fid(&gaussian_set(&mut rng, n, 4, 0.0), &gaussian_set(&mut rng, n, 4, 0.0)).unwrap())
        .collect();
    assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
}

#[test]
fn fid_mean_shift_and_order_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let a = gaussian_set(&mut rng, 200, 3, 0.0);
    let shift = [0.5, -1.0, 2.0];
    let b = FeatureSet::new(
        a.vectors()
            .iter()
            .map(|v| v.iter().zip(shift).map(|(x, s)| x + s).collect())
            .collect(),
        "gauss",
        FeatureUnit::Frame,
    )
    .unwrap();
    let want: f64 = shift.iter().map(|s| s * s).sum();
    assert!((fid(&a, &b).unwrap() - want).abs() <= 1e-6);
    assert!(fid(&a, &a).unwrap().abs() <= 1e-8);
    let mut rev = a.vectors().to_vec();
    rev.reverse();
    let r = FeatureSet::new(rev, "gauss", FeatureUnit::Frame).unwrap();
    assert!((fid(&r, &b).unwrap() - fid(&a, &b).unwrap()).abs() <= 1e-8);
}

#[test]
fn toy_features_match_direct_averages() {
    let f = Frame::from_fn(9, 7, |x, y| {
        Pixel::new((x * 25) as u8, (y * 30) as u8, ((x + y) * 10) as u8)
    });
    let v = toy_frame_features(&f);
    // Cells split [0, 9) at 2, 4, 6 and [0, 7) at 1, 3, 5.
    let xs = [0usize, 2, 4, 6, 9];
    let ys = [0usize, 1, 3, 5, 7];
    for gy in 0..4 {
        for gx in 0..4 {
            let mut acc = [0.0; 3];
            let mut n = 0.0;
            for y in ys[gy]..ys[gy + 1] {
                for x in xs[gx]..xs[gx + 1] {
                    let q = rgb_to_lab(f.get(x as u32, y as u32));
                    acc[0] += q.l;
                    acc[1] += q.a;
                    acc[2] += q.b;
                    n += 1.0;
                }
            }
            let k = (gy * 4 + gx) * 3;
            for c in 0..3 {
                assert!((v[k + c] - acc[c] / n).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn toy_clip_features_match_direct_computation() {
    let c = speaker_clip(5, 32, 32, 2);
    let v = toy_clip_features(c.frames()).unwrap();
    let per: Vec<Vec<f64>> = c.frames().iter().map(toy_frame_features).collect();
    for k in 0..48 {
        let mean = per.iter().map(|p| p[k]).sum::<f64>() / 5.0;
        let delta = (0..4).map(|t| (per[t + 1][k] - per[t][k]).abs()).sum::<f64>() / 4.0;
        assert!((v[k] - mean).abs() < 1e-9);
        assert!((v[48 + k] - delta).abs() < 1e-9);
    }
}

/// Deterministic permutation that moves every frame.
fn shuffled(c: &Clip) -> Clip {
    let n = c.len();
    let frames = (0..n).map(|i| c.frames()[(i * 7 + 3) % n].clone()).collect();
    c.with_frames(frames).unwrap()
}

#[test]
fn fvd_increases_when_frames_are_shuffled() {
    let clips: Vec<Clip> = (0..6).map(|s| speaker_clip(16, 48, 48, s)).collect();
    let real: Vec<&Clip> = clips.iter().collect();
    let shuffled_clips: Vec<Clip> = clips.iter().map(shuffled).collect();
    let generated: Vec<&Clip> = shuffled_clips.iter().collect();
    let r = toy_clip_feature_set(&real, 8).unwrap();
    let same = fvd(&r, &toy_clip_feature_set(&real, 8).unwrap()).unwrap();
    let shuffled_value = fvd(&r, &toy_clip_feature_set(&generated, 8).unwrap()).unwrap();
    assert!(same.abs() <= 1e-8);
    assert!(shuffled_value > same);
    // Shuffling leaves the appearance half of each clip vector unchanged.
    let b = toy_clip_features(shuffled_clips[0].frames()).unwrap();
    let full = toy_clip_features(clips[0].frames()).unwrap();
    for k in 0..48 {
        assert!((full[k] - b[k]).abs() < 1e-9);
    }
    assert!(full[48..].iter().zip(&b[48..]).any(|(x, y)| (x - y).abs() > 1e-6));
}
