use std::hint::black_box;

use ccol_core::backends::{build_chroma_lut, exemplar_propagate, palette_colorize};
use ccol_core::metrics::{frechet_distance, ssim, GaussianSummary, FRECHET_EPS};
use ccol_core::quality::{brisque_features, face_quality_score};
use ccol_core::synthetic::{speaker_clip, textured_frame, SPEAKER_CAPTION};
use ccol_core::{desaturate, Clip};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};

fn bench_ssim(c: &mut Criterion) {
    let mut group = c.benchmark_group("ssim");
    for side in [64u32, 128, 256] {
        let a = textured_frame(1, side, side);
        let b = textured_frame(2, side, side);
        group.bench_with_input(BenchmarkId::from_parameter(side), &side, |bench, _| {
            bench.iter(|| ssim(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_frechet(c: &mut Criterion) {
    let mut group = c.benchmark_group("frechet");
    for dim in [48usize, 96, 256] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(dim as u64);
        let mut sample = |shift: f64| -> Vec<Vec<f64>> {
            (0..2 * dim)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>() + shift).collect())
                .collect()
        };
        let g1 = GaussianSummary::from_vectors(&sample(0.0), FRECHET_EPS).unwrap();
        let g2 = GaussianSummary::from_vectors(&sample(0.1), FRECHET_EPS).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |bench, _| {
            bench.iter(|| frechet_distance(black_box(&g1), black_box(&g2)).unwrap())
        });
    }
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let f = textured_frame(3, 128, 128);
    c.bench_function("brisque_features/128", |b| {
        b.iter(|| brisque_features(black_box(&f)).unwrap())
    });
    c.bench_function("face_proxy/128", |b| {
        b.iter(|| face_quality_score(black_box(&f), None).unwrap())
    });
}

fn bench_colorize(c: &mut Criterion) {
    let clip = speaker_clip(24, 128, 128, 5);
    let gray = Clip::new(clip.frames().iter().map(desaturate).collect(), clip.fps, None).unwrap();
    let cands = palette_colorize(&gray.frames()[0], SPEAKER_CAPTION, 8, 0);
    let exemplar = cands.candidates()[0].clone();
    c.bench_function("palette_candidates/8x128", |b| {
        b.iter(|| palette_colorize(black_box(&gray.frames()[0]), SPEAKER_CAPTION, 8, 0))
    });
    c.bench_function("chroma_lut/128", |b| b.iter(|| build_chroma_lut(black_box(&exemplar))));
    c.bench_function("propagate/24x128", |b| {
        b.iter(|| exemplar_propagate(black_box(&gray), black_box(&exemplar), 0.5).unwrap())
    });
}

criterion_group!(benches, bench_ssim, bench_frechet, bench_scoring, bench_colorize);
criterion_main!(benches);
