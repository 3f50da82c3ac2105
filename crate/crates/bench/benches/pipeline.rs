//! Hot-path benchmarks: spherical resampling, the soft-argmin rigid
//! solver, the toy denoiser forward pass, and training-sample assembly.
//!
//! `cargo bench -p panocanon-bench` measures; under `cargo test` the
//! harness runs each body once as a smoke test.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use panocanon::leveling::{gt_leveling_flow, soft_argmin_solve};
use panocanon::metrics::seam_score;
use panocanon::sampler::make_training_sample;
use panocanon::sphere::{
    intrinsics_from_fov, project_perspective_to_erp, render_perspective_from_erp, rotate_erp,
    Rotation,
};
use panocanon::topo::{make_toy_dataset, make_toy_panorama, roll_latent, PaddingMode};
use panocanon::{CameraPose, CandidateGrid, PoseSamplerConfig, SoftArgminConfig, ToyDenoiser};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_projection(c: &mut Criterion) {
    let erp = make_toy_panorama(11, 256, 512).unwrap();
    let intr = intrinsics_from_fov(70f64.to_radians(), 4.0 / 3.0, 256, 192).unwrap();
    let pose = CameraPose::new(0.4, 0.2, -0.1).unwrap();
    c.bench_function("render_perspective_256x192_from_512x256", |b| {
        b.iter(|| black_box(render_perspective_from_erp(black_box(&erp), &intr, &pose)));
    });

    let persp = render_perspective_from_erp(&erp, &intr, &pose);
    c.bench_function("project_perspective_into_512x256", |b| {
        b.iter(|| {
            project_perspective_to_erp(black_box(&persp), &intr, &pose, 512, 256).unwrap()
        });
    });

    let rot = Rotation::pitch(0.3).mul(&Rotation::roll(-0.2));
    c.bench_function("rotate_erp_512x256", |b| {
        b.iter(|| black_box(rotate_erp(black_box(&erp), &rot)));
    });
}

fn bench_solver(c: &mut Criterion) {
    let intr = intrinsics_from_fov(70f64.to_radians(), 1.0, 32, 32).unwrap();
    let pose = CameraPose::new(0.0, 8f64.to_radians(), -4f64.to_radians()).unwrap();
    let flow = gt_leveling_flow(&intr, &pose);
    let grid = CandidateGrid::default_search();
    let cfg = SoftArgminConfig::default();
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    g.bench_function("soft_argmin_solve_32x32", |b| {
        b.iter(|| soft_argmin_solve(black_box(&flow), &intr, &grid, &cfg).unwrap());
    });
    g.finish();
}

fn bench_denoiser(c: &mut Criterion) {
    let data = make_toy_dataset(21, 1, 32, 64).unwrap();
    let sample = &data[0];
    let net = ToyDenoiser::seeded(1, 32, PaddingMode::Circular, false, 3).unwrap();
    c.bench_function("toy_denoiser_forward_32ch_32x64", |b| {
        b.iter(|| {
            net.forward(black_box(&sample.z0), &sample.mask, &sample.cond, 50)
                .unwrap()
        });
    });
    c.bench_function("roll_latent_32x64", |b| {
        b.iter(|| black_box(roll_latent(black_box(&sample.z0), 17)));
    });
}

fn bench_sampler(c: &mut Criterion) {
    let erp = make_toy_panorama(5, 64, 128).unwrap();
    let cfg = PoseSamplerConfig {
        crop_height: 32,
        variations: 1,
        seed: 9,
        ..PoseSamplerConfig::default()
    };
    cfg.validate().unwrap();
    let mut g = c.benchmark_group("sampler");
    g.sample_size(10);
    g.bench_function("make_training_sample_128x64", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            make_training_sample(black_box(&erp), &mut rng, &cfg, "bench", 7).unwrap()
        });
    });
    g.finish();

    c.bench_function("seam_score_512x256", |b| {
        let pano = make_toy_panorama(11, 256, 512).unwrap();
        b.iter(|| black_box(seam_score(black_box(&pano))));
    });
}

criterion_group!(
    benches,
    bench_projection,
    bench_solver,
    bench_denoiser,
    bench_sampler
);
criterion_main!(benches);
