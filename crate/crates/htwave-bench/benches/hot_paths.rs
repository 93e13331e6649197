//! Hot paths: the phase calculus, the Bessel kernel, one band of the wave kernel and
//! the multiplier transform.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use htwave::multiplier::{frak_a, sobolev_test_multiplier, MultiplierOptions};
use htwave::phase::{curve, g_cot, phi};
use htwave::special::bessel::bessel_script;
use htwave::wave::{assemble_kkl, KernelOptions, WaveContext};

fn bench_phase(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase");
    let ts: Vec<f64> = (1..=1000).map(|i| 0.01 + 12.0 * i as f64 / 1000.0).filter(|t| (t % std::f64::consts::PI) > 1e-3).collect();
    group.bench_function("g_cot_1000", |b| b.iter(|| ts.iter().map(|&t| g_cot(black_box(t)).map(|d| d.g1).unwrap_or(0.0)).sum::<f64>()));
    group.bench_function("phi_1000", |b| b.iter(|| ts.iter().map(|&t| phi(black_box(t), 0.7, 0.3).map(|p| p.phi_t).unwrap_or(0.0)).sum::<f64>()));
    group.bench_function("curve_1000", |b| b.iter(|| ts.iter().map(|&t| curve(black_box(t)).map(|p| p.v).unwrap_or(0.0)).sum::<f64>()));
    group.finish();
}

fn bench_bessel(c: &mut Criterion) {
    let mut group = c.benchmark_group("bessel");
    let sigmas: Vec<f64> = (1..=1000).map(|i| i as f64 * 0.1).collect();
    for d2 in [1usize, 3] {
        group.bench_function(format!("script_d2_{d2}_1000"), |b| {
            b.iter(|| sigmas.iter().map(|&s| bessel_script(d2, black_box(s)).unwrap()).sum::<f64>())
        });
    }
    group.finish();
}

fn bench_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    group.sample_size(10);
    let opts = KernelOptions::default();
    group.bench_function("context_lambda_32", |b| b.iter(|| WaveContext::new(2, 1, black_box(32.0), &opts).unwrap()));
    let ctx = WaveContext::new(2, 1, 32.0, &opts).unwrap();
    group.bench_function("kkl_lambda_32_k1_l1", |b| b.iter(|| assemble_kkl(&ctx, black_box(1), 1, &opts).unwrap()));
    group.finish();
}

fn bench_multiplier(c: &mut Criterion) {
    let mut group = c.benchmark_group("multiplier");
    group.sample_size(10);
    let opts = MultiplierOptions { xi_step: 2f64.powi(-14), t_min: 0.5, t_max: 2.0, t_per_octave: 4, r_max: 256.0, r_points: 15, ..Default::default() };
    let m = sobolev_test_multiplier(2.0);
    let ts = opts.t_grid();
    group.bench_function("frak_a_two_octaves", |b| b.iter(|| frak_a(&m, black_box(&ts), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_phase, bench_bessel, bench_kernel, bench_multiplier);
criterion_main!(benches);
