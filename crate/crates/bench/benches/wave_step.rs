use criterion::{criterion_group, criterion_main, Criterion};

use tvfwi_core::wave;
use tvfwi_core::{AcquisitionGeometry, SourceWavelet, SpongeBoundary, VelocityModel};

/// One forward shot on the paper-scale 50 x 100 grid.
fn bench_forward_shot(c: &mut Criterion) {
    let model = tvfwi_core::models::salt().unwrap();
    let time = wave::default_time_axis(&model, 1.0).unwrap();
    let wavelet = SourceWavelet::ricker(10.0, 0.1).unwrap();
    let geometry = AcquisitionGeometry::surface_spread(&model, 1, 101, 10.0, wavelet, time)
        .unwrap();
    let boundary = SpongeBoundary::cerjan(40);
    let mut group = c.benchmark_group("forward");
    group.sample_size(10);
    group.bench_function("one_shot_50x100_1s", |b| {
        b.iter(|| wave::forward(&model, &geometry, &boundary).unwrap())
    });
    group.finish();
}

fn bench_misfit_gradient(c: &mut Criterion) {
    let model = tvfwi_core::models::salt().unwrap();

    let time = wave::default_time_axis(&model, 1.0).unwrap();
    let wavelet = SourceWavelet::ricker(10.0, 0.1).unwrap();
    let geometry = AcquisitionGeometry::surface_spread(&model, 1, 101, 10.0, wavelet, time)
        .unwrap();
    let boundary = SpongeBoundary::cerjan(40);
    let observed = wave::forward(&model, &geometry, &boundary).unwrap();
    let initial = tvfwi_core::smooth::gaussian_smooth(&model, 10.0).unwrap();
    let mut group = c.benchmark_group("gradient");
    group.sample_size(10);
    group.bench_function("one_shot_50x100_1s", |b| {
        b.iter(|| {
            tvfwi_core::gradient::misfit_gradient(&initial, &geometry, &boundary, &observed)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_forward_shot, bench_misfit_gradient);
criterion_main!(benches);
