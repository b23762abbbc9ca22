use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tvfwi_core::proximal::{project_l12_ball, GradientField};

fn random_field(rng: &mut ChaCha8Rng, nz: usize, nx: usize) -> GradientField {
    GradientField {
        dh: Array2::from_shape_fn((nz, nx), |_| rng.gen_range(-1.0..1.0)),
        dv: Array2::from_shape_fn((nz, nx), |_| rng.gen_range(-1.0..1.0)),
    }
}

/// Doubling-N scaling of the l1,2-ball projection (expected O(N log N)).
fn bench_projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_l12_ball");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [2_500usize, 5_000, 10_000, 20_000, 40_000] {
        let nz = 50;
        let nx = n / nz;
        let field = random_field(&mut rng, nz, nx);
        // radius at ~10% of the norm so the threshold search does real work
        let alpha = 0.1 * tvfwi_core::proximal::l12_norm(&field);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| project_l12_ball(&field, alpha))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_projection);
criterion_main!(benches);
