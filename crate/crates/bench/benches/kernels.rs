use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use logvol_core::duality;
use logvol_core::fit::{fit_lasso_path, fit_mle_default, BinaryResponse, Column, LassoConfig, LassoDesign};
use logvol_core::geometry::{sigmoid, volume_density_slice, NaturalParam};
use logvol_core::linalg::{minor_sum_check, DesignMatrix};
use logvol_core::volume::{integrate_volume, IntegrationConfig};

fn random_design(seed: u64, n: usize, q: usize) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = DMatrix::from_fn(n, q, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let x = DesignMatrix::new(m).unwrap();
        if x.is_full_rank() {
            return x;
        }
    }
}

fn bench_density(c: &mut Criterion) {
    let x = random_design(1, 10, 3);
    let beta = [0.4, -0.7, 0.2];
    c.bench_function("volume_density n=10 q=3", |b| {
        b.iter(|| volume_density_slice(black_box(&x), black_box(&beta)))
    });
}

fn bench_volume(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_volume");
    group.sample_size(10);
    for q in 1..=3usize {
        let x = DesignMatrix::new(DMatrix::identity(q, q)).unwrap();
        group.bench_function(format!("saturated q={q}"), |b| {
            b.iter(|| integrate_volume(black_box(&x), &IntegrationConfig::default()))
        });
    }
    let x = random_design(7, 6, 2);
    group.bench_function("random n=6 q=2", |b| {
        b.iter(|| integrate_volume(black_box(&x), &IntegrationConfig::default()))
    });
    group.finish();
}

fn bench_minor_sum(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = DMatrix::from_fn(10, 5, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    c.bench_function("minor_sum_check n=10 q=5 (252 minors)", |b| {
        b.iter(|| minor_sum_check(black_box(&v)))
    });
}

fn bench_fit(c: &mut Criterion) {
    let n = 500usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_design(5, n, 3);
    let y: Vec<u8> = (0..n)
        .map(|i| {
            let eta = 1.2 * x.matrix()[(i, 0)] - 0.8 * x.matrix()[(i, 1)];
            (rng.random::<f64>() < sigmoid(eta)) as u8
        })
        .collect();
    let y = BinaryResponse::new(y).unwrap();
    c.bench_function("fit_mle n=500 q=3", |b| {
        b.iter(|| fit_mle_default(black_box(&x), black_box(&y)))
    });
}

fn bench_lasso(c: &mut Criterion) {
    let n = 400usize;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cols: Vec<Column> = (0..120)
        .map(|_| {
            let idx: Vec<u32> =
                (0..n as u32).filter(|_| rng.random::<f64>() < 0.05).collect();
            Column::Indicator(idx)
        })
        .collect();
    let design = LassoDesign::new(n, cols).unwrap();
    let y: Vec<u8> = (0..n).map(|_| (rng.random::<f64>() < 0.4) as u8).collect();
    let cfg = LassoConfig { n_lambdas: 40, ..Default::default() };
    c.bench_function("lasso path n=400 q=120 (40 lambdas)", |b| {
        b.iter_batched(
            || (design.clone(), y.clone()),
            |(d, y)| fit_lasso_path(&d, &y, &cfg),
            BatchSize::SmallInput,
        )
    });
}

fn bench_duality(c: &mut Criterion) {
    let x = DesignMatrix::from_rows(3, 2, &[1.0, 0.1, -0.2, 1.0, 0.8, -0.7]).unwrap();
    c.bench_function("duality_check q=2 n=3 (3 radii x 1024 samples)", |b| {
        b.iter(|| {
            duality::duality_check(black_box(&x), &[10.0, 100.0, 1000.0], 0.1, 1024, 0)
        })
    });
    let beta = NaturalParam(DVector::from_vec(vec![3.0, -1.0]));
    c.bench_function("reparam_map_f", |b| {
        b.iter(|| duality::reparam_map_f(black_box(&x), black_box(&beta)))
    });
}

criterion_group!(
    benches,
    bench_density,
    bench_volume,
    bench_minor_sum,
    bench_fit,
    bench_lasso,
    bench_duality
);
criterion_main!(benches);
