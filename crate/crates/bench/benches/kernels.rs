use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use critnorm_core::fft::Fft3;
use critnorm_core::field::VectorField;
use critnorm_core::grid::Grid;
use critnorm_core::norms::lorentz_quasinorm;
use critnorm_core::pns::{run, Drift, PnsConfig};
use critnorm_core::spectral::{heat_semigroup_vector, leray_project};

fn taylor_green(g: &Grid, amp: f64) -> VectorField {
    let k = 2.0 * std::f64::consts::PI / g.length();
    VectorField::from_fn(g, |x| {
        let (s0, s1) = ((k * x[0]).sin(), (k * x[1]).sin());
        let (c0, c1, c2) = ((k * x[0]).cos(), (k * x[1]).cos(), (k * x[2]).cos());
        [amp * s0 * c1 * c2, -amp * c0 * s1 * c2, 0.0]
    })
    .unwrap()
}

fn kernels(c: &mut Criterion) {
    for n in [32, 64] {
        let g = Grid::new(n, 8.0).unwrap();
        let v = taylor_green(&g, 1.0);
        let fft = Fft3::new(n);
        let data: Vec<f64> = (0..n * n * n).map(|i| (i % 7) as f64).collect();
        c.bench_function(&format!("fft3 forward+inverse n={n}"), |b| {
            b.iter(|| fft.inverse_real(&fft.forward_real(black_box(&data))))
        });
        c.bench_function(&format!("leray n={n}"), |b| b.iter(|| leray_project(black_box(&v))));
        c.bench_function(&format!("heat n={n}"), |b| b.iter(|| heat_semigroup_vector(black_box(&v), 0.01).unwrap()));
        c.bench_function(&format!("weak L3 n={n}"), |b| {
            b.iter(|| lorentz_quasinorm(black_box(&v), 3.0, f64::INFINITY, None).unwrap())
        });
    }
    let g = Grid::new(32, 8.0).unwrap();
    let v = taylor_green(&g, 0.5);
    let cfg = PnsConfig { dt: 0.01, horizon: 0.05, stride: 5, ..PnsConfig::default() };
    c.bench_function("pns five steps n=32", |b| b.iter(|| run(black_box(&v), Drift::Zero, cfg).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(2));
    targets = kernels
}
criterion_main!(benches);
