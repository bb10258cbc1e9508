use carleman_core::waveguide::log_sech;
use carleman_core::*;
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use std::hint::black_box;

fn certified() -> Weight {
    let mut w = Weight::log_linear().unwrap();
    w.certify(20.0, 0.02).unwrap();
    w
}

fn bundle_apply(c: &mut Criterion) {
    let w = certified();
    let grid = GridSpec::with_spacing(3, 8.0, 0.005).unwrap();
    let b = assemble_bundle(&w, 2.0, 0.01, grid, None).unwrap();
    let f: Vec<Complex64> = (0..grid.num_points)
        .map(|i| {
            let r = grid.coord(i);
            Complex64::new((-(r - 3.0) * (r - 3.0)).exp(), 0.1 * r)
        })
        .collect();
    c.bench_function("apply_s_a", |bch| {
        bch.iter(|| {
            let s = b.apply_s_raw(black_box(&f));
            let a = b.apply_a_raw(black_box(&f));
            (s, a)
        })
    });
}

fn certify(c: &mut Criterion) {
    let w = Weight::log_linear().unwrap();
    c.bench_function("certify_log_weight", |bch| {
        bch.iter(|| certify_weight(black_box(&w), 10.0, 1e-2).unwrap())
    });
}

fn eigensolve(c: &mut Criterion) {
    let v = PotentialSpec::sech_well(2.0, 1.0).unwrap();
    let grid = GridSpec::with_spacing(1, 20.0, 5e-3).unwrap();
    c.bench_function("eigensolve_sech", |bch| {
        bch.iter(|| solve_stationary(black_box(&v), grid, 3).unwrap())
    });
}

fn ledger(c: &mut Criterion) {
    let w = certified();
    let grid = GridSpec::with_spacing(1, 6.0, 0.02).unwrap();
    let b = assemble_bundle(&w, 1.0, 0.01, grid, None).unwrap();
    let field = SpaceTimeField::from_fn(grid, 0.0, 1.0, 41, |t, x| {
        Complex64::from_polar((-x * x).exp(), t)
    })
    .unwrap();
    c.bench_function("ledger", |bch| {
        bch.iter(|| evaluate_ledger(black_box(&field), &b, None).unwrap())
    });
}

fn norm_scan(c: &mut Criterion) {
    let grid = GridSpec::with_spacing(1, 1024.0, 0.125).unwrap();
    let u = LogMagnitudeField::from_fn(grid, 0.0, 1.0, 3, |_, x| log_sech(x)).unwrap();
    let betas: Vec<f64> = (0..21).map(|i| 1.8 + 0.02 * f64::from(i)).collect();
    let radii = [64.0, 128.0, 256.0, 512.0, 1016.0];
    c.bench_function("weighted_norm_scan", |bch| {
        bch.iter(|| weighted_norm_scan(black_box(&u), 1.0, &betas, &radii).unwrap())
    });
}

criterion_group!(benches, bundle_apply, certify, eigensolve, ledger, norm_scan);
criterion_main!(benches);
