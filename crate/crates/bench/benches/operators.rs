//! Benchmarks for the integral and differential operators.

use criterion::{criterion_group, criterion_main, Criterion};
use divcurl::gauss::RayQuadrature;
use divcurl::{diffops, integral, rayops};
use divcurl_bench::{ball, scalar, solenoidal};

fn bench_teodorescu(c: &mut Criterion) {
    let dom = ball(8);
    let w = solenoidal(&dom);
    let cfg = integral::QuadratureConfig::default();
    c.bench_function("teodorescu_components_n8", |b| {
        b.iter(|| integral::teodorescu_components(&w, &cfg).unwrap())
    });
}

fn bench_newton(c: &mut Criterion) {
    let dom = ball(8);
    let w = scalar(&dom);
    let cfg = integral::QuadratureConfig::default();
    c.bench_function("newton_potential_n8", |b| {
        b.iter(|| integral::newton_potential(&w, &cfg).unwrap())
    });
}

fn bench_radial_moment(c: &mut Criterion) {
    let dom = ball(24);
    let w = scalar(&dom);
    let rule = RayQuadrature::default_rule();
    c.bench_function("radial_moment_n24", |b| {
        b.iter(|| rayops::radial_moment(1.0, &w, &rule).unwrap())
    });
}

fn bench_curl(c: &mut Criterion) {
    let dom = ball(32);
    let w = solenoidal(&dom);
    c.bench_function("curl_n32", |b| b.iter(|| diffops::curl(&w)));
}

criterion_group!(benches, bench_teodorescu, bench_newton, bench_radial_moment, bench_curl);
criterion_main!(benches);
