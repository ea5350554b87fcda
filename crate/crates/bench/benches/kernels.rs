use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gibbs_core::exact::{ConvolutionTable, Kolchin};
use gibbs_core::laws::{stable_density_inversion, stable_density_series, StableParams};
use gibbs_core::presets;
use gibbs_core::sampler::{replicate_rng, ExactSampler};

fn convolution_table(c: &mut Criterion) {
    let k = Kolchin::new(&presets::scheme_a(), 1000).unwrap();
    c.bench_function("convolution table n=1000", |b| {
        b.iter(|| ConvolutionTable::new(black_box(&k.law_x.pmf), 1000, 1000).unwrap())
    });
}

fn law_nn(c: &mut Criterion) {
    c.bench_function("kolchin and law_nn n=2000", |b| {
        b.iter(|| {
            Kolchin::new(black_box(&presets::scheme_a()), 2000)
                .unwrap()
                .law_nn(2000)
                .unwrap()
        })
    });
}

fn stable_density(c: &mut Criterion) {
    let p = StableParams::dense(1.5).unwrap();
    c.bench_function("stable density series", |b| {
        b.iter(|| stable_density_series(&p, black_box(0.7)).unwrap())
    });
    c.bench_function("stable density inversion", |b| {
        b.iter(|| stable_density_inversion(&p, black_box(0.7)).unwrap())
    });
}

fn sampler(c: &mut Criterion) {
    let k = Kolchin::new(&presets::scheme_b(), 3000).unwrap();
    let s = ExactSampler::new(&k, 3000).unwrap();
    let mut rng = replicate_rng(1, 0);
    c.bench_function("exact sampler n=3000", |b| b.iter(|| s.draw(&mut rng)));
}

criterion_group!(benches, convolution_table, law_nn, stable_density, sampler);
criterion_main!(benches);
