use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use uncplab_core::carleman::{carleman_weight, CarlemanGeometry};
use uncplab_core::field::{frequency_transform, tube_integral, Direction};
use uncplab_core::observability::{compressed_gram, sweep, RangeSource};
use uncplab_core::schrodinger::{decompose_problem, Preset};
use uncplab_core::thick::{generate_set, verify_thickness, SetParams};
use uncplab_core::{Field, Grid, TubeGeometry};

fn band_limited(grid: Grid, kmax: i64) -> Field {
    let hat = (0..grid.len())
        .map(|i| {
            let k = grid.wavenumber(i);
            if k.abs() <= kmax {
                Complex64::new((k as f64).cos(), (0.7 * k as f64).sin())
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    frequency_transform(&Field::new(grid, hat).unwrap(), Direction::Inverse)
}

fn observability(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 1024).unwrap();
    let omega = generate_set(grid, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let source = RangeSource::Flat(grid);
    let basis = source.basis(12.0);
    c.bench_function("compressed_gram/rank_61", |b| {
        b.iter(|| compressed_gram(black_box(&basis), &omega, None).unwrap())
    });
    let thresholds: Vec<f64> = (1..=12).map(|k| 2.0 * k as f64).collect();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("flat_1d_12_thresholds", |b| {
        b.iter(|| sweep(source, &omega, black_box(&thresholds)).unwrap())
    });
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let grid = Grid::new(1, 8.0 * PI, 256).unwrap();
    let tube = TubeGeometry::with_half_width(0.5).unwrap();
    let problem = Preset::PoschlTeller.build(grid, 0.5, tube).unwrap();
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    group.bench_function("poschl_teller_256", |b| {
        b.iter(|| decompose_problem(black_box(&problem)).unwrap())
    });
    group.finish();
}

fn fields(c: &mut Criterion) {
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let f = band_limited(grid, 12);
    let mu = 2.0 * PI * 12.0 / 16.0;
    c.bench_function("tube_integral/gl24", |b| {
        b.iter(|| tube_integral(black_box(&f), 0.3, mu, 24).unwrap())
    });
    let omega = generate_set(
        Grid::new(2, 16.0, 128).unwrap(),
        SetParams::Periodic { gamma: 0.5, a: 1.0 },
    )
    .unwrap();
    c.bench_function("verify_thickness/2d_128", |b| {
        b.iter(|| verify_thickness(black_box(&omega), 2.0).unwrap())
    });
}

fn carleman(c: &mut Criterion) {
    let geometry = CarlemanGeometry::unit_interval(vec![(0.0, 0.25), (0.75, 1.0)]).unwrap();
    let mut group = c.benchmark_group("carleman_weight");
    group.sample_size(10);
    group.bench_function("unit_interval_64", |b| {
        b.iter(|| carleman_weight(black_box(&geometry), 64).unwrap())
    });
    group.finish();
}

criterion_group!(benches, observability, spectral, fields, carleman);
criterion_main!(benches);
