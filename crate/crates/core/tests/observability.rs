use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncplab_core::field::TubeGeometry;
use uncplab_core::observability::{
    compressed_gram, fit_kovrijkine_k, kovrijkine_bound, observability_constant, pipeline_for_field, sweep,
    theorem_pipeline, PipelineParams, RangeSource, SweepMode, ENVELOPE_TOL,
};
use uncplab_core::schrodinger::{decompose_problem, Branch, Preset, SpectralDecomposition};
use uncplab_core::thick::{generate_set, SetParams, ThickSet};
use uncplab_core::{Error, Grid};

const PI: f64 = std::f64::consts::PI;

fn poschl_teller() -> &'static SpectralDecomposition {
    static DEC: OnceLock<SpectralDecomposition> = OnceLock::new();
    DEC.get_or_init(|| {
        let g = Grid::new(1, 8.0 * PI, 256).unwrap();
        let tube = TubeGeometry::with_half_width(0.5).unwrap();
        decompose_problem(&Preset::PoschlTeller.build(g, 0.5, tube).unwrap()).unwrap()
    })
}

/// `∫_ω sech²(x - c) / ∫ sech²(x - c)` over the cells of `ω`.
fn sech_fraction(omega: &ThickSet) -> f64 {
    let g = omega.grid();
    let (h, c) = (g.spacing(), g.length() / 2.0);
    let on: f64 = omega
        .indicator()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| {
            let a = i as f64 * h - c;
            (a + h).tanh() - a.tanh()
        })
        .sum();
    on / (2.0 * (g.length() / 2.0).tanh())
}

fn half_circle() -> (Grid, ThickSet) {
    let g = Grid::new(1, 2.0 * PI, 64).unwrap();
    (g, ThickSet::from_fn(g, |x| x[0] < PI))
}

#[test]
fn seven_mode_gram_matches_closed_form() {
    let (g, omega) = half_circle();
    let source = RangeSource::Flat(g);
    let basis = source.basis(3.0);
    assert_eq!(basis.len(), 7);
    let gram = compressed_gram(&basis, &omega, None).unwrap();
    // basis order is FFT order: k = 0, 1, 2, 3, -3, -2, -1
    let ks = [0i64, 1, 2, 3, -3, -2, -1];
    let closed = DMatrix::from_fn(7, 7, |j, k| {
        let m = (ks[k] - ks[j]) as f64;
        if m == 0.0 {
            Complex64::new(0.5, 0.0)
        } else {
            (Complex64::from_polar(1.0, m * PI) - 1.0) / Complex64::new(0.0, 2.0 * PI * m)
        }
    });
    assert!((&gram - &closed).camax() < 1e-13);
    let oracle = closed.symmetric_eigenvalues().min();
    let c = observability_constant(source, 3.0, &omega).unwrap();
    assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}");
    assert!(c > 0.0 && c < 0.5);
}

#[test]
fn full_box_gives_one() {
    let g = Grid::new(2, 6.0, 16).unwrap();
    let full = ThickSet::full(g);
    assert!((observability_constant(RangeSource::Flat(g), 3.0, &full).unwrap() - 1.0).abs() < 1e-12);
    let curve = sweep(RangeSource::Flat(g), &full, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(curve.c_values.iter().all(|c| (c - 1.0).abs() < 1e-12));
    assert!(curve.fit.rate.abs() < 1e-10);
    assert!((curve.fit.amplitude - 1.0).abs() < 1e-10);

    let dec = poschl_teller();
    let g = *dec.grid();
    let c = observability_constant(RangeSource::Spectral(dec), 2.0, &ThickSet::full(g)).unwrap();
    assert!((c - 1.0).abs() < 1e-10);
}

#[test]
fn bound_state_fraction_is_the_tanh_integral() {
    let dec = poschl_teller();
    let g = *dec.grid();
    let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let source = RangeSource::Spectral(dec);
    assert_eq!(source.rank(-0.5), 1);
    let exact = sech_fraction(&omega);
    let c = observability_constant(source, -0.5, &omega).unwrap();
    assert!((c - exact).abs() < 1e-6, "{c} vs {exact}");
    let shifted = omega.shifted(&[7]);
    let c2 = observability_constant(source, -0.5, &shifted).unwrap();
    assert!((c2 - sech_fraction(&shifted)).abs() < 1e-6);
}

#[test]
fn negative_thresholds_are_flat() {
    let dec = poschl_teller();
    let omega = generate_set(*dec.grid(), SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let thresholds = [-0.9, -0.7, -0.5, -0.3, -0.1];
    let curve = sweep(RangeSource::Spectral(dec), &omega, &thresholds).unwrap();
    assert_eq!(curve.mode, SweepMode::Energy);
    assert!(curve.mode_counts.iter().all(|&r| r == 1));
    let c0 = curve.c_values[0];
    assert!(curve.c_values.iter().all(|c| (c - c0).abs() < 1e-10));
    assert_eq!(curve.fit.rate, 0.0);
}

#[test]
fn thresholds_below_the_spectrum_are_rejected() {
    let dec = poschl_teller();
    let omega = ThickSet::full(*dec.grid());
    let err = sweep(RangeSource::Spectral(dec), &omega, &[-3.0, -2.5, -2.0]);
    assert!(matches!(err, Err(Error::RankZero)));
    assert!(matches!(
        sweep(RangeSource::Spectral(dec), &omega, &[-0.5, 0.5]),
        Err(Error::DegenerateFit(_))
    ));
    assert!(sweep(RangeSource::Spectral(dec), &omega, &[0.5, -0.5, 1.0]).is_err());
}

#[test]
fn flat_sweep_decreases_and_fits_an_exponential_law() {
    let g = Grid::new(1, 16.0, 256).unwrap();
    let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let mus: Vec<f64> = (1..=8).map(|k| 2.0 * k as f64).collect();
    let curve = sweep(RangeSource::Flat(g), &omega, &mus).unwrap();
    assert!(curve.c_values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(curve.c_values.iter().all(|&c| c > 0.0 && c <= 1.0));
    assert!(curve.fit.rate > 0.0);
    assert!(curve.fit.residual <= ENVELOPE_TOL && curve.fit_dominates());
    assert!(curve.mode_counts.windows(2).all(|w| w[0] < w[1]));

    let mut csv = Vec::new();
    curve.write_csv(&mut csv, Some("abc")).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# config_sha256=abc"));
    assert_eq!(
        lines.next(),
        Some("mode,threshold,rank,c_min,log_inv_c,fit_A,fit_C,residual")
    );
    assert_eq!(lines.count(), mus.len());

    let k = fit_kovrijkine_k(&curve, 0.5, 1.0).unwrap();
    for (&mu, &c) in curve.mu_values.iter().zip(&curve.c_values) {
        assert!(c >= kovrijkine_bound(0.5, 1.0, mu / PI, k).unwrap());
    }
}

#[test]
fn rank_seven_pipeline() {
    let g = Grid::new(1, 2.0 * PI, 64).unwrap();
    let omega = generate_set(
        g,
        SetParams::Periodic {
            gamma: 0.5,
            a: PI / 4.0,
        },
    )
    .unwrap();
    let mut params = PipelineParams::new(3.0, 0.3);
    params.seed = 11;
    let r = theorem_pipeline(RangeSource::Flat(g), &omega, &params).unwrap();
    assert_eq!(r.rank, 7);
    assert!(r.reconstruction_error <= 1e-10);
    assert!(r.h_bound_holds && r.norm_h <= (0.3f64 * 3.0).exp() * r.norm_f + 1e-10);
    assert!(r.tube_bound_ratio.unwrap() <= 1.0);
    assert!(r.observed_fraction >= r.c_min - 1e-12);
    assert!(r.final_inequality_margin >= 0.0);
    assert!(r.pass, "{r:?}");
    assert_eq!(r, theorem_pipeline(RangeSource::Flat(g), &omega, &params).unwrap());
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    for key in [
        "mu",
        "s0",
        "reconstruction_error",
        "tube_bound_ratio",
        "final_inequality_margin",
        "seed",
        "geometry_hash",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn bound_state_pipeline_has_unimodular_multiplier() {
    let dec = poschl_teller();
    let g = *dec.grid();
    let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let f = dec.mode(0);
    for branch in [Branch::Plus, Branch::Minus] {
        let mut params = PipelineParams::new(-0.5, 1.0);
        params.branch = branch;
        let r = pipeline_for_field(RangeSource::Spectral(dec), &omega, &f, &params).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.multiplier_modulus - 1.0).abs() < 1e-15);
        assert!((r.norm_h - r.norm_f).abs() < 1e-12 * r.norm_f);
        assert!(r.reconstruction_error < 1e-10);
        assert!(r.tube_bound_ratio.is_none());
        assert!(r.pass);
    }
}

#[test]
fn spectral_pipeline_with_positive_threshold() {
    let dec = poschl_teller();
    let omega = generate_set(*dec.grid(), SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let mut params = PipelineParams::new(1.5, 0.4);
    params.seed = 3;
    let r = theorem_pipeline(RangeSource::Spectral(dec), &omega, &params).unwrap();
    assert!(r.rank > 1);
    assert!(r.reconstruction_error <= 1e-10);
    assert!(r.norm_h <= (0.4 * 1.5f64.sqrt()).exp() * r.norm_f + 1e-10);
    assert!(r.pass, "{r:?}");
}

fn random_set(grid: Grid, seed: u64, density: f64) -> ThickSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ThickSet::new(grid, (0..grid.len()).map(|_| rng.random_bool(density)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gram_spectrum_lies_in_unit_interval(seed in any::<u64>(), mu in 0.5f64..6.0) {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let omega = random_set(g, seed, 0.4);
        let basis = RangeSource::Flat(g).basis(mu);
        let eig = compressed_gram(&basis, &omega, None).unwrap().symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e >= -1e-12 && e <= 1.0 + 1e-8));
    }

    #[test]
    fn constant_is_monotone_in_the_set(seed in any::<u64>()) {
        let g = Grid::new(2, 6.0, 16).unwrap();
        let small = random_set(g, seed, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let big = ThickSet::new(
            g,
            small.indicator().iter().map(|&b| b || rng.random_bool(0.3)).collect(),
        )
        .unwrap();
        prop_assert!(small.is_subset_of(&big));
        let source = RangeSource::Flat(g);
        let a = observability_constant(source, 2.5, &small).unwrap();
        let b = observability_constant(source, 2.5, &big).unwrap();
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn constant_is_monotone_in_the_threshold(seed in any::<u64>()) {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let omega = random_set(g, seed, 0.5);
        let source = RangeSource::Flat(g);
        let c: Vec<f64> = [1.0, 2.0, 3.5, 5.0]
            .iter()
            .map(|&m| observability_constant(source, m, &omega).unwrap())
            .collect();
        prop_assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn pipeline_reconstructs_exactly(seed in any::<u64>(), s0 in 0.05f64..1.0) {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
        let mut params = PipelineParams::new(4.0, s0);
        params.seed = seed;
        let r = theorem_pipeline(RangeSource::Flat(g), &omega, &params).unwrap();
        prop_assert!(r.reconstruction_error <= 1e-10);
        prop_assert!(r.h_bound_holds);
        prop_assert!(r.tube_bound_ratio.unwrap() <= 1.0 + 1e-12);
        prop_assert!(r.final_inequality_margin >= -1e-10);
    }
}

#[test]
fn different_seeds_draw_different_fields() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
    let mut p = PipelineParams::new(3.0, 0.3);
    let a = theorem_pipeline(RangeSource::Flat(g), &omega, &p).unwrap();
    p.seed = 1;
    let b = theorem_pipeline(RangeSource::Flat(g), &omega, &p).unwrap();
    assert_ne!(a.norm_f, b.norm_f);
}
