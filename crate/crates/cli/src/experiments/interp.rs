//! Interpolation certificates: one-dimensional, on balls, and on the tube
//! around a periodic grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use uncplab_core::carleman::{
    calibrate_exponent, interpolate_1d, interpolate_ball, interpolate_tube, length_exponent, unit_interval_domain,
    BallSubset, ComplexBall, InterpolationCertificate, TubeCertificate, TubeInterpolation,
};
use uncplab_core::field::{frequency_transform, Direction};
use uncplab_core::{Field, TubeGeometry};

use crate::config::InterpKind;
use crate::experiments::polynomials::polynomial_family;
use crate::run::{self, positive, At, Failure, Run};

type HoloN = Box<dyn Fn(&[Complex64]) -> Complex64 + Sync>;

#[derive(Serialize)]
struct SetCertificate {
    set: Vec<(f64, f64)>,
    certificate: InterpolationCertificate,
}

#[derive(Serialize, Default)]
struct Report {
    exponent_constant: Option<f64>,
    set_exponents: Vec<f64>,
    shared_constant: Option<f64>,
    one_dimensional: Vec<SetCertificate>,
    ball: Vec<SetCertificate>,
    tube: Option<TubeCertificate>,
}

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let s = cfg.raw.interp.clone().unwrap_or_default();
    let kinds = s
        .kinds
        .clone()
        .unwrap_or(vec![InterpKind::OneDimensional, InterpKind::Ball, InterpKind::Tube]);
    if kinds.is_empty() {
        return Err(cfg.error(Some("interp"), "kinds", "needs at least one kind").into());
    }
    let sets: Vec<Vec<(f64, f64)>> = s
        .sets
        .clone()
        .unwrap_or(vec![vec![[0.0, 1.0]], vec![[0.0, 0.5]], vec![[0.0, 0.25], [0.75, 1.0]]])
        .into_iter()
        .map(|e| e.into_iter().map(|p| (p[0], p[1])).collect())
        .collect();
    if sets.is_empty() || sets.iter().any(|e| e.is_empty()) {
        return Err(cfg
            .error(Some("interp"), "sets", "needs at least one non-empty set")
            .into());
    }
    let degree = s.degree.unwrap_or(16);
    let quad_points = s.quad_points.unwrap_or(64);
    let samples = s.samples.unwrap_or(400);
    if samples < 8 {
        return Err(cfg.error(Some("interp"), "samples", "must be at least 8").into());
    }
    let margin = positive(cfg, "interp", "ball_margin", s.ball_margin.unwrap_or(1.0))?;
    let family = polynomial_family(degree, s.random_polynomials.unwrap_or(8), run.seed());
    let mut report = Report::default();

    let needs_exponent = kinds
        .iter()
        .any(|k| matches!(k, InterpKind::OneDimensional | InterpKind::Ball));
    let c_fit = if needs_exponent {
        run.log("calibrating the exponent");
        let (c, per_set) = calibrate_exponent(&sets, quad_points).at(cfg, "interp", "sets")?;
        report.exponent_constant = Some(c);
        report.set_exponents = per_set;
        c
    } else {
        0.0
    };

    if kinds.contains(&InterpKind::OneDimensional) {
        let domain = unit_interval_domain();
        let mut shared: f64 = 0.0;
        for e in &sets {
            let cert = interpolate_1d(&family, e, &domain, c_fit, None, samples).at(cfg, "interp", "sets")?;
            shared = shared.max(cert.fitted);
        }
        report.shared_constant = Some(shared);
        let mut all = shared.is_finite();
        for e in &sets {
            let certificate =
                interpolate_1d(&family, e, &domain, c_fit, Some(shared), samples).at(cfg, "interp", "sets")?;
            all &= certificate.pass;
            report.one_dimensional.push(SetCertificate {
                set: e.clone(),
                certificate,
            });
        }
        run.check(
            "one-dimensional certificate",
            all,
            format!(
                "single pair (c, C) = ({c_fit:.6}, {shared:.6}) over {} sets",
                sets.len()
            ),
        );
    }

    if kinds.contains(&InterpKind::Ball) {
        let ball = ComplexBall {
            center: vec![0.5],
            radius: 0.5,
            margin,
        };
        let family_n: Vec<(String, HoloN)> = polynomial_family(degree, s.random_polynomials.unwrap_or(8), run.seed())
            .into_iter()
            .map(|(l, g)| (l, Box::new(move |z: &[Complex64]| g(z[0])) as HoloN))
            .collect();
        let mut all = true;
        for e in &sets {
            let delta = length_exponent(c_fit, e);
            let certificate = interpolate_ball(&family_n, &ball, &BallSubset::Intervals(e.clone()), delta, None, 48)
                .at(cfg, "interp", "sets")?;
            all &= certificate.pass && certificate.fitted.is_finite();
            report.ball.push(SetCertificate {
                set: e.clone(),
                certificate,
            });
        }
        run.check(
            "ball certificate",
            all,
            format!("{} sets on B_0.5(0.5), margin {margin}", sets.len()),
        );
    }

    if kinds.contains(&InterpKind::Tube) {
        let grid = run::grid(cfg)?;
        let omega = run::omega(cfg, grid)?;
        let kmax = s.tube_kmax.unwrap_or(12);
        if kmax < 0 {
            return Err(cfg.error(Some("interp"), "tube_kmax", "must be non-negative").into());
        }
        let count = s.tube_fields.unwrap_or(6);
        if count == 0 {
            return Err(cfg.error(Some("interp"), "tube_fields", "must be at least 1").into());
        }
        if grid.dim() != 1 {
            return Err(cfg
                .error(Some("grid"), "dim", "tube certificates use one-dimensional grids")
                .into());
        }
        let tube = TubeGeometry::with_half_width(positive(
            cfg,
            "interp",
            "tube_half_width",
            s.tube_half_width.unwrap_or(0.5),
        )?)
        .at(cfg, "interp", "tube_half_width")?;
        let mut rng = ChaCha8Rng::seed_from_u64(run.seed());
        let fields: Vec<Field> = (0..count)
            .map(|_| {
                let hat = (0..grid.len())
                    .map(|i| {
                        if grid.wavenumber(i).abs() <= kmax {
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                frequency_transform(&Field::new(grid, hat).expect("length matches grid"), Direction::Inverse)
            })
            .collect();
        let params = TubeInterpolation {
            mu_freq: 2.0 * PI * kmax as f64 / grid.length(),
            nu: s.nu.unwrap_or(0.5),
            cell_radius: positive(cfg, "interp", "cell_radius", s.cell_radius.unwrap_or(1.0))?,
            constant: None,
            nodes: s.nodes.unwrap_or(24),
        };
        if !(params.nu > 0.0 && params.nu < 1.0) {
            return Err(cfg
                .error(Some("interp"), "nu", format!("must lie in (0, 1), got {}", params.nu))
                .into());
        }
        run.log(format!("tube certificate on {count} fields"));
        let cert = interpolate_tube(&fields, &omega, &tube, &params).at(cfg, "interp", "cell_radius")?;
        run.check(
            "tube certificate",
            cert.pass,
            format!(
                "derived constant {:.4} (multiplicity {}), worst {}",
                cert.derived_constant, cert.multiplicity, cert.certificate.worst_instance
            ),
        );
        report.tube = Some(cert);
    }
    run.record("exponent_constant", report.exponent_constant)?;
    run.record("shared_constant", report.shared_constant)?;
    run.write_json("interp.json", &report)
}
