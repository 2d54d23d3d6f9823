//! Carleman weights and constants for disk geometries, the three-term
//! bound and the resulting interpolation certificate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use uncplab_core::carleman::{
    carleman_interpolation, carleman_weight, interpolation_constant, three_term_check, CarlemanConstants,
    CarlemanGeometry, CarlemanWeight, CheckResult, Cutoff, Disk, GeometrySummary, InterpolationCertificate, Measure,
    Region, MIN_QUAD_POINTS,
};

use crate::config::{CarlemanSection, Config, GeometryKind};
use crate::experiments::polynomials::polynomial_family;
use crate::run::{positive, At, Failure, Run};

#[derive(Serialize)]
struct GeometryReport {
    geometry: GeometrySummary,
    constants: CarlemanConstants,
    cutoff: Cutoff,
    interpolation_constant: f64,
    refinement_drift: f64,
    sign_violations: Vec<String>,
    three_term: Vec<ThreeTerm>,
    certificate: InterpolationCertificate,
}

#[derive(Serialize)]
struct ThreeTerm {
    function: String,
    results: Vec<CheckResult>,
}

#[derive(Serialize)]
struct Report {
    quad_points: usize,
    panels: usize,
    h_values: Vec<f64>,
    geometries: Vec<GeometryReport>,
}

fn intervals(v: &[[f64; 2]]) -> Vec<(f64, f64)> {
    v.iter().map(|p| (p[0], p[1])).collect()
}

fn geometries(cfg: &Config, s: &CarlemanSection) -> Result<Vec<CarlemanGeometry>, Failure> {
    match s.geometry.unwrap_or(GeometryKind::UnitInterval) {
        GeometryKind::UnitInterval => {
            let sets = s.sets.clone().unwrap_or(vec![[0.0, 1.0]]);
            if sets.is_empty() {
                return Err(cfg
                    .error(Some("carleman"), "sets", "needs at least one interval")
                    .into());
            }
            sets.iter()
                .map(|&e| CarlemanGeometry::unit_interval(vec![(e[0], e[1])]).at(cfg, "carleman", "sets"))
                .collect()
        }
        GeometryKind::Custom => {
            let missing = |key: &str| -> Failure {
                cfg.error(Some("carleman"), key, "required for a custom geometry")
                    .into()
            };
            let center = s.domain_center.unwrap_or([0.0, 0.0]);
            let radius = positive(
                cfg,
                "carleman",
                "domain_radius",
                s.domain_radius.ok_or_else(|| missing("domain_radius"))?,
            )?;
            let domain =
                Disk::new(Complex64::new(center[0], center[1]), radius).at(cfg, "carleman", "domain_radius")?;
            let inner = match (s.inner_disk, s.inner_rectangle) {
                (Some(d), None) => Region::Disk {
                    center: Complex64::new(d[0], d[1]),
                    radius: d[2],
                },
                (None, Some(r)) => Region::Rectangle {
                    x: (r[0], r[1]),
                    y: (r[2], r[3]),
                },
                (Some(_), Some(_)) => {
                    return Err(cfg
                        .error(
                            Some("carleman"),
                            "inner_rectangle",
                            "give either inner_disk or inner_rectangle",
                        )
                        .into())
                }
                (None, None) => return Err(missing("inner_disk")),
            };
            let compact = intervals(&s.compact.clone().ok_or_else(|| missing("compact"))?);
            let measure = match (&s.measure_uniform, &s.measure_atoms) {
                (Some(u), None) => Measure::Uniform(intervals(u)),
                (None, Some(a)) => Measure::Atoms(a.iter().map(|p| (Complex64::new(p[0], p[1]), p[2])).collect()),
                (Some(_), Some(_)) => {
                    return Err(cfg
                        .error(
                            Some("carleman"),
                            "measure_atoms",
                            "give either measure_uniform or measure_atoms",
                        )
                        .into())
                }
                (None, None) => return Err(missing("measure_uniform")),
            };
            Ok(vec![
                CarlemanGeometry::new(domain, inner, compact, measure).at(cfg, "carleman", "compact")?
            ])
        }
    }
}

/// Sign and boundary-decay conditions on the potentials, sampled on a polar
/// grid of the domain.
fn sign_violations(w: &CarlemanWeight) -> Vec<String> {
    let k = w.constants;
    let mut out = Vec::new();
    if k.potential_max < k.green_floor {
        out.push(format!("C_mu = {} < c_Y = {}", k.potential_max, k.green_floor));
    }
    if !(k.delta > 0.0 && k.delta <= 1.0 / 3.0) {
        out.push(format!("delta = {} outside (0, 1/3]", k.delta));
    }
    if 2.0 * k.rho * k.area_potential_max > k.green_floor {
        out.push("2 rho C_Y > c_Y".into());
    }
    let d = w.geometry().domain;
    'grid: for i in 1..60 {
        for j in 0..90 {
            let x = d.center + Complex64::from_polar(d.radius * i as f64 / 60.0, 2.0 * PI * j as f64 / 90.0);
            if !(w.potentials.phi_mu(x) > 0.0) {
                out.push(format!("Phi_mu <= 0 at {x}"));
                break 'grid;
            }
            if !(w.potentials.psi_y(x) <= 0.0) {
                out.push(format!("Psi_Y > 0 at {x}"));
                break 'grid;
            }
        }
    }
    let slope = w.cutoff.boundary_slope;
    for j in 0..90 {
        for t in [1e-4, 1e-2, 0.1] {
            let x = d.center + Complex64::from_polar(d.radius - t, 2.0 * PI * (j as f64 + 0.3) / 90.0);
            if w.potentials.phi_mu(x) / t > slope * (1.0 + 1e-9) {
                out.push(format!("boundary ratio above {slope} at {x}"));
                return out;
            }
        }
    }
    out
}

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let s = cfg.raw.carleman.clone().unwrap_or_default();
    let quad_points = s.quad_points.unwrap_or(64);
    if quad_points < MIN_QUAD_POINTS {
        return Err(cfg
            .error(
                Some("carleman"),
                "quad_points",
                format!("must be at least {MIN_QUAD_POINTS}"),
            )
            .into());
    }
    let panels = s.panels.unwrap_or(16);
    if panels == 0 {
        return Err(cfg.error(Some("carleman"), "panels", "must be at least 1").into());
    }
    let h_values = s.h_values.clone().unwrap_or(vec![0.05, 0.1, 0.2, 0.5, 1.0]);
    for &h in &h_values {
        positive(cfg, "carleman", "h_values", h)?;
    }
    let geoms = geometries(cfg, &s)?;
    let family = polynomial_family(16, 4, run.seed());
    let tol = run.tol.carleman;

    let mut reports = Vec::new();
    for (i, geom) in geoms.iter().enumerate() {
        run.log(format!("geometry {i}: weight at {quad_points} points"));
        let w = carleman_weight(geom, quad_points).at(cfg, "carleman", "quad_points")?;
        let fine = carleman_weight(geom, 2 * quad_points).at(cfg, "carleman", "quad_points")?;
        let (a, b) = (w.constants, fine.constants);
        let drift = [
            (a.potential_max, b.potential_max),
            (a.green_floor, b.green_floor),
            (a.area_potential_max, b.area_potential_max),
        ]
        .iter()
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max);
        run.check(
            &format!("geometry {i}: refinement stability"),
            drift <= tol,
            format!("relative drift {drift:.3e}"),
        );
        let violations = sign_violations(&w);
        run.check(
            &format!("geometry {i}: constants and signs"),
            violations.is_empty(),
            if violations.is_empty() {
                format!("delta = {:.6}, rho = {:.6}", a.delta, a.rho)
            } else {
                violations.join("; ")
            },
        );

        let mut three_term = Vec::new();
        let mut all_hold = true;
        for (label, g) in family.iter() {
            let results = three_term_check(&w, g, &h_values, panels).at(cfg, "carleman", "h_values")?;
            all_hold &= results.iter().all(|r| r.pass);
            three_term.push(ThreeTerm {
                function: label.clone(),
                results,
            });
        }
        run.check(
            &format!("geometry {i}: three-term bound"),
            all_hold,
            format!("{} functions, {} values of h", family.len(), h_values.len()),
        );
        let certificate = carleman_interpolation(&w, &family, panels).map_err(|e| Failure::Runtime(e.to_string()))?;
        run.check(
            &format!("geometry {i}: interpolation certificate"),
            certificate.pass,
            format!(
                "worst ratio {:.4e} against C = {:.4e} ({})",
                certificate.fitted, certificate.constant, certificate.worst_instance
            ),
        );
        run.record(&format!("geometry_{i}_delta"), a.delta)?;
        reports.push(GeometryReport {
            geometry: geom.describe(),
            constants: w.constants,
            cutoff: w.cutoff,
            interpolation_constant: interpolation_constant(&w),
            refinement_drift: drift,
            sign_violations: violations,
            three_term,
            certificate,
        });
    }
    run.write_json(
        "carleman.json",
        &Report {
            quad_points,
            panels,
            h_values,
            geometries: reports,
        },
    )
}
