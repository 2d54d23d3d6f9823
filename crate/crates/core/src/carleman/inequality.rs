use num_complex::Complex64;
use serde::Serialize;

use super::geometry::Measure;
use super::green::Disk;
use super::interpolation::{Instance, InterpolationCertificate};
use super::rules::{disk_rule, integrate, measure_rule, rect_rule, region_rule, segment_rule};
use super::weight::CarlemanWeight;
use crate::error::{Error, Result};

/// Relative slack allowed on the right-hand side of the Carleman inequality.
pub const CARLEMAN_TOL: f64 = 1e-3;

/// One piece of a signed measure `ν = Δφ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurePart {
    /// `weight · dλ` on the whole domain.
    Area { weight: f64 },
    /// `weight · 1_D dλ` for a disk `D`.
    Disk {
        center: Complex64,
        radius: f64,
        weight: f64,
    },
    /// `weight · 1_R dλ` for an axis-parallel rectangle `R`.
    Rectangle { x: (f64, f64), y: (f64, f64), weight: f64 },
    /// `weight · dt` on the real segment `[a, b]`.
    Segment { a: f64, b: f64, weight: f64 },
    /// Point mass.
    Atom { point: Complex64, mass: f64 },
}

/// Finite sum of [`MeasurePart`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaplacianMeasure {
    pub parts: Vec<MeasurePart>,
}

impl LaplacianMeasure {
    pub fn new(parts: Vec<MeasurePart>) -> Self {
        Self { parts }
    }

    /// `∫ u dν`, with `u` supported in `support`.
    fn integrate<U: Fn(Complex64) -> f64 + Sync>(&self, support: &Disk, panels: usize, u: U) -> f64 {
        self.parts
            .iter()
            .map(|part| match *part {
                MeasurePart::Area { weight } => {
                    weight * integrate(&disk_rule(support.center, support.radius, panels), &u)
                }
                MeasurePart::Disk { center, radius, weight } => {
                    weight * integrate(&disk_rule(center, radius, panels), &u)
                }
                MeasurePart::Rectangle { x, y, weight } => weight * integrate(&rect_rule(x, y, panels), &u),
                MeasurePart::Segment { a, b, weight } => weight * integrate(&segment_rule(a, b, 4 * panels), &u),
                MeasurePart::Atom { point, mass } => mass * u(point),
            })
            .sum()
    }
}

/// Both sides of one inequality at one value of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResult {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `∂̄f = (∂_x f + i ∂_y f) / 2` by fourth-order centered differences.
pub fn dbar<F: Fn(Complex64) -> Complex64>(f: &F, z: Complex64, step: f64) -> Complex64 {
    let d = |e: Complex64| (f(z - e * 2.0) - f(z + e * 2.0) + (f(z + e) - f(z - e)) * 8.0) / (12.0 * step);
    (d(Complex64::new(step, 0.0)) + Complex64::i() * d(Complex64::new(0.0, step))) * 0.5
}

fn check_h(h_values: &[f64]) -> Result<()> {
    if h_values.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h_values:?}")));
    }
    Ok(())
}

/// Check `4h² ∫ e^{2φ/h} |∂̄f|² dλ >= h ∫ e^{2φ/h} |f|² dν` for each `h`.
///
/// `f` must vanish outside the closed disk `support`, which must lie
/// strictly inside `domain`. Area parts of `ν` are integrated over
/// `support`; `panels` sets the number of composite panels per direction.
pub fn carleman_inequality_check<F, P>(
    domain: &Disk,
    support: &Disk,
    f: &F,
    phi: &P,
    nu: &LaplacianMeasure,
    h_values: &[f64],
    panels: usize,
) -> Result<Vec<CheckResult>>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    P: Fn(Complex64) -> f64 + Sync,
{
    check_h(h_values)?;
    if (support.center - domain.center).norm() + support.radius >= domain.radius {
        return Err(Error::InvalidParameter(
            "support of f touches the boundary of the domain".into(),
        ));
    }
    let rule = disk_rule(support.center, support.radius, panels);
    let step = 1e-3 * support.radius;
    let grad: Vec<(Complex64, f64, f64)> = rule.iter().map(|&(z, w)| (z, w, dbar(f, z, step).norm_sqr())).collect();
    h_values
        .iter()
        .map(|&h| {
            let lhs = 4.0
                * h
                * h
                * grad
                    .iter()
                    .map(|(z, w, d)| w * d * (2.0 * phi(*z) / h).exp())
                    .sum::<f64>();
            let rhs = h * nu.integrate(support, panels, |z| (2.0 * phi(z) / h).exp() * f(z).norm_sqr());
            if !(lhs.is_finite() && rhs.is_finite()) {
                return Err(Error::Quadrature(format!("weight e^(2 phi / h) overflows at h = {h}")));
            }
            Ok(CheckResult {
                h,
                lhs,
                rhs,
                pass: lhs >= rhs - CARLEMAN_TOL * rhs.abs(),
            })
        })
        .collect()
}

/// `∫_X |g|²`, `∫_K |g|² dμ` and `∫_Y |g|²` for the geometry of `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolomorphicNorms {
    pub domain: f64,
    pub compact: f64,
    pub inner: f64,
}

pub fn holomorphic_norms<G: Fn(Complex64) -> Complex64 + Sync>(
    weight: &CarlemanWeight,
    g: &G,
    panels: usize,
) -> HolomorphicNorms {
    let geom = weight.geometry();
    let sq = |z: Complex64| g(z).norm_sqr();
    HolomorphicNorms {
        domain: integrate(&disk_rule(geom.domain.center, geom.domain.radius, panels), sq),
        compact: integrate(&measure_rule(&geom.measure, 4 * panels), sq),
        inner: integrate(&region_rule(&geom.inner, panels), sq),
    }
}

/// The three-term bound for holomorphic `g`, divided by `h e^{c_Y/h}`:
///
/// `4h M² e^{-c_Y/2h} ∫_X|g|² + e^{(2C_μ - c_Y)/h} ∫_K|g|²dμ >= ρ ∫_Y|g|²`.
pub fn three_term_check<G: Fn(Complex64) -> Complex64 + Sync>(
    weight: &CarlemanWeight,
    g: &G,
    h_values: &[f64],
    panels: usize,
) -> Result<Vec<CheckResult>> {
    check_h(h_values)?;
    let n = holomorphic_norms(weight, g, panels);
    let k = weight.constants;
    let m2 = weight.cutoff.bound.powi(2);
    Ok(h_values
        .iter()
        .map(|&h| {
            let lhs = 4.0 * h * m2 * (-k.green_floor / (2.0 * h)).exp() * n.domain
                + ((2.0 * k.potential_max - k.green_floor) / h).exp() * n.compact;
            let rhs = k.rho * n.inner;
            CheckResult {
                h,
                lhs,
                rhs,
                pass: lhs >= rhs * (1.0 - 1e-12),
            }
        })
        .collect())
}

/// Constant of `∫_Y|g|² <= C (∫_K|g|²dμ)^δ (∫_X|g|²)^{1-δ}` obtained by
/// optimizing the three-term bound over `h`:
/// `C = max(F(1)^δ, 2 (4M²)^{1-δ} / ρ)` with `F(1) = e^{(4C_μ - c_Y)/2} / (4M²)`.
pub fn interpolation_constant(weight: &CarlemanWeight) -> f64 {
    let k = weight.constants;
    let m2 = weight.cutoff.bound.powi(2);
    let delta = k.delta;
    let f1 = ((4.0 * k.potential_max - k.green_floor) / 2.0).exp() / (4.0 * m2);
    f1.powf(delta).max(2.0 * (4.0 * m2).powf(1.0 - delta) / k.rho)
}

/// Certificate of the interpolation inequality over `family`, with the
/// exponent and constant fixed by the weight.
pub fn carleman_interpolation<G: Fn(Complex64) -> Complex64 + Sync>(
    weight: &CarlemanWeight,
    family: &[(String, G)],
    panels: usize,
) -> Result<InterpolationCertificate> {
    let delta = weight.constants.delta;
    let instances = family
        .iter()
        .map(|(label, g)| {
            let n = holomorphic_norms(weight, g, panels);
            Instance::new(
                label.clone(),
                n.inner,
                n.compact.powf(delta) * n.domain.powf(1.0 - delta),
            )
        })
        .collect();
    InterpolationCertificate::from_instances(
        delta,
        Some(interpolation_constant(weight)),
        instances,
        Some(weight.geometry().hash()),
    )
}

impl CarlemanWeight {
    /// `Δφ = -μ + ρ 1_Y`.
    pub fn laplacian_measure(&self) -> LaplacianMeasure {
        let geom = self.geometry();
        let mut parts: Vec<MeasurePart> = match &geom.measure {
            Measure::Atoms(atoms) => atoms
                .iter()
                .map(|&(point, m)| MeasurePart::Atom { point, mass: -m })
                .collect(),
            Measure::Uniform(iv) => {
                let len: f64 = iv.iter().map(|(a, b)| b - a).sum();
                iv.iter()
                    .map(|&(a, b)| MeasurePart::Segment {
                        a,
                        b,
                        weight: -1.0 / len,
                    })
                    .collect()
            }
        };
        let rho = self.constants.rho;
        parts.push(match geom.inner {
            super::Region::Disk { center, radius } => MeasurePart::Disk {
                center,
                radius,
                weight: rho,
            },
            super::Region::Rectangle { x, y } => MeasurePart::Rectangle { x, y, weight: rho },
        });
        LaplacianMeasure::new(parts)
    }
}
