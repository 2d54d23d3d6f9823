use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::geometry::{intervals_length, CarlemanGeometry};
use super::green::Disk;
use super::rules::{integrate, segment_rule};
use super::search::curve_max;
use super::weight::carleman_weight;
use crate::error::{Error, Result};
use crate::field::{slice_values, tube_integral, Field, TubeGeometry};
use crate::quadrature::{ball_rule, GaussLegendre};
use crate::thick::ThickSet;

/// Relative slack used when comparing the two sides of a certificate.
const CERT_SLACK: f64 = 1e-12;

/// One tested function: `lhs <= C · rhs` is the claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 0 when `lhs = 0`, `+∞` when only `rhs` vanishes.
    pub ratio: f64,
}

impl Instance {
    pub fn new(label: String, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self { label, lhs, rhs, ratio }
    }
}

/// Outcome of an interpolation inequality over a family of functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationCertificate {
    pub exponent: f64,
    /// The configured constant, or the fitted one when none was configured.
    pub constant: f64,
    /// Smallest constant that works for every instance.
    pub fitted: f64,
    /// `lhs` and `rhs` of the instance with the largest ratio.
    pub lhs: f64,
    pub rhs: f64,
    pub worst_instance: String,
    pub pass: bool,
    /// True when `constant` was fitted rather than configured.
    pub calibrated: bool,
    pub geometry_hash: Option<String>,
    pub instances: Vec<Instance>,
}

impl InterpolationCertificate {
    pub fn from_instances(
        exponent: f64,
        constant: Option<f64>,
        instances: Vec<Instance>,
        geometry_hash: Option<String>,
    ) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent must lie in (0, 1], got {exponent}"
            )));
        }
        if instances.is_empty() {
            return Err(Error::InvalidParameter(
                "certificate needs at least one instance".into(),
            ));
        }
        if instances.iter().any(|i| i.lhs.is_nan() || i.rhs.is_nan()) {
            return Err(Error::Quadrature("certificate instance evaluated to NaN".into()));
        }
        let worst = instances
            .iter()
            .fold(&instances[0], |w, i| if i.ratio > w.ratio { i } else { w });
        let fitted = worst.ratio;
        let c = constant.unwrap_or(fitted);
        let pass = c.is_finite() && instances.iter().all(|i| i.lhs <= c * i.rhs * (1.0 + CERT_SLACK));
        Ok(Self {
            exponent,
            constant: c,
            fitted,
            lhs: worst.lhs,
            rhs: worst.rhs,
            worst_instance: worst.label.clone(),
            pass,
            calibrated: constant.is_none(),
            geometry_hash,
            instances,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Neighbourhood `X` of `[0, 1]` used for the one-dimensional interpolation inequality.
pub fn unit_interval_domain() -> Disk {
    Disk {
        center: Complex64::new(0.5, 0.0),
        radius: 2.0,
    }
}

/// `δ = c / (1 + |log|E||)`.
pub fn length_exponent(c: f64, e: &[(f64, f64)]) -> f64 {
    c / (1.0 + intervals_length(e).ln().abs())
}

fn check_subset_of_unit(e: &[(f64, f64)]) -> Result<f64> {
    if e.iter().any(|&(a, b)| !(a >= 0.0 && b <= 1.0 && a < b)) {
        return Err(Error::InvalidParameter(format!(
            "E = {e:?} is not a union of intervals in [0, 1]"
        )));
    }
    let len = intervals_length(e);
    if !(len > 0.0) {
        return Err(Error::EmptySet);
    }
    Ok(len)
}

/// `c = min_E δ_E (1 + |log|E||)`, with `δ_E` the exponent of the Carleman
/// weight for `μ` uniform on `E`. Returns `c` and the per-set exponents.
pub fn calibrate_exponent(sets: &[Vec<(f64, f64)>], quad_points: usize) -> Result<(f64, Vec<f64>)> {
    let mut deltas = Vec::with_capacity(sets.len());
    let mut c = f64::INFINITY;
    for e in sets {
        check_subset_of_unit(e)?;
        let w = carleman_weight(&CarlemanGeometry::unit_interval(e.clone())?, quad_points)?;
        let d = w.constants.delta;
        c = c.min(d * (1.0 + intervals_length(e).ln().abs()));
        deltas.push(d);
    }
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("calibration needs at least one set".into()));
    }
    Ok((c, deltas))
}

/// `sup |g|` on `[0, 1]` and on the circle `∂X`.
fn sup_norms<G: Fn(Complex64) -> Complex64>(g: &G, domain: &Disk, samples: usize) -> (f64, f64) {
    let (_, line) = curve_max(|t| g(Complex64::new(t, 0.0)).norm(), 0.0, 1.0, false, samples);
    let (_, outer) = curve_max(
        |t| g(domain.center + Complex64::from_polar(domain.radius, t)).norm(),
        0.0,
        2.0 * PI,
        true,
        4 * samples,
    );
    (line, outer)
}

/// Check `sup_[0,1]|g| <= C |E|^{-δ/2} (∫_E|g|²)^{δ/2} (sup_X|g|)^{1-δ}` with
/// `δ = c / (1 + |log|E||)` over `family`. `sup_X` is taken on `∂X`.
pub fn interpolate_1d<G: Fn(Complex64) -> Complex64 + Sync>(
    family: &[(String, G)],
    e: &[(f64, f64)],
    domain: &Disk,
    c: f64,
    constant: Option<f64>,
    samples: usize,
) -> Result<InterpolationCertificate> {
    let len = check_subset_of_unit(e)?;
    let delta = c / (1.0 + len.ln().abs());
    let rule: Vec<_> = e.iter().flat_map(|&(a, b)| segment_rule(a, b, 8)).collect();
    let instances = family
        .iter()
        .map(|(label, g)| {
            let (line, outer) = sup_norms(g, domain, samples);
            let observed = integrate(&rule, |z| g(z).norm_sqr());
            let rhs = len.powf(-delta / 2.0) * observed.powf(delta / 2.0) * outer.powf(1.0 - delta);
            Instance::new(label.clone(), line, rhs)
        })
        .collect();
    InterpolationCertificate::from_instances(delta, constant, instances, None)
}

/// Subset `E` of the ball `B_R(center)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BallSubset {
    Full,
    /// Union of intervals (dimension 1 only), absolute coordinates.
    Intervals(Vec<(f64, f64)>),
    /// `{x ∈ B : x₁ >= center₁}`.
    HalfSpace,
    /// `{x : inner <= |x - center| <= outer}` with `outer <= R`.
    Annulus {
        inner: f64,
        outer: f64,
    },
}

/// Ball `B_R(center) ⊂ ℝ^d` with the complex neighbourhood
/// `X = {|Re z - center| < R + a, |Im z| < a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub margin: f64,
}

impl ComplexBall {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn shifted(&self, rule: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
        rule.into_iter()
            .map(|(x, w)| (x.iter().zip(&self.center).map(|(a, b)| a + b).collect(), w))
            .collect()
    }

    fn subset_rule(&self, subset: &BallSubset, n: usize) -> Result<(Vec<(Vec<f64>, f64)>, f64)> {
        let d = self.dim();
        let r = self.radius;
        let gl = GaussLegendre::new(n);
        let c = &self.center;
        let rule: Vec<(Vec<f64>, f64)> = match subset {
            BallSubset::Full => self.shifted(ball_rule(d, r, n)),
            BallSubset::Intervals(iv) => {
                if d != 1 {
                    return Err(Error::InvalidParameter("interval subsets need dimension 1".into()));
                }
                if iv.iter().any(|&(a, b)| !(a < b && a >= c[0] - r && b <= c[0] + r)) {
                    return Err(Error::InvalidParameter(format!("intervals {iv:?} leave the ball")));
                }
                iv.iter()
                    .flat_map(|&(a, b)| gl.on_interval(a, b).map(|(x, w)| (vec![x], w)).collect::<Vec<_>>())
                    .collect()
            }
            BallSubset::HalfSpace => match d {
                1 => gl.on_interval(c[0], c[0] + r).map(|(x, w)| (vec![x], w)).collect(),
                _ => {
                    let mut out = Vec::new();
                    for (rr, wr) in gl.on_interval(0.0, r) {
                        for (t, wt) in gl.on_interval(-PI / 2.0, PI / 2.0) {
                            out.push((vec![c[0] + rr * t.cos(), c[1] + rr * t.sin()], wr * wt * rr));
                        }
                    }
                    out
                }
            },
            BallSubset::Annulus { inner, outer } => {
                if !(0.0 <= *inner && inner < outer && *outer <= r) {
                    return Err(Error::InvalidParameter(format!(
                        "annulus [{inner}, {outer}] must satisfy 0 <= inner < outer <= R"
                    )));
                }
                match d {
                    1 => gl
                        .on_interval(c[0] - outer, c[0] - inner)
                        .chain(gl.on_interval(c[0] + inner, c[0] + outer))
                        .map(|(x, w)| (vec![x], w))
                        .collect(),
                    _ => {
                        let nt = 4 * n;
                        let dt = 2.0 * PI / nt as f64;
                        let mut out = Vec::new();
                        for (rr, wr) in gl.on_interval(*inner, *outer) {
                            for k in 0..nt {
                                let t = (k as f64 + 0.5) * dt;
                                out.push((vec![c[0] + rr * t.cos(), c[1] + rr * t.sin()], wr * dt * rr));
                            }
                        }
                        out
                    }
                }
            }
        };
        let measure: f64 = rule.iter().map(|(_, w)| w).sum();
        if !(measure > 0.0) {
            return Err(Error::EmptySet);
        }
        Ok((rule, measure))
    }
}

/// Check `∫_{B_R}|g|² <= C (∫_E|g|²)^δ (∫_X|g(z)|²|dz|)^{1-δ}` over `family`
/// for `d ∈ {1, 2}`. `n` is the Gauss–Legendre order per direction.
pub fn interpolate_ball<G: Fn(&[Complex64]) -> Complex64 + Sync>(
    family: &[(String, G)],
    ball: &ComplexBall,
    subset: &BallSubset,
    exponent: f64,
    constant: Option<f64>,
    n: usize,
) -> Result<InterpolationCertificate> {
    let d = ball.dim();
    if !(d == 1 || d == 2) {
        return Err(Error::InvalidParameter(format!(
            "ball interpolation needs d in {{1, 2}}, got {d}"
        )));
    }
    if !(ball.radius > 0.0 && ball.margin > 0.0) {
        return Err(Error::InvalidParameter(
            "ball radius and margin must be positive".into(),
        ));
    }
    let full = ball.shifted(ball_rule(d, ball.radius, n));
    let (observed, _) = ball.subset_rule(subset, n)?;
    let real_part = ball.shifted(ball_rule(d, ball.radius + ball.margin, n));
    let imag_part = ball_rule(d, ball.margin, n);
    let real = |x: &[f64]| -> Vec<Complex64> { x.iter().map(|&v| Complex64::new(v, 0.0)).collect() };
    let sum = |rule: &[(Vec<f64>, f64)], g: &G| -> f64 { rule.iter().map(|(x, w)| w * g(&real(x)).norm_sqr()).sum() };
    let instances = family
        .iter()
        .map(|(label, g)| {
            let inside = sum(&full, g);
            let on_e = sum(&observed, g);
            let mut tube = 0.0;
            for (x, wx) in &real_part {
                for (y, wy) in &imag_part {
                    let z: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| Complex64::new(*a, *b)).collect();
                    tube += wx * wy * g(&z).norm_sqr();
                }
            }
            Instance::new(label.clone(), inside, on_e.powf(exponent) * tube.powf(1.0 - exponent))
        })
        .collect();
    InterpolationCertificate::from_instances(exponent, constant, instances, None)
}

/// The Hölder step `Σ c_k <= C Σ a_k^ν b_k^{1-ν} <= C (Σ a_k)^ν (Σ b_k)^{1-ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderStep {
    pub lhs: f64,
    pub middle: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn holder_aggregate(a: &[f64], b: &[f64], c: &[f64], constant: f64, nu: f64) -> Result<HolderStep> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::InvalidParameter("per-cell arrays differ in length".into()));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0, 1), got {nu}")));
    }
    let lhs: f64 = c.iter().sum();
    let middle = constant * a.iter().zip(b).map(|(x, y)| x.powf(nu) * y.powf(1.0 - nu)).sum::<f64>();
    let rhs = constant * a.iter().sum::<f64>().powf(nu) * b.iter().sum::<f64>().powf(1.0 - nu);
    let pass = lhs <= middle * (1.0 + CERT_SLACK) && middle <= rhs * (1.0 + CERT_SLACK);
    Ok(HolderStep { lhs, middle, rhs, pass })
}

/// Per-cell quantities of one field over the lattice covering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellQuantities {
    /// `∫_{ω ∩ B_R(k)} |f|²`.
    pub observed: Vec<f64>,
    /// `∫_{B_R(k) + i B_{a/2}} |f(z)|² |dz|`.
    pub tube: Vec<f64>,
    /// `∫_{B_R(k)} |f|²`.
    pub ball: Vec<f64>,
    pub holder: HolderStep,
    /// `∫ |f|² <= Σ_k ∫_{B_R(k)} |f|²`.
    pub covered: bool,
    /// `Σ a_k <= m ∫_ω |f|²` and `Σ b_k <= m ∫_{U_a} |f|²`.
    pub overlap_bounded: bool,
}

/// Tube interpolation over a family of band-limited fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeCertificate {
    pub certificate: InterpolationCertificate,
    /// `max_k c_k / (a_k^ν b_k^{1-ν})` over all fields and cells.
    pub cell_constant: f64,
    /// Largest number of cells containing one grid node.
    pub multiplicity: usize,
    /// `cell_constant · multiplicity`, the constant the covering argument yields.
    pub derived_constant: f64,
    pub cells: Vec<CellQuantities>,
    pub pass: bool,
}

/// Parameters of [`interpolate_tube`].
#[derive(Debug, Clone, PartialEq)]
pub struct TubeInterpolation {
    /// Band radius `μ` of the fields.
    pub mu_freq: f64,
    pub nu: f64,
    /// Radius `R` of the covering balls `B_R(k)`.
    pub cell_radius: f64,
    /// Constant to check; `None` uses the derived constant.
    pub constant: Option<f64>,
    /// Radial Gauss–Legendre order for the imaginary directions.
    pub nodes: usize,
}

fn periodic_distance(x: &[f64], k: &[f64], length: f64) -> f64 {
    x.iter()
        .zip(k)
        .map(|(a, b)| {
            let mut d = (a - b).rem_euclid(length);
            if d > 0.5 * length {
                d = length - d;
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Check `∫|f|² <= C (∫_ω|f|²)^ν (∫_{U_a}|f|²|dz|)^{1-ν}` on `fields`, and the
/// per-cell covering and Hölder steps behind it. Cells are balls of radius
/// `cell_radius` at the lattice points of spacing `L / ceil(L)`.
pub fn interpolate_tube(
    fields: &[Field],
    omega: &ThickSet,
    tube: &TubeGeometry,
    params: &TubeInterpolation,
) -> Result<TubeCertificate> {
    if omega.verified().is_none() {
        return Err(Error::ThicknessUnverified);
    }
    if fields.is_empty() {
        return Err(Error::InvalidParameter(
            "tube certificate needs at least one field".into(),
        ));
    }
    let grid = *omega.grid();
    let d = grid.dim();
    let l = grid.length();
    let per_axis = l.ceil() as usize;
    let spacing = l / per_axis as f64;
    if params.cell_radius < spacing * (d as f64).sqrt() / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "cell radius {} does not cover the lattice of spacing {spacing}",
            params.cell_radius
        )));
    }
    let cell_count = per_axis.pow(d as u32);
    let centers: Vec<Vec<f64>> = (0..cell_count)
        .map(|mut i| {
            (0..d)
                .map(|_| {
                    let k = i % per_axis;
                    i /= per_axis;
                    k as f64 * spacing
                })
                .collect()
        })
        .collect();
    // cells containing each node
    let membership: Vec<Vec<usize>> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            (0..cell_count)
                .filter(|&k| periodic_distance(&x[..d], &centers[k], l) <= params.cell_radius)
                .collect()
        })
        .collect();
    let multiplicity = membership.iter().map(Vec::len).max().unwrap_or(0);
    let a = tube.half_width();
    let dv = grid.cell_volume();
    let offsets = ball_rule(d, a / 2.0, params.nodes);

    let mut instances = Vec::with_capacity(fields.len());
    let mut raw = Vec::with_capacity(fields.len());
    let mut cell_constant: f64 = 0.0;
    for (idx, f) in fields.iter().enumerate() {
        f.grid().ensure_same(&grid)?;
        let whole = tube_integral(f, a, params.mu_freq, params.nodes)?;
        let sq: Vec<f64> = f.values().iter().map(|v| v.norm_sqr() * dv).collect();
        let total: f64 = sq.iter().sum();
        let on_omega: f64 = sq
            .iter()
            .zip(omega.indicator())
            .filter(|(_, &w)| w)
            .map(|(s, _)| s)
            .sum();
        let mut ball = vec![0.0; cell_count];
        let mut observed = vec![0.0; cell_count];
        for (i, cells) in membership.iter().enumerate() {
            for &k in cells {
                ball[k] += sq[i];
                if omega.indicator()[i] {
                    observed[k] += sq[i];
                }
            }
        }
        let mut tube_cells = vec![0.0; cell_count];
        for (y, w) in &offsets {
            let slice = slice_values(f, y, params.mu_freq)?;
            for (i, cells) in membership.iter().enumerate() {
                let v = w * slice.values()[i].norm_sqr() * dv;
                for &k in cells {
                    tube_cells[k] += v;
                }
            }
        }
        for k in 0..cell_count {
            let r = Instance::new(
                String::new(),
                ball[k],
                observed[k].powf(params.nu) * tube_cells[k].powf(1.0 - params.nu),
            )
            .ratio;
            cell_constant = cell_constant.max(r);
        }
        let m = multiplicity as f64;
        let overlap_bounded = observed.iter().sum::<f64>() <= m * on_omega * (1.0 + CERT_SLACK)
            && tube_cells.iter().sum::<f64>() <= m * whole * (1.0 + 1e-9);
        instances.push(Instance::new(
            format!("field {idx}"),
            total,
            on_omega.powf(params.nu) * whole.powf(1.0 - params.nu),
        ));
        raw.push((observed, tube_cells, ball, total, overlap_bounded));
    }
    let derived_constant = cell_constant * multiplicity as f64;
    let mut cells = Vec::with_capacity(raw.len());
    for (observed, tube_cells, ball, total, overlap_bounded) in raw {
        let holder = holder_aggregate(&observed, &tube_cells, &ball, cell_constant, params.nu)?;
        let covered = total <= ball.iter().sum::<f64>() * (1.0 + CERT_SLACK);
        cells.push(CellQuantities {
            observed,
            tube: tube_cells,
            ball,
            holder,
            covered,
            overlap_bounded,
        });
    }
    let certificate = InterpolationCertificate::from_instances(
        params.nu,
        Some(params.constant.unwrap_or(derived_constant)),
        instances,
        None,
    )?;
    let pass = certificate.pass
        && cell_constant.is_finite()
        && cells.iter().all(|c| c.holder.pass && c.covered && c.overlap_bounded);
    Ok(TubeCertificate {
        certificate,
        cell_constant,
        multiplicity,
        derived_constant,
        cells,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::thick::{generate_set, SetParams};

    fn poly(coeffs: Vec<f64>) -> impl Fn(Complex64) -> Complex64 + Sync {
        move |z| {
            coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
        }
    }

    #[test]
    fn constant_function_on_full_interval() {
        let fam = vec![("one".to_string(), poly(vec![1.0]))];
        let cert = interpolate_1d(&fam, &[(0.0, 1.0)], &unit_interval_domain(), 0.2, Some(1.0), 200).unwrap();
        assert!((cert.lhs - 1.0).abs() < 1e-12 && (cert.rhs - 1.0).abs() < 1e-12);
        assert!(cert.pass);
        assert!((cert.exponent - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_function_passes_and_empty_set_fails() {
        let fam = vec![("zero".to_string(), poly(vec![0.0]))];
        let cert = interpolate_1d(&fam, &[(0.0, 0.5)], &unit_interval_domain(), 0.2, Some(1e-6), 50).unwrap();
        assert!(cert.pass && cert.lhs == 0.0);
        assert!(matches!(
            interpolate_1d(&fam, &[], &unit_interval_domain(), 0.2, None, 50),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn monomial_certificate_values() {
        let fam = vec![("z^8".to_string(), |z: Complex64| z.powi(8))];
        let cert = interpolate_1d(&fam, &[(0.0, 0.5)], &unit_interval_domain(), 0.3, None, 400).unwrap();
        let delta = 0.3 / (1.0 + 2f64.ln());
        // sup on [0,1] is 1, ∫_0^{1/2} t^16 = 2^-17/17, sup on |z - 1/2| = 2 is 2.5^8
        let rhs =
            2f64.powf(delta / 2.0) * (0.5f64.powi(17) / 17.0).powf(delta / 2.0) * 2.5f64.powi(8).powf(1.0 - delta);
        assert!((cert.lhs - 1.0).abs() < 1e-12);
        assert!((cert.rhs - rhs).abs() < 1e-9 * rhs, "{} {rhs}", cert.rhs);
        assert!(cert.pass && cert.calibrated);
    }

    #[test]
    fn full_ball_holds_with_unit_constant() {
        for d in [1usize, 2] {
            let ball = ComplexBall {
                center: vec![0.0; d],
                radius: 1.0,
                margin: 1.0,
            };
            let fam: Vec<(String, Box<dyn Fn(&[Complex64]) -> Complex64 + Sync>)> = vec![
                ("one".into(), Box::new(|_: &[Complex64]| Complex64::new(1.0, 0.0))),
                ("z1^3".into(), Box::new(|z: &[Complex64]| z[0].powi(3) - 0.5)),
                ("exp".into(), Box::new(|z: &[Complex64]| (z[0] * 2.0).exp())),
            ];
            for delta in [0.1, 0.5, 0.9] {
                let cert = interpolate_ball(&fam, &ball, &BallSubset::Full, delta, Some(1.0), 24).unwrap();
                assert!(cert.pass, "d = {d}, delta = {delta}: {cert:?}");
            }
        }
    }

    #[test]
    fn ball_certificate_is_scale_invariant() {
        let ball = ComplexBall {
            center: vec![0.0],
            radius: 1.0,
            margin: 0.5,
        };
        let g = |z: &[Complex64]| (0..=6).fold(Complex64::new(0.0, 0.0), |acc, k| acc * z[0] + (k as f64 - 2.5));
        let fam1 = vec![("p".to_string(), g)];
        let fam2 = vec![("2p".to_string(), move |z: &[Complex64]| g(z) * 2.0)];
        let a = interpolate_ball(&fam1, &ball, &BallSubset::HalfSpace, 0.3, None, 24).unwrap();
        let b = interpolate_ball(&fam2, &ball, &BallSubset::HalfSpace, 0.3, None, 24).unwrap();
        assert!((b.lhs - 4.0 * a.lhs).abs() < 1e-10 * b.lhs);
        assert!((b.rhs - 4.0 * a.rhs).abs() < 1e-10 * b.rhs);
        assert!((a.fitted - b.fitted).abs() < 1e-12 * a.fitted);
    }

    #[test]
    fn holder_equality_case() {
        let ones = vec![1.0; 10];
        let step = holder_aggregate(&ones, &ones, &ones, 1.0, 0.4).unwrap();
        assert!((step.lhs - 10.0).abs() < 1e-12 && (step.rhs - 10.0).abs() < 1e-12);
        assert!(step.pass);
    }

    #[test]
    fn single_mode_tube_closed_form() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let omega = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
        let f = Field::plane_wave(g, &[6]);
        let xi = 2.0 * PI * 6.0 / 16.0;
        let tube = TubeGeometry::with_half_width(0.5).unwrap();
        let params = TubeInterpolation {
            mu_freq: xi,
            nu: 0.5,
            cell_radius: 1.0,
            constant: None,
            nodes: 24,
        };
        let cert = interpolate_tube(&[f], &omega, &tube, &params).unwrap();
        let total = 16.0;
        let observed = 8.0;
        let tube_mass = 16.0 * (2.0 * xi * 0.5).sinh() / xi;
        let rhs = (observed * tube_mass).sqrt();
        assert!((cert.certificate.lhs - total).abs() < 1e-10);
        assert!((cert.certificate.rhs - rhs).abs() < 1e-9 * rhs);
        assert!(cert.pass, "{:?}", cert.cells[0].holder);
    }
}
