use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::geometry::{CarlemanGeometry, Region};
use super::rules::{measure_rule, region_rule, Rule};
use super::search::{golden_max, grid_max, SearchBox};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};

/// Smallest accepted sampling density (points per unit length).
pub const MIN_QUAD_POINTS: usize = 64;
/// Largest relative change of any constant under doubling of the density.
pub const REFINEMENT_TOL: f64 = 1e-4;
const SEARCH_TOL: f64 = 1e-12;

/// Potentials of the measure `μ` and of the area measure on `Y`.
///
/// Values are closed-form: with `x*` the reflection of `x` across `∂X`,
/// `∫ G(x, y) dm(y) = (1/2π)(m(X) log(|x-c|/R) + L_m(x*) - L_m(x))` where
/// `L_m` is the logarithmic potential of `m`. Near the center of `X` the
/// harmonic part is integrated by a fixed Gauss rule instead.
#[derive(Debug, Clone)]
pub struct Potentials {
    geometry: CarlemanGeometry,
    measure_rule: Rule,
    inner_rule: Rule,
}

impl Potentials {
    pub fn new(geometry: CarlemanGeometry) -> Self {
        // one panel suffices: the integrands are analytic with |w| <= 1/4
        let measure_rule = measure_rule(&geometry.measure, 1);
        let inner_rule = region_rule(&geometry.inner, 1);
        Self {
            geometry,
            measure_rule,
            inner_rule,
        }
    }

    pub fn geometry(&self) -> &CarlemanGeometry {
        &self.geometry
    }

    /// `W(x) = -(1/2π) ∫ log|x - y| dμ(y)`.
    pub fn log_potential(&self, x: Complex64) -> f64 {
        -self.geometry.measure.log_potential(x) / (2.0 * PI)
    }

    /// `Φ_μ(x) = ∫ G(x, y) dμ(y)`: zero on `∂X`, `+∞` at an atom.
    pub fn phi_mu(&self, x: Complex64) -> f64 {
        let m = &self.geometry.measure;
        self.geometry
            .domain
            .green_potential(x, 1.0, |q| m.log_potential(q), &self.measure_rule)
    }

    /// `Ψ_Y(x) = -∫_Y G(x, y) dλ(y)`: non-positive, zero on `∂X`.
    pub fn psi_y(&self, x: Complex64) -> f64 {
        let y = &self.geometry.inner;
        -self
            .geometry
            .domain
            .green_potential(x, y.area(), |q| y.log_potential(q), &self.inner_rule)
    }

    /// `G(x, y)` without the domain checks.
    fn green(&self, x: Complex64, y: Complex64) -> f64 {
        let d = self.geometry.domain;
        let num = (d.radius * d.radius - (x - d.center) * (y - d.center).conj()).norm();
        (num / (d.radius * (x - y).norm())).ln() / (2.0 * PI)
    }
}

/// The constants fixed by a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanConstants {
    /// `C_μ = sup_K Φ_μ`.
    #[serde(rename = "C_mu")]
    pub potential_max: f64,
    /// `c_Y = inf_{Y × K} G`.
    #[serde(rename = "c_Y")]
    pub green_floor: f64,
    /// `C_Y = sup_Y |Ψ_Y|`.
    #[serde(rename = "C_Y")]
    pub area_potential_max: f64,
    /// `ρ = c_Y / (2 C_Y)`.
    pub rho: f64,
    /// `δ = c_Y / (4 C_μ - c_Y)`.
    pub delta: f64,
}

/// Radial cutoff `ψ` equal to 1 where `dist(x, ∂X) >= r` and to 0 where
/// `dist(x, ∂X) <= r/8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    /// `c₂ = sup Φ_μ / dist(·, ∂X)` over the band between `closure(Y)` and `∂X`.
    pub boundary_slope: f64,
    /// Width of that band.
    pub band: f64,
    /// `r = min(c_Y / (4 c₂), band / 2)`.
    pub width: f64,
    /// `M = ‖∂̄ψ‖_∞ = 8 / (7 r)`.
    pub bound: f64,
}

/// `C^∞` step from 0 (at `s <= 0`) to 1 (at `s >= 1`), slope 2 at `s = 1/2`.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

impl Cutoff {
    pub fn value(&self, dist_to_boundary: f64) -> f64 {
        smooth_step((dist_to_boundary - self.width / 8.0) / (7.0 * self.width / 8.0))
    }
}

/// `δ = c_Y / (4 C_μ - c_Y)`, in `(0, 1/3]` whenever `0 < c_Y <= C_μ`.
pub fn delta_from_constants(green_floor: f64, potential_max: f64) -> Result<f64> {
    if !(green_floor > 0.0 && green_floor <= potential_max && potential_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < c_Y <= C_mu, got c_Y = {green_floor}, C_mu = {potential_max}"
        )));
    }
    Ok(green_floor / (4.0 * potential_max - green_floor))
}

/// Potentials, constants and cutoff of one geometry.
#[derive(Debug, Clone)]
pub struct CarlemanWeight {
    pub potentials: Potentials,
    pub constants: CarlemanConstants,
    pub cutoff: Cutoff,
    pub quad_points: usize,
}

#[derive(Debug, Clone, Copy)]
struct RawConstants {
    potential_max: f64,
    green_floor: f64,
    area_potential_max: f64,
    boundary_slope: f64,
}

fn samples(len: f64, density: usize) -> usize {
    ((len * density as f64).ceil() as usize).max(8)
}

fn raw_constants(pot: &Potentials, density: usize) -> Result<RawConstants> {
    let g = pot.geometry();
    if g.measure.is_atomic() {
        return Err(Error::Singular(
            "an atomic measure has an unbounded potential on K, so C_mu is infinite".into(),
        ));
    }
    // C_μ: Φ_μ on each interval of K
    let mut potential_max = f64::NEG_INFINITY;
    for &(a, b) in &g.compact {
        let n = samples(b - a, density);
        let h = (b - a) / (n - 1) as f64;
        let f = |t: f64| pot.phi_mu(Complex64::new(t, 0.0));
        let (i, _) = (0..n)
            .map(|i| (i, f(a + h * i as f64)))
            .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        let t = a + h * i as f64;
        let (_, v) = golden_max(f, (t - h).max(a), (t + h).min(b), SEARCH_TOL);
        potential_max = potential_max.max(v);
    }

    // c_Y: G on ∂Y × K (the infimum over Y is reached on ∂Y)
    let y = g.inner;
    let mut green_floor = f64::INFINITY;
    for &(a, b) in &g.compact {
        let bounds = SearchBox {
            lo: [0.0, a],
            hi: [1.0, b],
            periodic: [true, false],
        };
        let (_, v) = grid_max(
            |p| -pot.green(y.boundary_point(p[0]), Complex64::new(p[1], 0.0)),
            [samples(y.perimeter(), density), samples(b - a, density)],
            bounds,
            SEARCH_TOL,
        );
        green_floor = green_floor.min(-v);
    }

    // C_Y: -Ψ_Y over Y
    let side = y.area().sqrt();
    let periodic_v = matches!(y, Region::Disk { .. });
    let (_, area_potential_max) = grid_max(
        |p| -pot.psi_y(y.interior_point(p[0], p[1])),
        [samples(side, density), samples(side, density)],
        SearchBox {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            periodic: [false, periodic_v],
        },
        SEARCH_TOL,
    );

    // c₂: Φ_μ / dist over the band between closure(Y) and ∂X
    let disk = g.domain;
    let band = disk.radius - g.inner_reach();
    let tiny = band * 1e-6;
    let (_, boundary_slope) = grid_max(
        |p| {
            let t = p[1];
            let x = disk.center + Complex64::from_polar(disk.radius - t, 2.0 * PI * p[0]);
            pot.phi_mu(x) / t
        },
        [samples(2.0 * PI * disk.radius, density), samples(band, density)],
        SearchBox {
            lo: [0.0, tiny],
            hi: [1.0, band],
            periodic: [true, false],
        },
        SEARCH_TOL,
    );
    Ok(RawConstants {
        potential_max,
        green_floor,
        area_potential_max,
        boundary_slope,
    })
}

/// Compute `Φ_μ`, `Ψ_Y`, `C_μ`, `c_Y`, `C_Y`, `ρ`, `δ` and the cutoff.
///
/// Extrema are located on samples spaced `1/quad_points` and refined
/// locally. The constants are recomputed at twice the density and must
/// agree to [`REFINEMENT_TOL`].
pub fn carleman_weight(geometry: &CarlemanGeometry, quad_points: usize) -> Result<CarlemanWeight> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(Error::InvalidParameter(format!(
            "quad_points must be at least {MIN_QUAD_POINTS}, got {quad_points}"
        )));
    }
    let pot = Potentials::new(geometry.clone());
    let coarse = raw_constants(&pot, quad_points)?;
    let fine = raw_constants(&pot, 2 * quad_points)?;
    let pairs = [
        ("C_mu", coarse.potential_max, fine.potential_max),
        ("c_Y", coarse.green_floor, fine.green_floor),
        ("C_Y", coarse.area_potential_max, fine.area_potential_max),
        ("c_2", coarse.boundary_slope, fine.boundary_slope),
    ];
    for (name, a, b) in pairs {
        if !((a - b).abs() <= REFINEMENT_TOL * b.abs()) {
            return Err(Error::Quadrature(format!(
                "{name} changed from {a} to {b} under refinement"
            )));
        }
    }
    let k = fine;
    let delta = delta_from_constants(k.green_floor, k.potential_max)?;
    let mut rho = k.green_floor / (2.0 * k.area_potential_max);
    while 2.0 * rho * k.area_potential_max > k.green_floor {
        rho = rho.next_down();
    }
    let band = geometry.domain.radius - geometry.inner_reach();
    let width = (k.green_floor / (4.0 * k.boundary_slope)).min(0.5 * band);
    Ok(CarlemanWeight {
        potentials: pot,
        constants: CarlemanConstants {
            potential_max: k.potential_max,
            green_floor: k.green_floor,
            area_potential_max: k.area_potential_max,
            rho,
            delta,
        },
        cutoff: Cutoff {
            boundary_slope: k.boundary_slope,
            band,
            width,
            bound: 8.0 / (7.0 * width),
        },
        quad_points,
    })
}

/// Samples of the potentials on the square `[c - R, c + R]²` around `X`,
/// zero outside `X` (except `W`, which is defined everywhere).
#[derive(Debug, Clone)]
pub struct WeightFields {
    /// Complex coordinate of grid node 0.
    pub origin: Complex64,
    pub log_potential: Field,
    pub phi_mu: Field,
    pub psi_y: Field,
    pub phi: Field,
}

impl CarlemanWeight {
    pub fn geometry(&self) -> &CarlemanGeometry {
        self.potentials.geometry()
    }

    /// `φ = Φ_μ + ρ Ψ_Y`.
    pub fn phi(&self, x: Complex64) -> f64 {
        self.potentials.phi_mu(x) + self.constants.rho * self.potentials.psi_y(x)
    }

    pub fn cutoff_value(&self, x: Complex64) -> f64 {
        self.cutoff.value(self.geometry().domain.boundary_distance(x))
    }

    /// Sample the weight fields on an `n × n` grid.
    pub fn fields(&self, n: usize) -> Result<WeightFields> {
        let d = self.geometry().domain;
        let grid = Grid::new(2, 2.0 * d.radius, n)?;
        let origin = d.center - Complex64::new(d.radius, d.radius);
        let at = |i: usize| {
            let p = grid.node(i);
            origin + Complex64::new(p[0], p[1])
        };
        let sample = |f: &dyn Fn(Complex64) -> f64, everywhere: bool| -> Field {
            Field::from_values_unchecked(
                grid,
                (0..grid.len())
                    .map(|i| {
                        let x = at(i);
                        let v = if everywhere || d.contains(x) { f(x) } else { 0.0 };
                        Complex64::new(v, 0.0)
                    })
                    .collect(),
            )
        };
        Ok(WeightFields {
            origin,
            log_potential: sample(&|x| self.potentials.log_potential(x), true),
            phi_mu: sample(&|x| self.potentials.phi_mu(x), false),
            psi_y: sample(&|x| self.potentials.psi_y(x), false),
            phi: sample(&|x| self.phi(x), false),
        })
    }
}

/// `Φ_μ` for a measure that may be atomic (no constants needed).
pub fn measure_potential(geometry: &CarlemanGeometry, x: Complex64) -> f64 {
    Potentials::new(geometry.clone()).phi_mu(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::geometry::Measure;
    use crate::carleman::green::{green_disk, Disk};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn point_mass_potential_is_radial_green() {
        let z = c(0.0, 0.0);
        let g = CarlemanGeometry::new(
            Disk::new(z, 1.0).unwrap(),
            Region::Disk { center: z, radius: 0.5 },
            vec![(-0.1, 0.1)],
            Measure::Atoms(vec![(z, 1.0)]),
        )
        .unwrap();
        let pot = Potentials::new(g.clone());
        for x in [c(0.3, 0.1), c(-0.7, 0.2), c(0.0, 0.95)] {
            let expected = (1.0 / x.norm()).ln() / (2.0 * PI);
            assert!((pot.phi_mu(x) - expected).abs() < 1e-14);
            assert!((pot.phi_mu(x) - green_disk(1.0, x, z).unwrap()).abs() < 1e-14);
        }
        assert!(matches!(carleman_weight(&g, 64), Err(Error::Singular(_))));
    }

    #[test]
    fn smooth_step_slope() {
        let h = 1e-6;
        let slope = (0..=1000)
            .map(|i| {
                let s = i as f64 / 1000.0;
                (smooth_step(s + h) - smooth_step(s - h)) / (2.0 * h)
            })
            .fold(0.0, f64::max);
        assert!((slope - 2.0).abs() < 1e-6, "{slope}");
    }

    #[test]
    fn area_potential_matches_quadrature() {
        use crate::quadrature::GaussLegendre;
        let g = CarlemanGeometry::new(
            Disk::new(c(0.0, 0.0), 2.0).unwrap(),
            Region::Rectangle {
                x: (-1.0, 1.0),
                y: (-0.5, 0.5),
            },
            vec![(-0.5, 0.5)],
            Measure::Uniform(vec![(-0.5, 0.5)]),
        )
        .unwrap();
        let pot = Potentials::new(g.clone());
        let gl = GaussLegendre::new(32);
        // x outside Y: smooth integrand
        let x = c(0.3, 1.2);
        let direct = -gl.integrate_composite(-1.0, 1.0, 4, |u| {
            gl.integrate_composite(-0.5, 0.5, 2, |v| g.domain.green(x, c(u, v)).unwrap())
        });
        assert!((pot.psi_y(x) - direct).abs() < 1e-10);
        // Φ_μ against quadrature of G over the interval
        let x = c(0.2, 0.9);
        let direct = gl.integrate_composite(-0.5, 0.5, 4, |t| g.domain.green(x, c(t, 0.0)).unwrap());
        assert!((pot.phi_mu(x) - direct).abs() < 1e-12);
    }
}
