use std::f64::consts::PI;

use num_complex::Complex64;

use super::rules::Rule;
use crate::error::{Error, Result};

/// Below this fraction of the radius potentials use the regular form.
const NEAR_CENTER: f64 = 0.25;

/// Open disk in `ℂ ≅ ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, x: Complex64) -> bool {
        (x - self.center).norm() < self.radius
    }

    /// Distance to the boundary circle (negative outside).
    pub fn boundary_distance(&self, x: Complex64) -> f64 {
        self.radius - (x - self.center).norm()
    }

    /// Reflection of `x` across the boundary circle, `None` at the center.
    pub fn reflect(&self, x: Complex64) -> Option<Complex64> {
        let z = x - self.center;
        if z == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some(self.center + self.radius * self.radius / z.conj())
        }
    }

    fn check_closed(&self, x: Complex64) -> Result<()> {
        if (x - self.center).norm() > self.radius * (1.0 + 1e-14) {
            return Err(Error::OutsideDomain(format!(
                "{x} is outside the disk |z - {}| <= {}",
                self.center, self.radius
            )));
        }
        Ok(())
    }

    /// Dirichlet Green function
    /// `G(x, y) = (1/2π) log(|R² - (x-c) conj(y-c)| / (R |x-y|))`.
    pub fn green(&self, x: Complex64, y: Complex64) -> Result<f64> {
        self.check_closed(x)?;
        self.check_closed(y)?;
        let d = (x - y).norm();
        if d == 0.0 {
            return Err(Error::Singular(format!("Green function at x = y = {x}")));
        }
        let num = (self.radius * self.radius - (x - self.center) * (y - self.center).conj()).norm();
        Ok((num / (self.radius * d)).ln() / (2.0 * PI))
    }

    /// `∫ G(x, y) dm(y)` for a source `m` given through its logarithmic
    /// potential `L(q) = ∫ log|q - y| dm(y)`, its total mass and a
    /// quadrature rule for `m`.
    ///
    /// Away from the center this uses the image identity
    /// `|R² - z conj(y-c)| = |z| |y - x*|` with `x*` the reflection of `x`.
    /// Near the center `x*` is far away and `L(x*)` cancels badly, so the
    /// smooth term `∫ log|1 - (x-c) conj(y-c) / R²| dm(y)` is integrated
    /// with `rule` instead.
    pub(crate) fn green_potential<L>(&self, x: Complex64, mass: f64, log_potential: L, rule: &Rule) -> f64
    where
        L: Fn(Complex64) -> f64,
    {
        let inner = log_potential(x);
        let z = x - self.center;
        if z.norm() >= NEAR_CENTER * self.radius {
            let image = self.center + self.radius * self.radius / z.conj();
            return (mass * (z.norm() / self.radius).ln() + log_potential(image) - inner) / (2.0 * PI);
        }
        let a = z / (self.radius * self.radius);
        let smooth: f64 = rule
            .iter()
            .map(|(y, w)| w * (1.0 - a * (y - self.center).conj()).norm().ln())
            .sum();
        (mass * self.radius.ln() + smooth - inner) / (2.0 * PI)
    }
}

/// Green function of the disk of radius `radius` centered at the origin.
pub fn green_disk(radius: f64, x: Complex64, y: Complex64) -> Result<f64> {
    Disk::new(Complex64::new(0.0, 0.0), radius)?.green(x, y)
}

/// `∫_a^b log|x - t| dt` over a real segment.
pub fn log_segment_integral(x: Complex64, a: f64, b: f64) -> f64 {
    let q = x.im;
    let anti = |u: f64| -> f64 {
        if q == 0.0 {
            if u == 0.0 {
                0.0
            } else {
                u * u.abs().ln() - u
            }
        } else {
            0.5 * u * (u * u + q * q).ln() - u + q * (u / q).atan()
        }
    };
    anti(b - x.re) - anti(a - x.re)
}

/// `∫_{|y-c|<r} log|x - y| dλ(y)`.
pub fn log_disk_integral(x: Complex64, center: Complex64, r: f64) -> f64 {
    let s = (x - center).norm();
    if s >= r {
        PI * r * r * s.ln()
    } else {
        PI * r * r * r.ln() - 0.5 * PI * (r * r - s * s)
    }
}

/// `∫_{[x0,x1]×[y0,y1]} log|x - y| dλ(y)`.
pub fn log_rect_integral(x: Complex64, xs: (f64, f64), ys: (f64, f64)) -> f64 {
    // F with ∂_u ∂_v F = ½ log(u² + v²)
    let corner = |u: f64, v: f64| -> f64 {
        let r2 = u * u + v * v;
        let lead = if r2 == 0.0 { 0.0 } else { u * v * (r2.ln() - 3.0) };
        let t1 = if u == 0.0 { 0.0 } else { u * u * (v / u).atan() };
        let t2 = if v == 0.0 { 0.0 } else { v * v * (u / v).atan() };
        0.5 * (lead + t1 + t2)
    };
    let (u0, u1) = (xs.0 - x.re, xs.1 - x.re);
    let (v0, v1) = (ys.0 - x.im, ys.1 - x.im);
    corner(u1, v1) - corner(u0, v1) - corner(u1, v0) + corner(u0, v0)
}
