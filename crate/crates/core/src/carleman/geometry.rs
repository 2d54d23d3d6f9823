use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::green::{log_disk_integral, log_rect_integral, log_segment_integral, Disk};
use crate::error::{Error, Result};

/// The inner open set `Y` with `K ⊂ Y` and `closure(Y) ⊂ X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disk { center: Complex64, radius: f64 },
    Rectangle { x: (f64, f64), y: (f64, f64) },
}

impl Region {
    pub fn area(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Region::Rectangle { x, y } => (x.1 - x.0) * (y.1 - y.0),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, p: Complex64) -> bool {
        match *self {
            Region::Disk { center, radius } => (p - center).norm() <= radius,
            Region::Rectangle { x, y } => p.re >= x.0 && p.re <= x.1 && p.im >= y.0 && p.im <= y.1,
        }
    }

    pub fn contains_open(&self, p: Complex64) -> bool {
        match *self {
            Region::Disk { center, radius } => (p - center).norm() < radius,
            Region::Rectangle { x, y } => p.re > x.0 && p.re < x.1 && p.im > y.0 && p.im < y.1,
        }
    }

    /// `∫_Y log|q - y| dλ(y)`.
    pub fn log_potential(&self, q: Complex64) -> f64 {
        match *self {
            Region::Disk { center, radius } => log_disk_integral(q, center, radius),
            Region::Rectangle { x, y } => log_rect_integral(q, x, y),
        }
    }

    /// Largest distance from `p` to a point of the closed region.
    pub fn farthest_distance(&self, p: Complex64) -> f64 {
        match *self {
            Region::Disk { center, radius } => (p - center).norm() + radius,
            Region::Rectangle { x, y } => [x.0, x.1]
                .iter()
                .flat_map(|&a| [y.0, y.1].map(|b| (Complex64::new(a, b) - p).norm()))
                .fold(0.0, f64::max),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            Region::Rectangle { x, y } => 2.0 * ((x.1 - x.0) + (y.1 - y.0)),
        }
    }

    /// Boundary point at arc-length fraction `t ∈ [0, 1)`.
    pub fn boundary_point(&self, t: f64) -> Complex64 {
        let t = t.rem_euclid(1.0);
        match *self {
            Region::Disk { center, radius } => center + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * t),
            Region::Rectangle { x, y } => {
                let (w, h) = (x.1 - x.0, y.1 - y.0);
                let mut s = t * 2.0 * (w + h);
                if s < w {
                    return Complex64::new(x.0 + s, y.0);
                }
                s -= w;
                if s < h {
                    return Complex64::new(x.1, y.0 + s);
                }
                s -= h;
                if s < w {
                    return Complex64::new(x.1 - s, y.1);
                }
                s -= w;
                Complex64::new(x.0, y.1 - s)
            }
        }
    }

    /// Point of the closed region from unit-square coordinates.
    pub fn interior_point(&self, u: f64, v: f64) -> Complex64 {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        match *self {
            Region::Disk { center, radius } => {
                center + Complex64::from_polar(radius * u.sqrt(), 2.0 * std::f64::consts::PI * v)
            }
            Region::Rectangle { x, y } => Complex64::new(x.0 + u * (x.1 - x.0), y.0 + v * (y.1 - y.0)),
        }
    }
}

/// Probability measure on the compact set `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Weighted point masses.
    Atoms(Vec<(Complex64, f64)>),
    /// Normalized Lebesgue measure `|E|^{-1} 1_E dx` on a finite union of
    /// real intervals `E`.
    Uniform(Vec<(f64, f64)>),
}

impl Measure {
    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Atoms(a) => a.iter().map(|(_, w)| w).sum(),
            Measure::Uniform(_) => 1.0,
        }
    }

    /// `∫ log|q - y| dμ(y)`; `-∞` at an atom.
    pub fn log_potential(&self, q: Complex64) -> f64 {
        match self {
            Measure::Atoms(a) => a.iter().map(|(p, w)| w * (q - p).norm().ln()).sum(),
            Measure::Uniform(iv) => {
                let len: f64 = iv.iter().map(|(a, b)| b - a).sum();
                iv.iter().map(|&(a, b)| log_segment_integral(q, a, b)).sum::<f64>() / len
            }
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Measure::Atoms(_))
    }
}

/// Length of a union of disjoint intervals.
pub fn intervals_length(iv: &[(f64, f64)]) -> f64 {
    iv.iter().map(|(a, b)| b - a).sum()
}

/// `X` (a disk), `Y`, `K` (real intervals) and `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanGeometry {
    pub domain: Disk,
    pub inner: Region,
    pub compact: Vec<(f64, f64)>,
    pub measure: Measure,
}

fn check_intervals(iv: &[(f64, f64)], what: &str) -> Result<()> {
    if iv.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sorted = iv.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (a, b) in &sorted {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("{what} interval ({a}, {b}) is empty")));
        }
    }
    if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::InvalidParameter(format!("{what} intervals overlap")));
    }
    Ok(())
}

impl CarlemanGeometry {
    pub fn new(domain: Disk, inner: Region, compact: Vec<(f64, f64)>, measure: Measure) -> Result<Self> {
        check_intervals(&compact, "compact")?;
        let in_k = |p: Complex64| p.im == 0.0 && compact.iter().any(|&(a, b)| p.re >= a - 1e-12 && p.re <= b + 1e-12);
        for &(a, b) in &compact {
            if !inner.contains_open(Complex64::new(a, 0.0)) || !inner.contains_open(Complex64::new(b, 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "compact interval ({a}, {b}) is not inside the inner region"
                )));
            }
        }
        if inner.farthest_distance(domain.center) >= domain.radius {
            return Err(Error::InvalidParameter(
                "closure of the inner region is not inside the domain".into(),
            ));
        }
        match &measure {
            Measure::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::EmptySet);
                }
                if atoms.iter().any(|(p, w)| !in_k(*p) || *w < 0.0) {
                    return Err(Error::InvalidParameter(
                        "atoms must lie on the compact set with non-negative weights".into(),
                    ));
                }
                let total = measure.total_mass();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "measure has total mass {total}, expected 1"
                    )));
                }
            }
            Measure::Uniform(iv) => {
                check_intervals(iv, "measure support")?;
                if iv
                    .iter()
                    .any(|&(a, b)| !in_k(Complex64::new(a, 0.0)) || !in_k(Complex64::new(b, 0.0)))
                {
                    return Err(Error::InvalidParameter(
                        "measure support must lie on the compact set".into(),
                    ));
                }
            }
        }
        Ok(Self {
            domain,
            inner,
            compact,
            measure,
        })
    }

    /// `X` = disk of radius 2 at 1/2, `Y` = concentric disk of radius 1.25,
    /// `K = [0, 1]` and `μ` uniform on `E ⊂ [0, 1]`.
    pub fn unit_interval(e: Vec<(f64, f64)>) -> Result<Self> {
        let c = Complex64::new(0.5, 0.0);
        Self::new(
            Disk::new(c, 2.0)?,
            Region::Disk {
                center: c,
                radius: 1.25,
            },
            vec![(0.0, 1.0)],
            Measure::Uniform(e),
        )
    }

    /// Largest distance from the center of `X` to `closure(Y)`.
    pub fn inner_reach(&self) -> f64 {
        self.inner.farthest_distance(self.domain.center)
    }

    /// SHA-256 over every defining number, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |v: f64| h.update(v.to_le_bytes());
        put(self.domain.center.re);
        put(self.domain.center.im);
        put(self.domain.radius);
        match self.inner {
            Region::Disk { center, radius } => {
                put(0.0);
                put(center.re);
                put(center.im);
                put(radius);
            }
            Region::Rectangle { x, y } => {
                put(1.0);
                put(x.0);
                put(x.1);
                put(y.0);
                put(y.1);
            }
        }
        for (a, b) in &self.compact {
            put(*a);
            put(*b);
        }
        match &self.measure {
            Measure::Atoms(atoms) => {
                put(0.0);
                for (p, w) in atoms {
                    put(p.re);
                    put(p.im);
                    put(*w);
                }
            }
            Measure::Uniform(iv) => {
                put(1.0);
                for (a, b) in iv {
                    put(*a);
                    put(*b);
                }
            }
        }
        hex::encode(h.finalize())
    }

    pub fn describe(&self) -> GeometrySummary {
        GeometrySummary {
            domain_center: [self.domain.center.re, self.domain.center.im],
            domain_radius: self.domain.radius,
            inner: match self.inner {
                Region::Disk { center, radius } => {
                    format!("disk(center=({}, {}), radius={radius})", center.re, center.im)
                }
                Region::Rectangle { x, y } => format!("rectangle([{}, {}] x [{}, {}])", x.0, x.1, y.0, y.1),
            },
            compact: self.compact.clone(),
            measure: match &self.measure {
                Measure::Atoms(a) => format!("{} atoms", a.len()),
                Measure::Uniform(iv) => format!("uniform on {iv:?}"),
            },
            hash: self.hash(),
        }
    }
}

/// Serializable description of a geometry.
#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub domain_center: [f64; 2],
    pub domain_radius: f64,
    pub inner: String,
    pub compact: Vec<(f64, f64)>,
    pub measure: String,
    pub hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let c = Complex64::new(0.0, 0.0);
        let x = Disk::new(c, 2.0).unwrap();
        let y = Region::Disk { center: c, radius: 1.0 };
        assert!(CarlemanGeometry::new(x, y, vec![(-0.5, 0.5)], Measure::Uniform(vec![(-0.5, 0.5)])).is_ok());
        // Y not compactly inside X
        let big = Region::Disk { center: c, radius: 2.0 };
        assert!(CarlemanGeometry::new(x, big, vec![(-0.5, 0.5)], Measure::Uniform(vec![(0.0, 0.5)])).is_err());
        // K not inside Y
        assert!(CarlemanGeometry::new(x, y, vec![(-1.5, 0.5)], Measure::Uniform(vec![(0.0, 0.5)])).is_err());
        // mass
        let atoms = Measure::Atoms(vec![(c, 0.5)]);
        assert!(CarlemanGeometry::new(x, y, vec![(-0.5, 0.5)], atoms).is_err());
        let atoms = Measure::Atoms(vec![(c, 0.25), (Complex64::new(0.5, 0.0), 0.75)]);
        assert!(CarlemanGeometry::new(x, y, vec![(-0.5, 0.5)], atoms).is_ok());
        assert!(matches!(
            CarlemanGeometry::new(x, y, vec![(-0.5, 0.5)], Measure::Uniform(vec![])),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn rectangle_boundary_walk() {
        let r = Region::Rectangle {
            x: (0.0, 2.0),
            y: (0.0, 1.0),
        };
        assert_eq!(r.boundary_point(0.0), Complex64::new(0.0, 0.0));
        assert_eq!(r.boundary_point(2.0 / 6.0), Complex64::new(2.0, 0.0));
        assert_eq!(r.boundary_point(3.0 / 6.0), Complex64::new(2.0, 1.0));
        assert!((r.boundary_point(5.5 / 6.0) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(r.perimeter(), 6.0);
    }

    #[test]
    fn hash_is_stable() {
        let a = CarlemanGeometry::unit_interval(vec![(0.0, 0.5)]).unwrap();
        let b = CarlemanGeometry::unit_interval(vec![(0.0, 0.5)]).unwrap();
        let c = CarlemanGeometry::unit_interval(vec![(0.0, 0.25)]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
