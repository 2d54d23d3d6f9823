//! Quadrature rules in the plane, as lists of `(point, weight)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::geometry::{Measure, Region};
use crate::quadrature::GaussLegendre;

pub(crate) type Rule = Vec<(Complex64, f64)>;

const ORDER: usize = 16;

/// Composite Gauss–Legendre on `[a, b]` placed on the real axis.
pub(crate) fn segment_rule(a: f64, b: f64, panels: usize) -> Rule {
    let gl = GaussLegendre::new(ORDER);
    let step = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + p as f64 * step;
            gl.on_interval(lo, lo + step)
                .map(|(t, w)| (Complex64::new(t, 0.0), w))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn panel_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    segment_rule(a, b, panels).into_iter().map(|(z, w)| (z.re, w)).collect()
}

/// Polar sector `r ∈ [r0, r1]`, `θ ∈ [t0, t1]` around `center`. A full turn
/// uses the periodic trapezoid rule in `θ`.
pub(crate) fn sector_rule(center: Complex64, r: (f64, f64), t: (f64, f64), panels: usize) -> Rule {
    let radial = panel_nodes(r.0, r.1, panels);
    let full = (t.1 - t.0 - 2.0 * PI).abs() < 1e-12;
    let angular: Vec<(f64, f64)> = if full {
        let n = 2 * ORDER * panels;
        let d = 2.0 * PI / n as f64;
        (0..n).map(|k| (t.0 + (k as f64 + 0.5) * d, d)).collect()
    } else {
        panel_nodes(t.0, t.1, panels)
    };
    let mut out = Vec::with_capacity(radial.len() * angular.len());
    for &(rr, wr) in &radial {
        for &(tt, wt) in &angular {
            out.push((center + Complex64::from_polar(rr, tt), wr * wt * rr));
        }
    }
    out
}

pub(crate) fn disk_rule(center: Complex64, radius: f64, panels: usize) -> Rule {
    sector_rule(center, (0.0, radius), (0.0, 2.0 * PI), panels)
}

pub(crate) fn rect_rule(x: (f64, f64), y: (f64, f64), panels: usize) -> Rule {
    let xs = panel_nodes(x.0, x.1, panels);
    let ys = panel_nodes(y.0, y.1, panels);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &(u, wu) in &xs {
        for &(v, wv) in &ys {
            out.push((Complex64::new(u, v), wu * wv));
        }
    }
    out
}

pub(crate) fn region_rule(region: &Region, panels: usize) -> Rule {
    match *region {
        Region::Disk { center, radius } => disk_rule(center, radius, panels),
        Region::Rectangle { x, y } => rect_rule(x, y, panels),
    }
}

/// Rule for `∫ · dμ`.
pub(crate) fn measure_rule(measure: &Measure, panels: usize) -> Rule {
    match measure {
        Measure::Atoms(atoms) => atoms.clone(),
        Measure::Uniform(iv) => {
            let len: f64 = iv.iter().map(|(a, b)| b - a).sum();
            iv.iter()
                .flat_map(|&(a, b)| segment_rule(a, b, panels))
                .map(|(z, w)| (z, w / len))
                .collect()
        }
    }
}

pub(crate) fn integrate<F: Fn(Complex64) -> f64 + Sync>(rule: &Rule, f: F) -> f64 {
    use rayon::prelude::*;
    // fixed chunking keeps the sum independent of the thread count
    rule.par_chunks(1024)
        .map(|c| c.iter().map(|(z, w)| w * f(*z)).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas_and_moments() {
        let z = Complex64::new(0.3, -0.2);
        let d = disk_rule(z, 1.5, 4);
        assert!((integrate(&d, |_| 1.0) - PI * 2.25).abs() < 1e-12);
        // ∫ |x - z|² = π R⁴ / 2
        assert!((integrate(&d, |p| (p - z).norm_sqr()) - PI * 1.5f64.powi(4) / 2.0).abs() < 1e-11);
        let half = sector_rule(z, (0.5, 1.0), (-PI / 2.0, PI / 2.0), 2);
        assert!((integrate(&half, |_| 1.0) - PI * 0.75 / 2.0).abs() < 1e-12);
        let r = rect_rule((0.0, 2.0), (-1.0, 0.5), 3);
        assert!((integrate(&r, |p| p.re * p.im) - (2.0 * (0.125 - 0.5))).abs() < 1e-12);
        let m = measure_rule(&Measure::Uniform(vec![(0.0, 0.25), (0.75, 1.0)]), 2);
        assert!((integrate(&m, |_| 1.0) - 1.0).abs() < 1e-14);
    }
}
