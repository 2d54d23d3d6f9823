//! Gauss–Legendre rules and the tensor/polar rules built from them.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule: `panels` equal sub-intervals, one rule each.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let step = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * step;
                self.integrate(lo, lo + step, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Quadrature points `(point, weight)` for the Euclidean ball of radius
/// `radius` centered at the origin in dimension 1, 2 or 3.
///
/// `n` controls the number of radial and angular nodes. Polynomials of
/// moderate degree are integrated exactly.
pub fn ball_rule(dim: usize, radius: f64, n: usize) -> Vec<(Vec<f64>, f64)> {
    let gl = GaussLegendre::new(n);
    match dim {
        1 => gl.on_interval(-radius, radius).map(|(x, w)| (vec![x], w)).collect(),
        2 => {
            let n_theta = 2 * n;
            let dtheta = 2.0 * PI / n_theta as f64;
            let mut out = Vec::with_capacity(n * n_theta);
            for (r, wr) in gl.on_interval(0.0, radius) {
                for k in 0..n_theta {
                    let t = (k as f64 + 0.5) * dtheta;
                    out.push((vec![r * t.cos(), r * t.sin()], wr * r * dtheta));
                }
            }
            out
        }
        3 => {
            let n_phi = 2 * n;
            let dphi = 2.0 * PI / n_phi as f64;
            let mut out = Vec::with_capacity(n * n * n_phi);
            for (r, wr) in gl.on_interval(0.0, radius) {
                for (c, wc) in gl.on_interval(-1.0, 1.0) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for k in 0..n_phi {
                        let p = (k as f64 + 0.5) * dphi;
                        out.push((vec![r * s * p.cos(), r * s * p.sin(), r * c], wr * r * r * wc * dphi));
                    }
                }
            }
            out
        }
        _ => panic!("ball_rule supports dimensions 1..=3, got {dim}"),
    }
}

/// Volume of the Euclidean ball of radius `r` in dimension `dim`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r * r * r,
        _ => panic!("ball_volume supports dimensions 1..=3, got {dim}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn high_order_rules_are_stable() {
        let gl = GaussLegendre::new(96);
        let v = gl.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
        assert!(gl.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn ball_rules_reproduce_volumes() {
        for dim in 1..=3 {
            let v: f64 = ball_rule(dim, 0.7, 12).iter().map(|(_, w)| w).sum();
            assert!((v - ball_volume(dim, 0.7)).abs() < 1e-12, "dim {dim}");
        }
        let second: f64 = ball_rule(2, 1.0, 12).iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((second - PI / 4.0).abs() < 1e-13);
    }
}
