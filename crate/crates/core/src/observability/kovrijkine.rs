use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::sweep::{ObservabilityCurve, SweepMode};

/// `(γ/K)^{K(ab+1)}`, the one-dimensional Logvinenko–Sereda constant of
/// Kovrijkine for a `(γ, a)`-thick set and spectrum in an interval of
/// length `b`.
pub fn kovrijkine_bound(gamma: f64, a: f64, b: f64, k: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(gamma < k && k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need gamma < K, got gamma = {gamma}, K = {k}"
        )));
    }
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "a and b must be non-negative, got a = {a}, b = {b}"
        )));
    }
    Ok((k * (a * b + 1.0) * (gamma / k).ln()).exp())
}

/// Smallest `K` with `c(μ) >= (γ/K)^{K(aμ/π + 1)}` at every point of a flat
/// sweep. The bound decreases from 1 to 0 as `K` runs over `(γ, ∞)`, so
/// each point has its own threshold and the answer is their maximum. A
/// curve with all `c = 1` returns the infimum `γ`.
pub fn fit_kovrijkine_k(curve: &ObservabilityCurve, gamma: f64, a: f64) -> Result<f64> {
    if curve.mode != SweepMode::Flat {
        return Err(Error::InvalidParameter(
            "Kovrijkine comparison needs a flat sweep".into(),
        ));
    }
    kovrijkine_bound(gamma, a, 0.0, 2.0 * gamma)?;
    let mut best = gamma;
    for (&mu, &c) in curve.mu_values.iter().zip(&curve.c_values) {
        if !(c > 0.0) {
            return Err(Error::DegenerateFit(format!("c = 0 at threshold {mu}")));
        }
        if c >= 1.0 {
            continue;
        }
        let b = mu / PI;
        let log_bound = |k: f64| k * (a * b + 1.0) * (gamma / k).ln();
        let target = c.ln();
        let mut lo = gamma;
        let mut hi = 2.0 * gamma;
        while log_bound(hi) > target {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if log_bound(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.max(hi);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observability::sweep::ExponentialFit;

    #[test]
    fn closed_values() {
        assert!((kovrijkine_bound(0.5, 1.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let b0 = kovrijkine_bound(0.3, 2.0, 0.0, 1.7).unwrap();
        assert!((b0 - (0.3f64 / 1.7).powf(1.7)).abs() < 1e-15);
        assert!(kovrijkine_bound(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(kovrijkine_bound(0.5, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fitted_k_is_tight() {
        let fit = ExponentialFit {
            amplitude: 1.0,
            rate: 0.0,
            residual: 0.0,
        };
        let curve = ObservabilityCurve {
            mode: SweepMode::Flat,
            mu_values: vec![1.0, 2.0, 3.0],
            c_values: vec![0.3, 0.1, 0.02],
            mode_counts: vec![1, 1, 1],
            fit,
            least_squares: fit,
        };
        let k = fit_kovrijkine_k(&curve, 0.5, 1.0).unwrap();
        let holds = |k: f64| {
            curve
                .mu_values
                .iter()
                .zip(&curve.c_values)
                .all(|(&mu, &c)| c >= kovrijkine_bound(0.5, 1.0, mu / PI, k).unwrap())
        };
        assert!(holds(k));
        assert!(!holds(k * (1.0 - 1e-9)));
    }
}
