use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::search::curve_max;
use crate::error::{Error, Result};

/// Number of boundary samples used by [`interior_sup_check`].
pub const BOUNDARY_SAMPLES: usize = 256;

/// `‖u‖_{L^∞(B_{R'})} / ‖u‖_{L²(B_R \ B_{R'})}` for the harmonic extension
/// `u` of `boundary(θ)` from the circle of radius `R`.
///
/// The boundary data is sampled at [`BOUNDARY_SAMPLES`] angles, so it is
/// taken as a trigonometric polynomial of degree below half that number.
/// The supremum is attained on `|x| = R'`; the annulus norm is summed
/// mode by mode. Zero data gives 0.
pub fn interior_sup_check<B: Fn(f64) -> f64>(boundary: B, outer: f64, inner: f64) -> Result<f64> {
    if !(inner > 0.0 && outer > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radii must be positive, got R = {outer}, R' = {inner}"
        )));
    }
    if inner >= outer {
        return Err(Error::InvalidParameter(format!(
            "need R' < R, got R' = {inner}, R = {outer}"
        )));
    }
    let n = BOUNDARY_SAMPLES;
    let mut c: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(boundary(2.0 * PI * k as f64 / n as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut c);
    // (mode, coefficient); the Nyquist term is split evenly
    let modes: Vec<(i64, Complex64)> = (0..n)
        .flat_map(|k| {
            let v = c[k] / n as f64;
            if k == n / 2 {
                vec![(k as i64, v * 0.5), (-(k as i64), v * 0.5)]
            } else if k < n / 2 {
                vec![(k as i64, v)]
            } else {
                vec![(k as i64 - n as i64, v)]
            }
        })
        .collect();
    let annulus: f64 = modes
        .iter()
        .map(|&(m, v)| {
            let p = 2 * m.unsigned_abs() as i32 + 2;
            // ∫_{R'}^{R} (r/R)^{2|m|} r dr
            let radial = (outer.powi(2) - inner.powi(2) * (inner / outer).powi(p - 2)) / p as f64;
            2.0 * PI * v.norm_sqr() * radial
        })
        .sum();
    if annulus == 0.0 {
        return Ok(0.0);
    }
    let q = inner / outer;
    let value = |t: f64| -> f64 {
        modes
            .iter()
            .map(|&(m, v)| v * q.powi(m.unsigned_abs() as i32) * Complex64::from_polar(1.0, m as f64 * t))
            .sum::<Complex64>()
            .norm()
    };
    let (_, sup) = curve_max(value, 0.0, 2.0 * PI, true, 4 * n);
    Ok(sup / annulus.sqrt())
}

/// Bound on [`interior_sup_check`] valid for every harmonic function on
/// `B_R`: by Cauchy–Schwarz over the Fourier modes the ratio is at most
/// `sqrt(Σ_m q^{2|m|} / (2π ∫_{R'}^{R} (r/R)^{2|m|} r dr))` with `q = R'/R`.
pub fn interior_sup_bound(outer: f64, inner: f64) -> Result<f64> {
    if !(inner > 0.0 && inner < outer) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < R' < R, got R' = {inner}, R = {outer}"
        )));
    }
    let q = inner / outer;
    let term = |m: u32| {
        let p = 2 * m as i32 + 2;
        let radial = (outer.powi(2) - inner.powi(2) * q.powi(p - 2)) / p as f64;
        q.powi(2 * m as i32) / (2.0 * PI * radial)
    };
    let mut sum = term(0);
    let mut m = 1;
    loop {
        let t = 2.0 * term(m);
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
        m += 1;
    }
    Ok(sum.sqrt())
}
