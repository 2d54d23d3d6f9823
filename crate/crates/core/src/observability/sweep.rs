use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{in_closed_ball, Field, Grid};
use crate::schrodinger::SpectralDecomposition;
use crate::thick::ThickSet;

use super::gram::compressed_gram;

/// Domination tolerance of the upper-envelope fit, in `log(1/c)` units.
pub const ENVELOPE_TOL: f64 = 1e-6;

/// Where the range of the projector comes from.
#[derive(Debug, Clone, Copy)]
pub enum RangeSource<'a> {
    /// Frequency ball `|ξ| <= μ` on a flat grid; thresholds are radii.
    Flat(Grid),
    /// `σ_j < λ` of a decomposition; thresholds are energies.
    Spectral(&'a SpectralDecomposition),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Flat,
    Energy,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Flat => "flat",
            SweepMode::Energy => "energy",
        }
    }

    /// `μ` for frequency radii, `√max(μ, 0)` for energies.
    pub fn effective(self, threshold: f64) -> f64 {
        match self {
            SweepMode::Flat => threshold,
            SweepMode::Energy => threshold.max(0.0).sqrt(),
        }
    }
}

impl<'a> RangeSource<'a> {
    pub fn grid(&self) -> &Grid {
        match self {
            RangeSource::Flat(g) => g,
            RangeSource::Spectral(dec) => dec.grid(),
        }
    }

    pub fn mode(&self) -> SweepMode {
        match self {
            RangeSource::Flat(_) => SweepMode::Flat,
            RangeSource::Spectral(_) => SweepMode::Energy,
        }
    }

    pub fn weight(&self) -> Option<&'a [f64]> {
        match self {
            RangeSource::Flat(_) => None,
            RangeSource::Spectral(dec) => Some(dec.weight()),
        }
    }

    /// Number of basis elements retained at `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        match self {
            RangeSource::Flat(g) => (0..g.len())
                .filter(|&i| in_closed_ball(g.xi_norm(i), threshold))
                .count(),
            RangeSource::Spectral(dec) => dec.count_below(threshold),
        }
    }

    /// Orthonormal basis of the projector range: normalized plane waves
    /// `e^{iξ·x}/L^{d/2}` or eigenmodes.
    pub fn basis(&self, threshold: f64) -> Vec<Field> {
        match self {
            RangeSource::Flat(g) => {
                let s = Complex64::new(g.volume().sqrt().recip(), 0.0);
                (0..g.len())
                    .filter(|&i| in_closed_ball(g.xi_norm(i), threshold))
                    .map(|i| {
                        let idx = g.unravel(i);
                        let k: Vec<i64> = (0..g.dim()).map(|a| g.wavenumber(idx[a])).collect();
                        Field::plane_wave(*g, &k).scale(s)
                    })
                    .collect()
            }
            RangeSource::Spectral(dec) => (0..dec.count_below(threshold)).map(|j| dec.mode(j)).collect(),
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix, clamped to `[0, 1]`.
pub(crate) fn lambda_min(gram: nalgebra::DMatrix<Complex64>) -> f64 {
    gram.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0)
}

/// `c = min_{f ∈ ran Π, f ≠ 0} ‖f‖²_{L²(ω)} / ‖f‖²`, the smallest
/// eigenvalue of the compressed Gram matrix of the range.
pub fn observability_constant(source: RangeSource, threshold: f64, omega: &ThickSet) -> Result<f64> {
    source.grid().ensure_same(omega.grid())?;
    let basis = source.basis(threshold);
    if basis.is_empty() {
        return Err(Error::RankZero);
    }
    Ok(lambda_min(compressed_gram(&basis, omega, source.weight())?))
}

/// `log(1/c) <= 2 C μ_eff + 2 log A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Upper-envelope fit: largest excess of a point over the line
    /// (non-positive excess reported as 0). Least-squares fit: RMS error.
    pub residual: f64,
}

impl ExponentialFit {
    /// `log(A² e^{2Cμ_eff})`, the certified value of `log(1/c)`.
    pub fn log_bound(&self, mu_eff: f64) -> f64 {
        2.0 * self.amplitude.ln() + 2.0 * self.rate * mu_eff
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityCurve {
    pub mode: SweepMode,
    pub mu_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub mode_counts: Vec<usize>,
    pub fit: ExponentialFit,
    pub least_squares: ExponentialFit,
}

impl ObservabilityCurve {
    pub fn log_inv_c(&self) -> Vec<f64> {
        self.c_values.iter().map(|c| -c.ln()).collect()
    }

    /// Whether the envelope line dominates every point within
    /// [`ENVELOPE_TOL`].
    pub fn fit_dominates(&self) -> bool {
        self.mu_values
            .iter()
            .zip(self.log_inv_c())
            .all(|(&mu, y)| y <= self.fit.log_bound(self.mode.effective(mu)) + ENVELOPE_TOL)
    }

    /// One row per threshold: `mode, threshold, rank, c_min, log_inv_c,
    /// fit_A, fit_C, residual`, preceded by a `# config_sha256` comment
    /// when a hash is given.
    pub fn write_csv<W: Write>(&self, mut out: W, config_hash: Option<&str>) -> Result<()> {
        if let Some(h) = config_hash {
            writeln!(out, "# config_sha256={h}")?;
        }
        writeln!(out, "mode,threshold,rank,c_min,log_inv_c,fit_A,fit_C,residual")?;
        for (i, y) in self.log_inv_c().into_iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.mode.as_str(),
                self.mu_values[i],
                self.mode_counts[i],
                self.c_values[i],
                y,
                self.fit.amplitude,
                self.fit.rate,
                self.fit.residual
            )?;
        }
        Ok(())
    }
}

/// Observability constants at ascending thresholds, with the
/// upper-envelope and least-squares exponential fits.
pub fn sweep(source: RangeSource, omega: &ThickSet, thresholds: &[f64]) -> Result<ObservabilityCurve> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("thresholds must be strictly ascending".into()));
    }
    if thresholds.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 thresholds, got {}",
            thresholds.len()
        )));
    }
    let c_values = thresholds
        .par_iter()
        .map(|&t| observability_constant(source, t, omega))
        .collect::<Result<Vec<f64>>>()?;
    let mode = source.mode();
    let x: Vec<f64> = thresholds.iter().map(|&t| 2.0 * mode.effective(t)).collect();
    let y = c_values
        .iter()
        .zip(thresholds)
        .map(|(&c, t)| {
            if c > 0.0 {
                Ok(-c.ln())
            } else {
                Err(Error::DegenerateFit(format!("c = 0 at threshold {t}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let (fit, least_squares) = fit_exponential(&x, &y)?;
    Ok(ObservabilityCurve {
        mode,
        mu_values: thresholds.to_vec(),
        c_values,
        mode_counts: thresholds.iter().map(|&t| source.rank(t)).collect(),
        fit,
        least_squares,
    })
}

fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Vertices of the upper concave hull of points sorted by `x`; among equal
/// abscissae only the highest point is kept.
fn upper_hull(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(x.len());
    for (&a, &b) in x.iter().zip(y) {
        match pts.last_mut() {
            Some(last) if last.0 == a => last.1 = last.1.max(b),
            _ => pts.push((a, b)),
        }
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Fit `y ≈ C x + 2 log A` with `x = 2 μ_eff`, `y = log(1/c)`.
///
/// The envelope fit is the least-squares line through the upper hull
/// vertices, lifted until it dominates every point.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> Result<(ExponentialFit, ExponentialFit)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let (slope, intercept) = least_squares_line(x, y);
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    let ols = ExponentialFit {
        amplitude: (intercept / 2.0).exp(),
        rate: slope,
        residual: rms,
    };

    let hull = upper_hull(x, y);
    let (hx, hy): (Vec<f64>, Vec<f64>) = hull.into_iter().unzip();
    let (slope, mut intercept) = least_squares_line(&hx, &hy);
    let lift = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - slope * a - intercept)
        .fold(f64::NEG_INFINITY, f64::max);
    intercept += lift;
    let excess = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - slope * a - intercept)
        .fold(0.0, f64::max);
    let envelope = ExponentialFit {
        amplitude: (intercept / 2.0).exp(),
        rate: slope,
        residual: excess,
    };
    Ok((envelope, ols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_dominates_and_touches() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.9, 2.5, 2.8, 4.2];
        let (fit, ols) = fit_exponential(&x, &y).unwrap();
        let line = |v: f64| fit.rate * v + 2.0 * fit.amplitude.ln();
        let gaps: Vec<f64> = x.iter().zip(&y).map(|(&a, &b)| line(a) - b).collect();
        assert!(gaps.iter().all(|g| *g >= -1e-12));
        assert!(gaps.iter().any(|g| g.abs() < 1e-12));
        assert!(fit.residual <= ENVELOPE_TOL);
        assert!(ols.residual > 0.0);
    }

    #[test]
    fn collinear_points_are_reproduced() {
        let x = [0.0, 2.0, 4.0, 6.0];
        let y: Vec<f64> = x.iter().map(|v| 0.3 * v + 0.5).collect();
        let (fit, ols) = fit_exponential(&x, &y).unwrap();
        for f in [fit, ols] {
            assert!((f.rate - 0.3).abs() < 1e-12);
            assert!((2.0 * f.amplitude.ln() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_abscissa_gives_zero_slope() {
        let (fit, _) = fit_exponential(&[0.0; 4], &[0.2, 0.7, 0.7, 0.1]).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert!((2.0 * fit.amplitude.ln() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_exponential(&[1.0, 2.0], &[0.0, 1.0]),
            Err(Error::DegenerateFit(_))
        ));
    }
}
