use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::carleman::{interpolate_tube, TubeInterpolation};
use crate::error::{Error, Result};
use crate::field::{in_closed_ball, transform_in_place, tube_integral, weighted_norm, Direction, Field, TubeGeometry};
use crate::quadrature::ball_volume;
use crate::schrodinger::{poisson, sqrt_pm, Branch};
use crate::thick::ThickSet;

use super::gram::compressed_gram;
use super::sweep::{lambda_min, ExponentialFit, RangeSource, SweepMode};

/// Tolerance of the exact multiplier algebra.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Relative tail a prescribed field may carry outside the projector range.
const RANGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Frequency radius (flat) or energy threshold (spectral).
    pub mu: f64,
    pub s0: f64,
    pub branch: Branch,
    pub seed: u64,
    /// Interpolation exponent of the tube step.
    pub nu: f64,
    /// Radius of the covering balls of the tube step.
    pub cell_radius: f64,
    /// Gauss–Legendre order in the imaginary directions.
    pub nodes: usize,
    /// Constants `(A, C)` from a sweep. Without them the sharp constant
    /// `1/c(μ)` at this threshold is used.
    pub fit: Option<ExponentialFit>,
}

impl PipelineParams {
    pub fn new(mu: f64, s0: f64) -> Self {
        Self {
            mu,
            s0,
            branch: Branch::Plus,
            seed: 0,
            nu: 0.5,
            cell_radius: 1.0,
            nodes: 24,
            fit: None,
        }
    }
}

/// Tube steps of the flat pipeline, with `b = s0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSteps {
    pub half_width: f64,
    /// `∫_{U_b} |f|²`.
    pub integral: f64,
    /// `|B_b|`: each slice obeys `‖f(· + iy)‖ <= ‖h‖` for `|y| <= s0`.
    pub constant: f64,
    pub bound_holds: bool,
    pub interpolation_exponent: f64,
    pub interpolation_constant: f64,
    pub interpolation_pass: bool,
    /// `log` of `C^{1/ν} (|B_b| e^{2 s0 μ})^{(1-ν)/ν}`.
    pub chain_log_bound: f64,
    /// `chain_log_bound - log(∫|f|² / ∫_ω|f|²)` with nodal sums.
    pub chain_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub mode: SweepMode,
    pub mu: f64,
    pub s0: f64,
    pub branch: Branch,
    pub seed: u64,
    pub rank: usize,
    pub norm_f: f64,
    pub norm_h: f64,
    /// `|e^{s0 μ_±^{1/2}}|`, with `μ_±^{1/2} = μ` for frequency radii.
    pub multiplier_modulus: f64,
    pub h_bound_holds: bool,
    /// `‖u_±(s0, ·) - f‖ / ‖f‖`.
    pub reconstruction_error: f64,
    /// `∫_{U_b}|f|² / (|B_b| ‖h‖²)`, flat mode only.
    pub tube_bound_ratio: Option<f64>,
    pub tube: Option<TubeSteps>,
    /// `∫_ω|f|² / ∫|f|²`.
    pub observed_fraction: f64,
    pub c_min: f64,
    pub fit: ExponentialFit,
    /// `"sweep"` or `"sharp"`.
    pub fit_source: String,
    /// `log(A² e^{2Cμ_eff}) - log(∫|f|² / ∫_ω|f|²)`.
    pub final_inequality_margin: f64,
    pub geometry_hash: String,
    pub problem_hash: Option<String>,
    pub pass: bool,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run the pipeline on a seeded random element of the projector range
/// (standard normal coefficients, real and imaginary parts independent).
pub fn theorem_pipeline(source: RangeSource, omega: &ThickSet, params: &PipelineParams) -> Result<PipelineReport> {
    let basis = source.basis(params.mu);
    if basis.is_empty() {
        return Err(Error::RankZero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut values = vec![Complex64::new(0.0, 0.0); source.grid().len()];
    for b in &basis {
        let c = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        values.iter_mut().zip(b.values()).for_each(|(v, x)| *v += c * x);
    }
    let f = Field::new(*source.grid(), values)?;
    pipeline_for_field(source, omega, &f, params)
}

/// Range coefficients and `μ_±^{1/2}` per basis element.
struct RangeData {
    coeffs: Vec<Complex64>,
    roots: Vec<Complex64>,
    basis: Vec<Field>,
}

/// Run the pipeline on a prescribed element `f` of the projector range.
pub fn pipeline_for_field(
    source: RangeSource,
    omega: &ThickSet,
    f: &Field,
    params: &PipelineParams,
) -> Result<PipelineReport> {
    let grid = *source.grid();
    grid.ensure_same(omega.grid())?;
    grid.ensure_same(f.grid())?;
    if !(params.s0 > 0.0 && params.s0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "s0 must be positive, got {}",
            params.s0
        )));
    }
    let weight = source.weight();
    let norm_f = weighted_norm(f, weight)?;
    if norm_f == 0.0 {
        return Err(Error::InvalidParameter("pipeline field is zero".into()));
    }
    let s0 = params.s0;
    let mode = source.mode();

    let data = range_data(source, params, f, norm_f)?;
    if data.basis.is_empty() {
        return Err(Error::RankZero);
    }
    let max_exponent = data.roots.iter().map(|r| s0 * r.re).fold(0.0, f64::max);
    let mu_root = match mode {
        SweepMode::Flat => Complex64::new(params.mu, 0.0),
        SweepMode::Energy => sqrt_pm(params.mu, params.branch),
    };
    let bound_exponent = s0 * mu_root.re;
    if max_exponent.max(bound_exponent) > f64::MAX.ln() {
        return Err(Error::MultiplierOverflow {
            exponent: max_exponent.max(bound_exponent),
        });
    }
    let multiplier_modulus = bound_exponent.exp();

    // h = U^{-1} e^{s0 σ^{1/2}} U f, then f again as u(s0) = P_{s0} h
    let (h, rebuilt) = match source {
        RangeSource::Flat(_) => {
            let mut hat = f.values().to_vec();
            transform_in_place(&grid, &mut hat, Direction::Forward);
            for (i, v) in hat.iter_mut().enumerate() {
                let xi = grid.xi_norm(i);
                *v = if in_closed_ball(xi, params.mu) {
                    *v * (s0 * xi).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            let mut h = hat.clone();
            transform_in_place(&grid, &mut h, Direction::Inverse);
            for (i, v) in hat.iter_mut().enumerate() {
                *v *= (-s0 * grid.xi_norm(i)).exp();
            }
            transform_in_place(&grid, &mut hat, Direction::Inverse);
            (Field::new(grid, h)?, Field::new(grid, hat)?)
        }
        RangeSource::Spectral(dec) => {
            let mut c = vec![Complex64::new(0.0, 0.0); dec.len()];
            for (j, (cj, root)) in data.coeffs.iter().zip(&data.roots).enumerate() {
                c[j] = cj * (root * s0).exp();
            }
            let h = dec.synthesize(&c);
            let rebuilt = poisson(dec, s0, params.branch, &h)?;
            (h, rebuilt)
        }
    };
    let norm_h = weighted_norm(&h, weight)?;
    let h_bound_holds = norm_h <= multiplier_modulus * norm_f + 1e-10;
    let reconstruction_error = weighted_norm(&rebuilt.sub(f)?, weight)? / norm_f;

    let gram = compressed_gram(&data.basis, omega, weight)?;
    let total: f64 = data.coeffs.iter().map(|c| c.norm_sqr()).sum();
    let gc = &gram * nalgebra::DVector::from_column_slice(&data.coeffs);
    let observed: f64 = data.coeffs.iter().zip(gc.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    let observed_fraction = (observed / total).clamp(0.0, 1.0);
    let c_min = lambda_min(gram);

    let (fit, fit_source) = match params.fit {
        Some(fit) => (fit, "sweep"),
        None => {
            if !(c_min > 0.0) {
                return Err(Error::DegenerateFit("c = 0 at the pipeline threshold".into()));
            }
            (
                ExponentialFit {
                    amplitude: c_min.powf(-0.5),
                    rate: 0.0,
                    residual: 0.0,
                },
                "sharp",
            )
        }
    };
    let final_inequality_margin = fit.log_bound(mode.effective(params.mu)) + observed_fraction.ln();

    let (tube_bound_ratio, tube) = match source {
        RangeSource::Flat(_) => {
            let steps = tube_steps(omega, f, params, norm_f, norm_h)?;
            (Some(steps.integral / (steps.constant * norm_h * norm_h)), Some(steps))
        }
        RangeSource::Spectral(_) => (None, None),
    };

    let tube_ok = tube
        .as_ref()
        .is_none_or(|t| t.bound_holds && t.interpolation_pass && t.chain_margin >= 0.0);
    let pass = h_bound_holds
        && reconstruction_error <= RECONSTRUCTION_TOL
        && tube_ok
        && final_inequality_margin >= -RECONSTRUCTION_TOL;
    Ok(PipelineReport {
        mode,
        mu: params.mu,
        s0,
        branch: params.branch,
        seed: params.seed,
        rank: data.basis.len(),
        norm_f,
        norm_h,
        multiplier_modulus,
        h_bound_holds,
        reconstruction_error,
        tube_bound_ratio,
        tube,
        observed_fraction,
        c_min,
        fit,
        fit_source: fit_source.into(),
        final_inequality_margin,
        geometry_hash: hex::encode(omega.content_hash()),
        problem_hash: match source {
            RangeSource::Flat(_) => None,
            RangeSource::Spectral(dec) => Some(hex::encode(dec.problem().content_hash())),
        },
        pass,
    })
}

fn range_data(source: RangeSource, params: &PipelineParams, f: &Field, norm_f: f64) -> Result<RangeData> {
    let grid = *source.grid();
    let basis = source.basis(params.mu);
    let (coeffs, roots, tail) = match source {
        RangeSource::Flat(_) => {
            let mut hat = f.values().to_vec();
            transform_in_place(&grid, &mut hat, Direction::Forward);
            let scale = grid.volume().sqrt();
            let mut coeffs = Vec::new();
            let mut roots = Vec::new();
            let mut tail = 0.0;
            for (i, v) in hat.iter().enumerate() {
                let xi = grid.xi_norm(i);
                if in_closed_ball(xi, params.mu) {
                    coeffs.push(v * scale);
                    roots.push(Complex64::new(xi, 0.0));
                } else {
                    tail += v.norm_sqr() * scale * scale;
                }
            }
            (coeffs, roots, tail)
        }
        RangeSource::Spectral(dec) => {
            let all = dec.coefficients(f)?;
            let r = basis.len();
            let tail = all[r..].iter().map(|c| c.norm_sqr()).sum::<f64>();
            let roots = dec.eigenvalues()[..r]
                .iter()
                .map(|&s| sqrt_pm(s, params.branch))
                .collect();
            (all[..r].to_vec(), roots, tail)
        }
    };
    if tail.sqrt() > RANGE_TOL * norm_f {
        return Err(Error::InvalidParameter(format!(
            "field leaves the projector range: relative tail {:e}",
            tail.sqrt() / norm_f
        )));
    }
    Ok(RangeData { coeffs, roots, basis })
}

fn tube_steps(omega: &ThickSet, f: &Field, params: &PipelineParams, norm_f: f64, norm_h: f64) -> Result<TubeSteps> {
    let grid = *f.grid();
    let b = params.s0;
    let integral = tube_integral(f, b, params.mu, params.nodes)?;
    let constant = ball_volume(grid.dim(), b);
    let bound_holds = integral.is_finite() && integral <= constant * norm_h * norm_h * (1.0 + 1e-12);

    let tube = TubeGeometry::with_half_width(b)?;
    let cert = interpolate_tube(
        std::slice::from_ref(f),
        omega,
        &tube,
        &TubeInterpolation {
            mu_freq: params.mu,
            nu: params.nu,
            cell_radius: params.cell_radius,
            constant: None,
            nodes: params.nodes,
        },
    )?;
    let nu = params.nu;
    let c_int = cert.certificate.constant;
    let chain_log_bound = c_int.ln() / nu + (1.0 - nu) / nu * (constant.ln() + 2.0 * b * params.mu);
    let dv = grid.cell_volume();
    let on_omega: f64 = f
        .values()
        .iter()
        .zip(omega.indicator())
        .filter(|(_, &w)| w)
        .map(|(v, _)| v.norm_sqr() * dv)
        .sum();
    let chain_margin = chain_log_bound - (norm_f * norm_f / on_omega).ln();
    Ok(TubeSteps {
        half_width: b,
        integral,
        constant,
        bound_holds,
        interpolation_exponent: nu,
        interpolation_constant: c_int,
        interpolation_pass: cert.pass,
        chain_log_bound,
        chain_margin,
    })
}
