//! Schrödinger operators `H = -Δ_g + V`: assembly, dense diagonalization,
//! spectral projectors, Poisson operators and the splitting of `-Δ_g + V`
//! into `-Δ` plus long- and short-range perturbations.

mod cache;
mod operator;
mod perturbation;
mod problem;
mod spectral;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use cache::{load_cached, read_cache, store_cache, write_eigen_csv, CACHE_VERSION};
pub use operator::{assemble, Operator};
pub use perturbation::{split_perturbation, DecayFit, PerturbationReport};
pub use problem::{Preset, SchrodingerProblem};
pub use spectral::{
    decompose, decompose_problem, flat_project, poisson, project, SpectralDecomposition, RESIDUAL_TOL, THRESHOLD_TOL,
};

/// Choice of square root on the negative axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

/// `√μ` for `μ >= 0`, `±i√|μ|` for `μ < 0`.
pub fn sqrt_pm(mu: f64, branch: Branch) -> Complex64 {
    if mu >= 0.0 {
        Complex64::new(mu.sqrt(), 0.0)
    } else {
        let r = (-mu).sqrt();
        match branch {
            Branch::Plus => Complex64::new(0.0, r),
            Branch::Minus => Complex64::new(0.0, -r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_pm_examples() {
        assert_eq!(sqrt_pm(4.0, Branch::Plus), Complex64::new(2.0, 0.0));
        assert_eq!(sqrt_pm(-9.0, Branch::Plus), Complex64::new(0.0, 3.0));
        assert_eq!(sqrt_pm(-9.0, Branch::Minus), Complex64::new(0.0, -3.0));
        assert_eq!(sqrt_pm(0.0, Branch::Minus), Complex64::new(0.0, 0.0));
        assert!(((sqrt_pm(-2.0, Branch::Plus) * 1.7).exp().norm() - 1.0).abs() < 1e-15);
    }
}
