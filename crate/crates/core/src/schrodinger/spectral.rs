use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{assemble, sqrt_pm, Branch, Operator, SchrodingerProblem};
use crate::error::{Error, Result};
use crate::field::{in_closed_ball, transform_in_place, Direction, Field, Grid};

/// Residual bound factor: `‖Hφ_j - σ_j φ_j‖_w <= RESIDUAL_TOL · max(1, |σ_j|)`.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Eigenpairs of `H` with eigenvectors orthonormal in `<·,·>_w`.
///
/// `eigenvectors` stores one real eigenvector per column, ascending in
/// eigenvalue. This is the discrete counterpart of the unitary
/// diagonalization `U H U^{-1} = σ`; every functional-calculus operator
/// below acts by multiplying the coefficients `<φ_j, f>_w`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    problem: SchrodingerProblem,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    residuals: Vec<f64>,
}

/// Dense diagonalization of an assembled operator.
pub fn decompose(op: &Operator) -> Result<SpectralDecomposition> {
    let problem = op.problem().clone();
    let grid = *problem.grid();
    let w = problem.weight().to_vec();
    let a = op.weighted_matrix();
    let n = a.nrows();
    // W^{-1/2} A W^{-1/2} is symmetric with the same spectrum as H
    let inv_sqrt: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = 1.0 / grid.cell_volume().sqrt();
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])] * inv_sqrt[i] * scale);
    let mut dec = SpectralDecomposition {
        problem,
        eigenvalues,
        eigenvectors,
        residuals: Vec::new(),
    };
    dec.residuals = (0..n).into_par_iter().map(|j| dec.residual(op, j)).collect();
    if let Some((j, r)) = dec
        .residuals
        .iter()
        .enumerate()
        .find(|(j, r)| **r > RESIDUAL_TOL * dec.eigenvalues[*j].abs().max(1.0))
    {
        return Err(Error::Eigensolver(format!(
            "eigenpair {j} (sigma = {}) has residual {r:e}",
            dec.eigenvalues[j]
        )));
    }
    Ok(dec)
}

/// Assemble and decompose in one call.
pub fn decompose_problem(problem: &SchrodingerProblem) -> Result<SpectralDecomposition> {
    decompose(&assemble(problem))
}

impl SpectralDecomposition {
    /// Rebuild from stored eigenpairs (used by the on-disk cache).
    pub(crate) fn from_parts(
        problem: SchrodingerProblem,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        residuals: Vec<f64>,
    ) -> Self {
        Self {
            problem,
            eigenvalues,
            eigenvectors,
            residuals,
        }
    }

    pub fn problem(&self) -> &SchrodingerProblem {
        &self.problem
    }

    pub fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn weight(&self) -> &[f64] {
        self.problem.weight()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `φ_j` as a field.
    pub fn mode(&self, j: usize) -> Field {
        let col = self.eigenvectors.column(j);
        Field::new(*self.grid(), col.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .expect("eigenvector length matches grid")
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let cut = lambda - THRESHOLD_TOL * lambda.abs().max(1.0);
        self.eigenvalues.partition_point(|&s| s < cut)
    }

    fn residual(&self, op: &Operator, j: usize) -> f64 {
        let phi: Vec<Complex64> = self
            .eigenvectors
            .column(j)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let hphi = op.apply_values(&phi);
        let w = self.weight();
        let sigma = self.eigenvalues[j];
        let sum: f64 = hphi
            .iter()
            .zip(&phi)
            .zip(w)
            .map(|((a, b), wi)| (a - b * sigma).norm_sqr() * wi)
            .sum();
        (sum * self.grid().cell_volume()).sqrt()
    }

    /// Largest entry of `|Φ^T W Φ h^d - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let w = DVector::from_column_slice(self.weight());
        let scaled = DMatrix::from_fn(self.len(), self.len(), |i, j| {
            self.eigenvectors[(i, j)] * w[i] * self.grid().cell_volume()
        });
        let gram = self.eigenvectors.transpose() * scaled;
        (gram - DMatrix::identity(self.len(), self.len())).amax()
    }

    /// Spectral coefficients `c_j = <φ_j, f>_w` for all modes.
    pub fn coefficients(&self, f: &Field) -> Result<Vec<Complex64>> {
        self.grid().ensure_same(f.grid())?;
        let dv = self.grid().cell_volume();
        let wf: Vec<Complex64> = f
            .values()
            .iter()
            .zip(self.weight())
            .map(|(v, w)| v * (*w * dv))
            .collect();
        Ok((0..self.len())
            .into_par_iter()
            .map(|j| self.eigenvectors.column(j).iter().zip(&wf).map(|(p, v)| v * *p).sum())
            .collect())
    }

    /// `Σ_j c_j φ_j`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Field {
        let n = self.grid().len();
        let values: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = self.eigenvectors.row(i);
                row.iter()
                    .zip(coeffs)
                    .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
                    .map(|(p, c)| c * *p)
                    .sum()
            })
            .collect();
        Field::new(*self.grid(), values).expect("length matches grid")
    }

    /// Apply `F(H)` for a scalar function of the eigenvalue.
    pub fn apply_function<F>(&self, f: &Field, func: F) -> Result<Field>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut c = self.coefficients(f)?;
        for (cj, &s) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= func(s);
        }
        Ok(self.synthesize(&c))
    }
}

/// Eigenvalues within this relative distance of a threshold count as equal
/// to it.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// Spectral projector `Π_λ f = Σ_{σ_j < λ} <φ_j, f>_w φ_j` (strict
/// inequality). An eigenvalue equal to `λ` up to [`THRESHOLD_TOL`] is
/// excluded.
pub fn project(dec: &SpectralDecomposition, lambda: f64, f: &Field) -> Result<Field> {
    let cut = lambda - THRESHOLD_TOL * lambda.abs().max(1.0);
    dec.apply_function(f, |s| {
        if s < cut {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Flat frequency-ball projector: keep every coefficient with `|ξ| <= μ`
/// (closed ball), zero the rest.
pub fn flat_project(grid: &Grid, mu_freq: f64, f: &Field) -> Result<Field> {
    grid.ensure_same(f.grid())?;
    if !(mu_freq >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency radius must be non-negative, got {mu_freq}"
        )));
    }
    let mut hat = f.values().to_vec();
    transform_in_place(grid, &mut hat, Direction::Forward);
    for (i, v) in hat.iter_mut().enumerate() {
        if !in_closed_ball(grid.xi_norm(i), mu_freq) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    transform_in_place(grid, &mut hat, Direction::Inverse);
    Field::new(*grid, hat)
}

/// Poisson operator `P_{s,±} f = Σ_j e^{-s σ_{j,±}^{1/2}} <φ_j, f>_w φ_j`.
pub fn poisson(dec: &SpectralDecomposition, s: f64, branch: Branch, f: &Field) -> Result<Field> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Poisson time must be non-negative, got {s}"
        )));
    }
    dec.apply_function(f, |sigma| (-sqrt_pm(sigma, branch) * s).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TubeGeometry;
    use crate::schrodinger::Preset;
    use std::f64::consts::PI;

    fn tube() -> TubeGeometry {
        TubeGeometry::with_half_width(0.5).unwrap()
    }

    #[test]
    fn flat_spectrum_is_squared_wavenumbers() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let dec = decompose_problem(&Preset::Flat.build(g, 0.5, tube()).unwrap()).unwrap();
        let mut expected: Vec<f64> = (-32i64..32).map(|k| (k * k) as f64).collect();
        expected.sort_by(f64::total_cmp);
        for (s, e) in dec.eigenvalues().iter().zip(&expected) {
            assert!((s - e).abs() < 1e-9, "{s} vs {e}");
        }
        assert!(dec.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn gaussian_metric_decomposition_invariants() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let p = Preset::GaussianMetric { amplitude: 0.2 }.build(g, 0.5, tube()).unwrap();
        let dec = decompose_problem(&p).unwrap();
        assert!(dec.orthonormality_defect() < 1e-8);
        assert!(dec.eigenvalues()[0] >= -p.energy_floor());
        assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        // lowest mode is the constant
        assert!(dec.eigenvalues()[0].abs() < 1e-9);
    }

    #[test]
    fn empty_and_full_projection() {
        let g = Grid::new(1, 2.0 * PI, 32).unwrap();
        let dec = decompose_problem(&Preset::Flat.build(g, 0.5, tube()).unwrap()).unwrap();
        let f = Field::from_real_fn(g, |x| (x[0]).sin() + 0.3 * (5.0 * x[0]).cos() + 0.1);
        let zero = project(&dec, -1.0, &f).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let full = project(&dec, 1e6, &f).unwrap();
        assert!(full.sub(&f).unwrap().max_abs() < 1e-10);
        // strict inequality: λ = 1 keeps only the constant
        let p1 = project(&dec, 1.0, &f).unwrap();
        assert!(p1.sub(&Field::from_real_fn(g, |_| 0.1)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn flat_projector_selects_modes() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let f3 = Field::plane_wave(g, &[3]);
        let f4 = Field::plane_wave(g, &[4]);
        assert!(flat_project(&g, 3.0, &f3).unwrap().sub(&f3).unwrap().max_abs() < 1e-13);
        assert!(flat_project(&g, 3.0, &f4).unwrap().max_abs() < 1e-13);
        let f = Field::from_real_fn(g, |x| 2.0 + x[0].cos());
        let mean = flat_project(&g, 0.0, &f).unwrap();
        assert!(mean.sub(&Field::from_real_fn(g, |_| 2.0)).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn poisson_examples() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let dec = decompose_problem(&Preset::Flat.build(g, 0.5, tube()).unwrap()).unwrap();
        let f = Field::plane_wave(g, &[3]);
        let id = poisson(&dec, 0.0, Branch::Plus, &f).unwrap();
        assert!(id.sub(&f).unwrap().max_abs() < 1e-12);
        let p = poisson(&dec, 0.5, Branch::Plus, &f).unwrap();
        let expected = f.scale(Complex64::new((-1.5f64).exp(), 0.0));
        assert!(p.sub(&expected).unwrap().max_abs() < 1e-12);
        assert!(poisson(&dec, -0.1, Branch::Plus, &f).is_err());
    }
}
