use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::SchrodingerProblem;
use crate::error::Result;
use crate::field::{spectral_derivative, spectral_laplacian, Field};

/// Discrete `H = -Δ_g + V` in divergence form.
///
/// With `w = √det g` and `D_i` the spectral derivative without its Nyquist
/// mode, the operator is
///
/// ```text
/// w H f = -L f - Σ_ij D_i((w g^{ij} - δ_ij) D_j f) + w V f
/// ```
///
/// where `L` is the full spectral Laplacian. `D_i` is skew-symmetric and
/// `L` symmetric, so `w H` is a real symmetric matrix and `H` is exactly
/// self-adjoint in `<·,·>_w`. On the flat problem `H` is the Fourier
/// multiplier `|ξ|²`.
#[derive(Debug, Clone)]
pub struct Operator {
    problem: SchrodingerProblem,
    /// `w g^{ij} - δ_ij` per node, row-major blocks.
    flux: Vec<f64>,
    has_flux: bool,
}

impl Operator {
    pub fn problem(&self) -> &SchrodingerProblem {
        &self.problem
    }

    /// `w H f` (the symmetric form).
    pub fn apply_weighted(&self, f: &[Complex64]) -> Vec<Complex64> {
        let grid = self.problem.grid();
        let d = grid.dim();
        let lap = spectral_laplacian(grid, f);
        let w = self.problem.weight();
        let v = self.problem.potential();
        let mut out: Vec<Complex64> = lap
            .iter()
            .zip(f)
            .enumerate()
            .map(|(i, (l, fi))| -l + fi * (w[i] * v[i]))
            .collect();
        if self.has_flux {
            let grads: Vec<Vec<Complex64>> = (0..d).map(|j| spectral_derivative(grid, f, j, false)).collect();
            for i in 0..d {
                let q: Vec<Complex64> = (0..f.len())
                    .map(|n| {
                        let block = &self.flux[n * d * d..(n + 1) * d * d];
                        (0..d).map(|j| grads[j][n] * block[i * d + j]).sum()
                    })
                    .collect();
                let dq = spectral_derivative(grid, &q, i, false);
                out.iter_mut().zip(dq).for_each(|(o, t)| *o -= t);
            }
        }
        out
    }

    pub fn apply_values(&self, f: &[Complex64]) -> Vec<Complex64> {
        let w = self.problem.weight();
        let mut out = self.apply_weighted(f);
        out.iter_mut().zip(w).for_each(|(o, wi)| *o /= *wi);
        out
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.problem.grid().ensure_same(f.grid())?;
        Field::new(*f.grid(), self.apply_values(f.values()))
    }

    /// Dense real symmetric matrix of `w H` (column `k` is `w H e_k`),
    /// symmetrized to remove round-off.
    pub fn weighted_matrix(&self) -> DMatrix<f64> {
        let n = self.problem.grid().len();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[k] = Complex64::new(1.0, 0.0);
                self.apply_weighted(&e).into_iter().map(|c| c.re).collect()
            })
            .collect();
        let mut a = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
        let at = a.transpose();
        a += at;
        a *= 0.5;
        a
    }
}

/// Assemble `H = -Δ_g + V` for a problem.
pub fn assemble(problem: &SchrodingerProblem) -> Operator {
    let d = problem.dim();
    let w = problem.weight();
    let mut flux = Vec::with_capacity(problem.grid().len() * d * d);
    for (n, wn) in w.iter().enumerate() {
        let inv = problem.inverse_metric_at(n);
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                flux.push(wn * inv[i * d + j] - delta);
            }
        }
    }
    let has_flux = flux.iter().any(|&c| c != 0.0);
    Operator {
        problem: problem.clone(),
        flux,
        has_flux,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{weighted_inner_product, Grid, TubeGeometry};
    use crate::schrodinger::Preset;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn tube() -> TubeGeometry {
        TubeGeometry::with_half_width(0.5).unwrap()
    }

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Field::new(
            grid,
            (0..grid.len())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn flat_plane_wave_is_eigenfunction() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let op = assemble(&Preset::Flat.build(g, 0.5, tube()).unwrap());
        let f = Field::plane_wave(g, &[3]);
        let hf = op.apply(&f).unwrap();
        assert!(hf.sub(&f.scale(Complex64::new(9.0, 0.0))).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn constant_potential_shifts() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let p = SchrodingerProblem::new(g, |_| vec![0.0], |_| 0.7, 0.5, tube()).unwrap();
        let op = assemble(&p);
        let f = Field::plane_wave(g, &[5]);
        let hf = op.apply(&f).unwrap();
        assert!(hf.sub(&f.scale(Complex64::new(25.7, 0.0))).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn gaussian_metric_is_weighted_self_adjoint() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let p = Preset::GaussianMetric { amplitude: 0.2 }.build(g, 0.5, tube()).unwrap();
        let op = assemble(&p);
        for seed in 0..5 {
            let f = random_field(g, seed);
            let h = random_field(g, seed + 100);
            let w = Some(p.weight());
            let lhs = weighted_inner_product(&op.apply(&f).unwrap(), &h, w).unwrap();
            let rhs = weighted_inner_product(&f, &op.apply(&h).unwrap(), w).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn two_dimensional_anisotropic_metric_is_self_adjoint() {
        let g = Grid::new(2, 6.0, 16).unwrap();
        let c = g.center();
        let p = SchrodingerProblem::new(
            g,
            |x| {
                let e = (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp();
                vec![0.3 * e, 0.1 * e, 0.1 * e, 0.2 * e]
            },
            |x| -(-(x[0] - c[0]).powi(2)).exp(),
            0.5,
            tube(),
        )
        .unwrap();
        let op = assemble(&p);
        let a = op.weighted_matrix();
        let f = random_field(g, 3);
        let h = random_field(g, 4);
        let w = Some(p.weight());
        let lhs = weighted_inner_product(&op.apply(&f).unwrap(), &h, w).unwrap();
        let rhs = weighted_inner_product(&f, &op.apply(&h).unwrap(), w).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
        // the matrix was symmetric before symmetrization, up to round-off
        let n = g.len();
        let cols: Vec<f64> = (0..n)
            .flat_map(|k| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[k] = Complex64::new(1.0, 0.0);
                op.apply_weighted(&e).into_iter().map(|c| c.re).collect::<Vec<_>>()
            })
            .collect();
        let raw = DMatrix::from_column_slice(n, n, &cols);
        assert!((&raw - raw.transpose()).amax() < 1e-10 * raw.amax());
        assert!((&raw - &a).amax() < 1e-10 * raw.amax());
    }
}
