//! Grids on periodic boxes, complex fields, frequency transforms, weighted
//! inner products and tube-slice norms of band-limited fields.

mod grid;
pub mod io;
mod transform;
mod tube;

use num_complex::Complex64;

pub use grid::{in_closed_ball, Grid};
pub use transform::{frequency_transform, Direction};
pub(crate) use transform::{spectral_derivative, spectral_laplacian, transform_in_place};
pub use tube::{slice_values, tube_integral, tube_slice_norm, TubeGeometry};

use crate::error::{Error, Result};

/// Build a [`Grid`]; see [`Grid::new`] for the accepted parameters.
pub fn make_grid(dim: usize, length: f64, points: usize) -> Result<Grid> {
    Grid::new(dim, length, points)
}

/// Complex nodal values on a [`Grid`], row-major axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Sample `f` at every node. The closure receives the node coordinates
    /// (only the first `dim` entries are meaningful).
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Single plane wave `e^{i k·x 2π/L}` for an integer wavevector.
    pub fn plane_wave(grid: Grid, k: &[i64]) -> Self {
        let scale = 2.0 * std::f64::consts::PI / grid.length();
        Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(k).map(|(xi, &ki)| xi * ki as f64 * scale).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, s: Complex64) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Unweighted L² norm, `sqrt(spacing^d Σ |f|²)`.
    pub fn norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `spacing^d Σ conj(f) g w`, the discrete inner product of
/// `L²(ℝ^d; w dx)`. A missing weight means `w ≡ 1`.
pub fn weighted_inner_product(f: &Field, g: &Field, weight: Option<&[f64]>) -> Result<Complex64> {
    f.grid.ensure_same(&g.grid)?;
    let dv = f.grid.cell_volume();
    let sum: Complex64 = match weight {
        None => f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum(),
        Some(w) => {
            if w.len() != f.values.len() {
                return Err(Error::FieldLength {
                    expected: f.values.len(),
                    got: w.len(),
                });
            }
            f.values
                .iter()
                .zip(&g.values)
                .zip(w)
                .map(|((a, b), wi)| a.conj() * b * *wi)
                .sum()
        }
    };
    Ok(sum * dv)
}

/// `sqrt(<f, f>_w)`.
pub fn weighted_norm(f: &Field, weight: Option<&[f64]>) -> Result<f64> {
    Ok(weighted_inner_product(f, f, weight)?.re.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid64() -> Grid {
        Grid::new(1, 2.0 * PI, 64).unwrap()
    }

    #[test]
    fn plane_wave_maps_to_unit_coefficient() {
        let g = grid64();
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x[0]));
        let hat = frequency_transform(&f, Direction::Forward);
        for (m, v) in hat.values().iter().enumerate() {
            let expected = if g.wavenumber(m) == 3 { 1.0 } else { 0.0 };
            assert!((v - c(expected, 0.0)).norm() < 1e-13, "m = {m}");
        }
        let one = Field::from_real_fn(g, |_| 1.0);
        let hat = frequency_transform(&one, Direction::Forward);
        assert!((hat.values()[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(hat.values()[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn two_dimensional_plane_wave() {
        let g = Grid::new(2, 2.0 * PI, 16).unwrap();
        let f = Field::plane_wave(g, &[2, -3]);
        let hat = frequency_transform(&f, Direction::Forward);
        let idx = g.ravel(&[2, 16 - 3]);
        for (i, v) in hat.values().iter().enumerate() {
            let expected = if i == idx { 1.0 } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-13 && v.im.abs() < 1e-13);
        }
    }

    #[test]
    fn inner_product_examples() {
        let g = grid64();
        let one = Field::from_real_fn(g, |_| 1.0);
        let ip = weighted_inner_product(&one, &one, None).unwrap();
        assert!((ip.re - 2.0 * PI).abs() < 1e-13 && ip.im.abs() < 1e-15);

        let e1 = Field::plane_wave(g, &[1]);
        let e2 = Field::plane_wave(g, &[2]);
        assert!(weighted_inner_product(&e1, &e2, None).unwrap().norm() < 1e-12);

        // ∫ (1 + cos x / 2) dx over one period is 2π
        let w: Vec<f64> = (0..g.len()).map(|i| 1.0 + 0.5 * g.node(i)[0].cos()).collect();
        let ip = weighted_inner_product(&one, &one, Some(&w)).unwrap();
        assert!((ip.re - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let a = Field::zeros(grid64());
        let b = Field::zeros(Grid::new(1, 2.0 * PI, 32).unwrap());
        assert!(matches!(weighted_inner_product(&a, &b, None), Err(Error::GridMismatch)));
        assert!(weighted_inner_product(&a, &a, Some(&[1.0; 3])).is_err());
    }

    fn random_field(grid: Grid, seed: u64) -> Field {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Field::new(grid, v).unwrap()
    }

    proptest! {
        #[test]
        fn parseval_and_round_trip(seed in any::<u64>(), dim in 1usize..=3) {
            let points = [64, 16, 8][dim - 1];
            let g = Grid::new(dim, 3.7, points).unwrap();
            let f = random_field(g, seed);
            let hat = frequency_transform(&f, Direction::Forward);
            let back = frequency_transform(&hat, Direction::Inverse);
            let err = back.sub(&f).unwrap().norm() / f.norm();
            prop_assert!(err < 1e-12);
            let energy: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.volume();
            prop_assert!((energy - f.norm().powi(2)).abs() <= 1e-12 * f.norm().powi(2));
        }

        #[test]
        fn weighted_form_is_hermitian_positive(seed in any::<u64>()) {
            let g = Grid::new(1, 5.0, 32).unwrap();
            let f = random_field(g, seed);
            let h = random_field(g, seed.wrapping_add(1));
            let w: Vec<f64> = (0..g.len()).map(|i| 1.5 + (g.node(i)[0]).sin()).collect();
            let a = weighted_inner_product(&f, &h, Some(&w)).unwrap();
            let b = weighted_inner_product(&h, &f, Some(&w)).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-12);
            let ff = weighted_inner_product(&f, &f, Some(&w)).unwrap();
            prop_assert!(ff.re > 0.0 && ff.im.abs() < 1e-12);
        }
    }
}
