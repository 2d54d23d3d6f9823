use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Field, Grid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Frequency transform with torus normalization.
///
/// Forward: `f̂_k = N^{-d} Σ_n f_n e^{-i ξ_k·x_n}` so a plane wave `e^{iξ·x}`
/// maps to a unit coefficient. Inverse: `f_n = Σ_k f̂_k e^{i ξ_k·x_n}`.
/// Parseval reads `‖f‖² = L^d Σ |f̂_k|²`.
pub fn frequency_transform(f: &Field, direction: Direction) -> Field {
    let mut values = f.values().to_vec();
    transform_in_place(f.grid(), &mut values, direction);
    Field::from_values_unchecked(*f.grid(), values)
}

pub(crate) fn transform_in_place(grid: &Grid, values: &mut [Complex64], direction: Direction) {
    let n = grid.points();
    let dim = grid.dim();
    debug_assert_eq!(values.len(), grid.len());
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in 0..values.len() / n {
                // `start` enumerates lines: outer block index and inner offset
                let outer = start / stride;
                let inner = start % stride;
                let base = outer * block + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = values[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    values[base + j * stride] = *v;
                }
            }
        }
    });
    if direction == Direction::Forward {
        let scale = 1.0 / grid.len() as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Spectral partial derivative along `axis`.
///
/// With `keep_nyquist = false` the Nyquist wavenumber is dropped, which
/// makes the derivative map real fields to real fields.
pub(crate) fn spectral_derivative(
    grid: &Grid,
    values: &[Complex64],
    axis: usize,
    keep_nyquist: bool,
) -> Vec<Complex64> {
    let mut hat = values.to_vec();
    transform_in_place(grid, &mut hat, Direction::Forward);
    let n = grid.points();
    for (i, v) in hat.iter_mut().enumerate() {
        let m = grid.unravel(i)[axis];
        if !keep_nyquist && m == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, grid.frequency(m));
        }
    }
    transform_in_place(grid, &mut hat, Direction::Inverse);
    hat
}

/// Spectral Laplacian `Δf`, multiplier `-|ξ|²` on every mode.
pub(crate) fn spectral_laplacian(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut hat = values.to_vec();
    transform_in_place(grid, &mut hat, Direction::Forward);
    for (i, v) in hat.iter_mut().enumerate() {
        let xi = grid.xi_norm(i);
        *v *= -xi * xi;
    }
    transform_in_place(grid, &mut hat, Direction::Inverse);
    hat
}
