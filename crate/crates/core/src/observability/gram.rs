use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{transform_in_place, Direction, Field, Grid};
use crate::thick::ThickSet;

/// Orthonormality tolerance of a basis handed to [`compressed_gram`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `G_jk = ⟨χ_ω b_j, b_k⟩_w` for a basis orthonormal in the weighted
/// inner product.
///
/// Each node set stands for the union of cells `x_n + [0, h)^d`, and each
/// `√w b_j` for its trigonometric interpolant, so the entries are exact
/// integrals over `ω` rather than Riemann sums. On the full box `G` is the
/// discrete Gram matrix itself.
pub fn compressed_gram(basis: &[Field], omega: &ThickSet, weight: Option<&[f64]>) -> Result<DMatrix<Complex64>> {
    let grid = *omega.grid();
    for b in basis {
        grid.ensure_same(b.grid())?;
    }
    if let Some(w) = weight {
        if w.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: w.len(),
            });
        }
    }
    let r = basis.len();
    let coeffs: Vec<Vec<Complex64>> = basis
        .par_iter()
        .map(|b| {
            let mut v: Vec<Complex64> = match weight {
                None => b.values().to_vec(),
                Some(w) => b.values().iter().zip(w).map(|(x, wi)| x * wi.sqrt()).collect(),
            };
            transform_in_place(&grid, &mut v, Direction::Forward);
            v
        })
        .collect();

    let volume = grid.volume();
    let mut defect: f64 = 0.0;
    for j in 0..r {
        for k in j..r {
            let dot: Complex64 = coeffs[j].iter().zip(&coeffs[k]).map(|(a, b)| a.conj() * b).sum();
            let target = if j == k { 1.0 } else { 0.0 };
            defect = defect.max((dot * volume - target).norm());
        }
    }
    if defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { defect });
    }

    let padded = Padded::new(&grid)?;
    let kernel = padded.kernel(omega);
    let applied: Vec<Vec<Complex64>> = coeffs.par_iter().map(|c| padded.apply(&kernel, c)).collect();

    let mut gram = DMatrix::from_element(r, r, ZERO);
    for j in 0..r {
        for k in 0..r {
            gram[(j, k)] = coeffs[j].iter().zip(&applied[k]).map(|(a, b)| a.conj() * b).sum();
        }
    }
    Ok((&gram + gram.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Zero-padded layout of `(2N)^d` used to apply the Toeplitz matrix
/// `M_pq = ∫_ω e^{i(ξ_q - ξ_p)·x} dx` by circular convolution.
struct Padded {
    grid: Grid,
    big: Grid,
}

impl Padded {
    fn new(grid: &Grid) -> Result<Self> {
        Ok(Self {
            grid: *grid,
            big: Grid::new(grid.dim(), grid.length(), 2 * grid.points())?,
        })
    }

    /// Transform of the reversed kernel `m ↦ ∫_ω e^{-i 2π m·x/L} dx` for
    /// integer differences `|m_a| < N`.
    fn kernel(&self, omega: &ThickSet) -> Vec<Complex64> {
        let n = self.grid.points();
        let d = self.grid.dim();
        // S(m) = Σ_{n∈ω} e^{2πi m·n/N}
        let mut sums: Vec<Complex64> = omega
            .indicator()
            .iter()
            .map(|&b| if b { Complex64::new(1.0, 0.0) } else { ZERO })
            .collect();
        transform_in_place(&self.grid, &mut sums, Direction::Inverse);

        let h = self.grid.spacing();
        let cell = |m: i64| -> Complex64 {
            if m == 0 {
                return Complex64::new(h, 0.0);
            }
            let half = PI * m as f64 / n as f64;
            Complex64::from_polar(h * half.sin() / half, half)
        };

        let big_n = 2 * n;
        let mut kernel = vec![ZERO; self.big.len()];
        for (pos, slot) in kernel.iter_mut().enumerate() {
            let idx = self.big.unravel(pos);
            let mut small = [0usize; 3];
            let mut factor = Complex64::new(1.0, 0.0);
            let mut inside = true;
            for a in 0..d {
                // position p carries difference -m, m in (-N, N)
                let p = idx[a] as i64;
                let diff = if p < n as i64 { p } else { p - big_n as i64 };
                if diff.unsigned_abs() as usize >= n {
                    inside = false;
                    break;
                }
                let m = -diff;
                small[a] = m.rem_euclid(n as i64) as usize;
                factor *= cell(m);
            }
            if inside {
                *slot = sums[self.grid.ravel(&small[..d])] * factor;
            }
        }
        transform_in_place(&self.big, &mut kernel, Direction::Forward);
        kernel
    }

    /// `(M v)_p` for coefficients `v` in FFT order on the small grid.
    fn apply(&self, kernel: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.points();
        let d = self.grid.dim();
        let shift = |m: usize| -> usize { (self.grid.wavenumber(m) + n as i64 / 2) as usize };
        let mut buf = vec![ZERO; self.big.len()];
        for (i, x) in v.iter().enumerate() {
            let idx = self.grid.unravel(i);
            let mut pos = [0usize; 3];
            for a in 0..d {
                pos[a] = shift(idx[a]);
            }
            buf[self.big.ravel(&pos[..d])] = *x;
        }
        transform_in_place(&self.big, &mut buf, Direction::Forward);
        buf.iter_mut().zip(kernel).for_each(|(b, k)| *b *= k);
        transform_in_place(&self.big, &mut buf, Direction::Inverse);
        let scale = self.big.len() as f64;
        (0..v.len())
            .map(|i| {
                let idx = self.grid.unravel(i);
                let mut pos = [0usize; 3];
                for a in 0..d {
                    pos[a] = shift(idx[a]);
                }
                buf[self.big.ravel(&pos[..d])] * scale
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn modes(grid: Grid, ks: &[i64]) -> Vec<Field> {
        let s = Complex64::new(1.0 / grid.length().sqrt(), 0.0);
        ks.iter().map(|&k| Field::plane_wave(grid, &[k]).scale(s)).collect()
    }

    #[test]
    fn three_modes_on_half_circle() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let ks = [-1i64, 0, 1];
        let omega = ThickSet::from_fn(g, |x| x[0] < PI);
        let gram = compressed_gram(&modes(g, &ks), &omega, None).unwrap();
        for (j, &kj) in ks.iter().enumerate() {
            for (k, &kk) in ks.iter().enumerate() {
                let m = (kk - kj) as f64;
                let expected = if m == 0.0 {
                    Complex64::new(0.5, 0.0)
                } else {
                    // (1/2π) ∫_0^π e^{imx} dx
                    (Complex64::from_polar(1.0, m * PI) - 1.0) / Complex64::new(0.0, 2.0 * PI * m)
                };
                assert!((gram[(j, k)] - expected).norm() < 1e-13, "{j} {k}");
            }
        }
    }

    #[test]
    fn full_and_empty_sets() {
        let g = Grid::new(2, 3.0, 8).unwrap();
        let basis: Vec<Field> = [[0i64, 0], [1, -2], [3, 1]]
            .iter()
            .map(|k| Field::plane_wave(g, k).scale(Complex64::new(1.0 / 3.0, 0.0)))
            .collect();
        let full = compressed_gram(&basis, &ThickSet::full(g), None).unwrap();
        assert!((full - DMatrix::identity(3, 3)).camax() < 1e-12);
        let empty = compressed_gram(&basis, &ThickSet::empty(g), None).unwrap();
        assert!(empty.camax() < 1e-14);
    }

    #[test]
    fn rejects_unnormalized_basis() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let basis = vec![Field::plane_wave(g, &[1])];
        assert!(matches!(
            compressed_gram(&basis, &ThickSet::full(g), None),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn interval_integral_of_a_smooth_field() {
        let g = Grid::new(1, 2.0 * PI, 32).unwrap();
        let raw = Field::from_real_fn(g, |x| 1.0 + 0.5 * x[0].cos());
        let norm = raw.norm();
        let b = raw.scale(Complex64::new(1.0 / norm, 0.0));
        let omega = ThickSet::from_fn(g, |x| x[0] >= PI / 2.0 && x[0] < 1.5 * PI);
        let gram = compressed_gram(&[b], &omega, None).unwrap();
        // ∫ (1 + cos/2)² over [π/2, 3π/2] = π - 2 + π/8
        let exact = (PI - 2.0 + PI / 8.0) / (norm * norm);
        assert_relative_eq!(gram[(0, 0)].re, exact, max_relative = 1e-13);
    }
}
