use num_complex::Complex64;

use super::{frequency_transform, in_closed_ball, transform_in_place, Direction, Field};
use crate::error::{Error, Result};
use crate::quadrature::ball_rule;

/// Band-limit tail tolerance: relative spectral mass allowed outside `|ξ| <= μ`.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Imaginary half-width `a` of the tube `{|Im z| < a}` and the slice
/// offsets `y` at which norms are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGeometry {
    half_width: f64,
    offsets: Vec<Vec<f64>>,
}

impl TubeGeometry {
    pub fn new(half_width: f64, offsets: Vec<Vec<f64>>) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tube half-width must be positive, got {half_width}"
            )));
        }
        for y in &offsets {
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= half_width {
                return Err(Error::OffsetOutsideTube { norm, half_width });
            }
        }
        Ok(Self { half_width, offsets })
    }

    /// Tube with no sampled offsets.
    pub fn with_half_width(half_width: f64) -> Result<Self> {
        Self::new(half_width, Vec::new())
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }
}

/// Squared spectral magnitudes of a band-limited field together with
/// their frequency vectors, restricted to the retained ball.
pub(crate) struct BandSpectrum {
    pub dim: usize,
    pub volume: f64,
    pub modes: Vec<([f64; 3], f64)>,
}

impl BandSpectrum {
    pub fn new(f: &Field, mu: f64) -> Result<Self> {
        let grid = *f.grid();
        let hat = frequency_transform(f, Direction::Forward);
        let mut total = 0.0;
        let mut tail = 0.0;
        let mut modes = Vec::new();
        for (i, v) in hat.values().iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if in_closed_ball(grid.xi_norm(i), mu) {
                if m > 0.0 {
                    modes.push((grid.xi(i), m));
                }
            } else {
                tail += m;
            }
        }
        if total > 0.0 && tail > TAIL_TOLERANCE * total {
            return Err(Error::NotBandLimited { mu, tail: tail / total });
        }
        Ok(Self {
            dim: grid.dim(),
            volume: grid.volume(),
            modes,
        })
    }

    /// `‖f(· + iy)‖²`.
    pub fn slice_norm_sqr(&self, y: &[f64]) -> f64 {
        self.volume
            * self
                .modes
                .iter()
                .map(|(xi, m)| {
                    let dot: f64 = (0..self.dim).map(|a| xi[a] * y[a]).sum();
                    (-2.0 * dot).exp() * m
                })
                .sum::<f64>()
    }
}

fn check_offset_dim(f: &Field, y: &[f64]) -> Result<()> {
    if y.len() != f.grid().dim() {
        return Err(Error::InvalidParameter(format!(
            "offset has {} components, grid dimension is {}",
            y.len(),
            f.grid().dim()
        )));
    }
    Ok(())
}

/// L² norm of `x ↦ f(x + iy)` for a field band-limited to `|ξ| <= mu_freq`.
///
/// Each coefficient `f̂(ξ)` is weighted by `e^{-y·ξ}`, so the result never
/// exceeds `e^{mu_freq |y|} ‖f‖`.
pub fn tube_slice_norm(f: &Field, y: &[f64], mu_freq: f64) -> Result<f64> {
    check_offset_dim(f, y)?;
    let spectrum = BandSpectrum::new(f, mu_freq)?;
    Ok(spectrum.slice_norm_sqr(y).sqrt())
}

/// Nodal values of `x ↦ f(x + iy)`.
pub fn slice_values(f: &Field, y: &[f64], mu_freq: f64) -> Result<Field> {
    check_offset_dim(f, y)?;
    BandSpectrum::new(f, mu_freq)?;
    let grid = *f.grid();
    let mut hat = f.values().to_vec();
    transform_in_place(&grid, &mut hat, Direction::Forward);
    for (i, v) in hat.iter_mut().enumerate() {
        let xi = grid.xi(i);
        let dot: f64 = (0..grid.dim()).map(|a| xi[a] * y[a]).sum();
        *v *= Complex64::new((-dot).exp(), 0.0);
    }
    transform_in_place(&grid, &mut hat, Direction::Inverse);
    Field::new(grid, hat)
}

/// `∫_{|y|<a} ‖f(· + iy)‖² dy`, the squared tube norm over `U_a`, by ball
/// quadrature in the offset variable with `nodes` radial nodes.
pub fn tube_integral(f: &Field, half_width: f64, mu_freq: f64, nodes: usize) -> Result<f64> {
    let spectrum = BandSpectrum::new(f, mu_freq)?;
    Ok(ball_rule(f.grid().dim(), half_width, nodes)
        .iter()
        .map(|(y, w)| w * spectrum.slice_norm_sqr(y))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_slice() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let f = Field::plane_wave(g, &[3]);
        let n = tube_slice_norm(&f, &[0.1], 3.0).unwrap();
        assert!((n - (-0.3f64).exp() * (2.0 * PI).sqrt()).abs() < 1e-12);
        let n0 = tube_slice_norm(&f, &[0.0], 3.0).unwrap();
        assert!((n0 - f.norm()).abs() < 1e-12);
    }

    #[test]
    fn two_mode_slice_matches_direct_sum() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let f = Field::plane_wave(g, &[3]).add(&Field::plane_wave(g, &[-3])).unwrap();
        let y: f64 = 0.2;
        // |e^{i3(x+iy)} + e^{-i3(x+iy)}|² integrates to 2π (e^{-6y} + e^{6y})
        let expected = (2.0 * PI * ((-6.0 * y).exp() + (6.0 * y).exp())).sqrt();
        assert!((tube_slice_norm(&f, &[y], 3.0).unwrap() - expected).abs() < 1e-12);
        let slice = slice_values(&f, &[y], 3.0).unwrap();
        assert!((slice.norm() - expected).abs() < 1e-11);
    }

    #[test]
    fn rejects_out_of_band() {
        let g = Grid::new(1, 2.0 * PI, 64).unwrap();
        let f = Field::plane_wave(g, &[4]);
        match tube_slice_norm(&f, &[0.1], 3.0) {
            Err(Error::NotBandLimited { tail, .. }) => assert!((tail - 1.0).abs() < 1e-12),
            other => panic!("expected band-limit error, got {other:?}"),
        }
    }

    #[test]
    fn tube_geometry_requires_strict_offsets() {
        assert!(TubeGeometry::new(0.5, vec![vec![0.3], vec![-0.49]]).is_ok());
        assert!(matches!(
            TubeGeometry::new(0.5, vec![vec![0.5]]),
            Err(Error::OffsetOutsideTube { .. })
        ));
    }

    #[test]
    fn tube_integral_single_mode_closed_form() {
        let g = Grid::new(1, 2.0 * PI, 32).unwrap();
        let f = Field::plane_wave(g, &[2]);
        let a: f64 = 0.4;
        // ∫_{-a}^{a} 2π e^{-4y} dy
        let expected = 2.0 * PI * (4.0 * a).sinh() / 2.0;
        let v = tube_integral(&f, a, 2.0, 24).unwrap();
        assert!((v - expected).abs() < 1e-12 * expected);
    }
}
