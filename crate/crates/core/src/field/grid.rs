use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^d` sampled at `N` points per axis.
///
/// Nodes sit at `x_n = n * L / N`. The frequency lattice is
/// `{2πk/L : k = -N/2, ..., N/2 - 1}` per axis; spectral arrays use the
/// FFT ordering where index `m` carries wavenumber `m` for `m < N/2` and
/// `m - N` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    length: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Self { dim, length, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Volume of one cell, `spacing^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Total number of nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumber `k` carried by FFT index `m`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.points as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular frequency `2πk/L` carried by FFT index `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        2.0 * PI * self.wavenumber(m) as f64 / self.length
    }

    /// Split a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut index: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = index % self.points;
            index /= self.points;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.points + i % self.points)
    }

    /// Node coordinates of a flat index (unused axes are zero).
    pub fn node(&self, index: usize) -> [f64; 3] {
        let h = self.spacing();
        let idx = self.unravel(index);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Frequency vector of a flat spectral index.
    pub fn xi(&self, index: usize) -> [f64; 3] {
        let idx = self.unravel(index);
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = self.frequency(idx[a]);
        }
        xi
    }

    pub fn xi_norm(&self, index: usize) -> f64 {
        self.xi(index).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Box center `(L/2, ..., L/2)`.
    pub fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        c.iter_mut().take(self.dim).for_each(|v| *v = 0.5 * self.length);
        c
    }

    /// Euclidean distance from node `index` to the box center.
    pub fn distance_to_center(&self, index: usize) -> f64 {
        let x = self.node(index);
        let c = self.center();
        (0..self.dim).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.points == other.points && self.length == other.length
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Membership test for the closed frequency ball `|ξ| <= mu`.
///
/// Lattice frequencies `2πk/L` are not exactly representable, so the
/// boundary carries a relative slack of `1e-12`.
pub fn in_closed_ball(xi_norm: f64, mu: f64) -> bool {
    xi_norm <= mu * (1.0 + 1e-12) + 1e-12
}
