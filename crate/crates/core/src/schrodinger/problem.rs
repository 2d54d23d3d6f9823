use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{Grid, TubeGeometry};

/// Metric `g = Id + g̃`, potential `V`, decay exponent `ε` and analyticity
/// width on a grid.
///
/// The metric is stored node by node as a row-major `d×d` block.
#[derive(Debug, Clone)]
pub struct SchrodingerProblem {
    grid: Grid,
    metric: Vec<f64>,
    inverse_metric: Vec<f64>,
    sqrt_det: Vec<f64>,
    potential: Vec<f64>,
    epsilon: f64,
    tube: TubeGeometry,
}

fn det_and_inverse(d: usize, m: &[f64]) -> (f64, Vec<f64>) {
    match d {
        1 => (m[0], vec![1.0 / m[0]]),
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            (det, vec![m[3] / det, -m[1] / det, -m[2] / det, m[0] / det])
        }
        3 => {
            let a = nalgebra::Matrix3::from_row_slice(m);
            let det = a.determinant();
            let inv = a.try_inverse().unwrap_or_else(nalgebra::Matrix3::zeros);
            (det, inv.transpose().as_slice().to_vec())
        }
        _ => unreachable!("grid dimension is 1..=3"),
    }
}

fn is_positive_definite(d: usize, m: &[f64]) -> bool {
    let symmetric = (0..d).all(|i| (0..d).all(|j| (m[i * d + j] - m[j * d + i]).abs() <= 1e-12));
    // leading principal minors
    symmetric
        && m[0] > 0.0
        && (d < 2 || m[0] * m[d + 1] - m[1] * m[d] > 0.0)
        && (d < 3 || det_and_inverse(3, m).0 > 0.0)
}

impl SchrodingerProblem {
    /// `metric_perturbation(x)` returns `g̃(x)` as a row-major `d×d` block,
    /// `potential(x)` returns `V(x)`.
    pub fn new<G, V>(grid: Grid, metric_perturbation: G, potential: V, epsilon: f64, tube: TubeGeometry) -> Result<Self>
    where
        G: Fn(&[f64]) -> Vec<f64>,
        V: Fn(&[f64]) -> f64,
    {
        let d = grid.dim();
        let mut metric = Vec::with_capacity(grid.len() * d * d);
        let mut pot = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.node(i);
            let gt = metric_perturbation(&x[..d]);
            if gt.len() != d * d {
                return Err(Error::InvalidParameter(format!(
                    "metric perturbation must have {} entries, got {}",
                    d * d,
                    gt.len()
                )));
            }
            for a in 0..d {
                for b in 0..d {
                    metric.push(gt[a * d + b] + if a == b { 1.0 } else { 0.0 });
                }
            }
            pot.push(potential(&x[..d]));
        }
        Self::from_samples(grid, metric, pot, epsilon, tube)
    }

    pub fn from_samples(
        grid: Grid,
        metric: Vec<f64>,
        potential: Vec<f64>,
        epsilon: f64,
        tube: TubeGeometry,
    ) -> Result<Self> {
        let d = grid.dim();
        if metric.len() != grid.len() * d * d {
            return Err(Error::FieldLength {
                expected: grid.len() * d * d,
                got: metric.len(),
            });
        }
        if potential.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: potential.len(),
            });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decay exponent must lie in (0, 1), got {epsilon}"
            )));
        }
        let mut inverse_metric = Vec::with_capacity(metric.len());
        let mut sqrt_det = Vec::with_capacity(grid.len());
        for (node, block) in metric.chunks(d * d).enumerate() {
            if !is_positive_definite(d, block) {
                return Err(Error::MetricNotPositive { node });
            }
            let (det, inv) = det_and_inverse(d, block);
            inverse_metric.extend(inv);
            sqrt_det.push(det.sqrt());
        }
        Ok(Self {
            grid,
            metric,
            inverse_metric,
            sqrt_det,
            potential,
            epsilon,
            tube,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `g(x)` at a node, row-major.
    pub fn metric_at(&self, node: usize) -> &[f64] {
        let d2 = self.dim() * self.dim();
        &self.metric[node * d2..(node + 1) * d2]
    }

    /// `g^{-1}(x)` at a node, row-major.
    pub fn inverse_metric_at(&self, node: usize) -> &[f64] {
        let d2 = self.dim() * self.dim();
        &self.inverse_metric[node * d2..(node + 1) * d2]
    }

    /// `√det g`, the density of the natural measure.
    pub fn weight(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tube(&self) -> &TubeGeometry {
        &self.tube
    }

    pub fn is_flat(&self) -> bool {
        let d = self.dim();
        self.potential.iter().all(|&v| v == 0.0)
            && self
                .metric
                .chunks(d * d)
                .all(|b| (0..d).all(|i| (0..d).all(|j| b[i * d + j] == if i == j { 1.0 } else { 0.0 })))
    }

    /// `E_0 = max(0, -min V) + 1`: every eigenvalue must be `>= -E_0`.
    pub fn energy_floor(&self) -> f64 {
        let vmin = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        (-vmin).max(0.0) + 1.0
    }

    /// SHA-256 over the grid parameters and every sampled coefficient.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.grid.dim() as u64).to_le_bytes());
        h.update(self.grid.length().to_le_bytes());
        h.update((self.grid.points() as u64).to_le_bytes());
        for v in self.metric.iter().chain(&self.potential) {
            h.update(v.to_le_bytes());
        }
        h.update(self.epsilon.to_le_bytes());
        h.update(self.tube.half_width().to_le_bytes());
        h.finalize().into()
    }
}

/// Named problem presets. Perturbations are centered at the box center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `g = Id`, `V = 0`.
    Flat,
    /// `g̃ = A e^{-|x-c|²} Id`.
    GaussianMetric { amplitude: f64 },
    /// `g̃ = A (1 + |x-c|²)^{-1/2} Id`.
    AlgebraicMetric { amplitude: f64 },
    /// `V = -2 sech²(|x-c|)` with a flat metric; in 1D the single bound
    /// state sits at energy -1.
    PoschlTeller,
}

impl Preset {
    pub fn build(self, grid: Grid, epsilon: f64, tube: TubeGeometry) -> Result<SchrodingerProblem> {
        let d = grid.dim();
        let c = grid.center();
        let r2 = move |x: &[f64]| -> f64 { (0..d).map(|a| (x[a] - c[a]).powi(2)).sum() };
        let scaled_identity = move |s: f64| -> Vec<f64> {
            let mut m = vec![0.0; d * d];
            (0..d).for_each(|a| m[a * d + a] = s);
            m
        };
        match self {
            Preset::Flat => SchrodingerProblem::new(grid, |_| scaled_identity(0.0), |_| 0.0, epsilon, tube),
            Preset::GaussianMetric { amplitude } => SchrodingerProblem::new(
                grid,
                |x| scaled_identity(amplitude * (-r2(x)).exp()),
                |_| 0.0,
                epsilon,
                tube,
            ),
            Preset::AlgebraicMetric { amplitude } => SchrodingerProblem::new(
                grid,
                |x| scaled_identity(amplitude / (1.0 + r2(x)).sqrt()),
                |_| 0.0,
                epsilon,
                tube,
            ),
            Preset::PoschlTeller => SchrodingerProblem::new(
                grid,
                |_| scaled_identity(0.0),
                |x| {
                    let s = 1.0 / r2(x).sqrt().cosh();
                    -2.0 * s * s
                },
                epsilon,
                tube,
            ),
        }
    }
}
