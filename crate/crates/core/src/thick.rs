//! Thick observation sets.
//!
//! A set `ω` is thick at scale `R` with density `δ` when every ball of
//! radius `R` keeps at least the fraction `δ` of its measure inside `ω`.
//! Balls are Euclidean and discretized by cell-center membership
//! (`|o|·h < R` for integer offsets `o`), and the infimum over centers is
//! taken over grid nodes, so verified densities carry one cell of slack.

use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::Grid;

/// Verified thickness parameters `(R, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Thickness {
    pub radius: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThickSet {
    grid: Grid,
    indicator: Vec<bool>,
    verified: Option<Thickness>,
}

/// Parameters for [`generate_set`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetParams {
    /// Lattice of cubes `Π [k a, k a + s a)` with `s^d = gamma`, so the
    /// density on every period cell is exactly `gamma`. In 1D this is the
    /// union of intervals `[k a, k a + γ a)`.
    Periodic { gamma: f64, a: f64 },
    /// Union of seeded random balls of radius `blob_radius`, grown until
    /// the covered fraction reaches `density`; thickness is verified at
    /// `radius`.
    Random {
        density: f64,
        seed: u64,
        blob_radius: f64,
        radius: f64,
    },
}

impl ThickSet {
    pub fn new(grid: Grid, indicator: Vec<bool>) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: indicator.len(),
            });
        }
        Ok(Self {
            grid,
            indicator,
            verified: None,
        })
    }

    pub fn full(grid: Grid) -> Self {
        Self {
            grid,
            indicator: vec![true; grid.len()],
            verified: None,
        }
    }

    pub fn empty(grid: Grid) -> Self {
        Self {
            grid,
            indicator: vec![false; grid.len()],
            verified: None,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> bool>(grid: Grid, f: F) -> Self {
        let indicator = (0..grid.len()).map(|i| f(&grid.node(i)[..grid.dim()])).collect();
        Self {
            grid,
            indicator,
            verified: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn verified(&self) -> Option<Thickness> {
        self.verified
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    /// `mes(ω) = spacing^d · #cells`.
    pub fn measure(&self) -> f64 {
        self.grid.cell_volume() * self.count() as f64
    }

    pub fn is_subset_of(&self, other: &ThickSet) -> bool {
        self.grid.same_as(&other.grid) && self.indicator.iter().zip(&other.indicator).all(|(&a, &b)| !a || b)
    }

    /// Compute `δ` at radius `R` and record it.
    pub fn verify(&mut self, radius: f64) -> Result<f64> {
        let delta = verify_thickness(self, radius)?;
        self.verified = Some(Thickness { radius, delta });
        Ok(delta)
    }

    /// SHA-256 over the grid parameters and the indicator.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.grid.dim() as u64).to_le_bytes());
        h.update(self.grid.length().to_le_bytes());
        h.update((self.grid.points() as u64).to_le_bytes());
        h.update(self.indicator.iter().map(|&b| b as u8).collect::<Vec<u8>>());
        h.finalize().into()
    }

    /// Cyclic shift by whole cells along each axis.
    pub fn shifted(&self, shift: &[usize]) -> ThickSet {
        let mut out = vec![false; self.indicator.len()];
        for (i, &b) in self.indicator.iter().enumerate() {
            let mut idx = self.grid.unravel(i);
            for (a, s) in shift.iter().enumerate().take(self.grid.dim()) {
                idx[a] = (idx[a] + s) % self.grid.points();
            }
            out[self.grid.ravel(&idx[..self.grid.dim()])] = b;
        }
        ThickSet {
            grid: self.grid,
            indicator: out,
            verified: None,
        }
    }
}

/// Sum over the cyclic window `j - half ..= j + half` for every `j`.
/// Windows wider than the line wrap around several times.
fn cyclic_window_sums(line: &[u32], half: usize) -> Vec<u32> {
    let n = line.len();
    let total: u32 = line.iter().sum();
    let width = 2 * half + 1;
    let full = (width / n) as u32;
    let rem = width % n;
    let mut prefix = vec![0u32; 2 * n + 1];
    for k in 0..2 * n {
        prefix[k + 1] = prefix[k] + line[k % n];
    }
    (0..n)
        .map(|j| {
            let start = (j + n * (half / n + 1) - half) % n;
            full * total + prefix[start + rem] - prefix[start]
        })
        .collect()
}

/// Offsets of the discrete ball decomposed into lines along the last axis:
/// each entry is the offset in the leading axes and the half-length of the
/// line through it.
fn ball_lines(dim: usize, radius_cells: f64) -> Vec<(Vec<i64>, usize)> {
    let r2 = radius_cells * radius_cells;
    let reach = radius_cells.ceil() as i64;
    let mut prefixes: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim - 1 {
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                (-reach..=reach).map(move |o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    prefixes
        .into_iter()
        .filter_map(|p| {
            let base: f64 = p.iter().map(|&o| (o * o) as f64).sum();
            if base >= r2 {
                return None;
            }
            // largest m with base + m² < r2
            let mut m = (r2 - base).sqrt().floor() as i64;
            while m >= 0 && base + (m * m) as f64 >= r2 {
                m -= 1;
            }
            (m >= 0).then_some((p, m as usize))
        })
        .collect()
}

/// `δ = min_x mes(ω ∩ B_R(x)) / mes(B_R(x))` over grid nodes `x`, with
/// periodic wrap.
pub fn verify_thickness(set: &ThickSet, radius: f64) -> Result<f64> {
    let grid = set.grid;
    let h = grid.spacing();
    if !(radius >= 2.0 * h) {
        return Err(Error::RadiusBelowResolution { radius, min: 2.0 * h });
    }
    let n = grid.points();
    let dim = grid.dim();
    let lines = ball_lines(dim, radius / h);
    let ball_count: u64 = lines.iter().map(|(_, m)| (2 * m + 1) as u64).sum();

    let ones: Vec<u32> = set.indicator.iter().map(|&b| b as u32).collect();
    let mut halves: Vec<usize> = lines.iter().map(|(_, m)| *m).collect();
    halves.sort_unstable();
    halves.dedup();
    // window sums along the last axis, one array per distinct half-length
    let windows: Vec<Vec<u32>> = halves
        .par_iter()
        .map(|&m| {
            let mut out = vec![0u32; ones.len()];
            for (chunk, dst) in ones.chunks(n).zip(out.chunks_mut(n)) {
                dst.copy_from_slice(&cyclic_window_sums(chunk, m));
            }
            out
        })
        .collect();
    let line_table: Vec<(Vec<i64>, usize)> = lines
        .iter()
        .map(|(p, m)| (p.clone(), halves.binary_search(m).unwrap()))
        .collect();

    let min_count = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let idx = grid.unravel(i);
            let mut count = 0u64;
            for (prefix, w) in &line_table {
                let mut j = 0usize;
                for a in 0..dim - 1 {
                    let v = (idx[a] as i64 + prefix[a]).rem_euclid(n as i64) as usize;
                    j = j * n + v;
                }
                j = j * n + idx[dim - 1];
                count += windows[*w][j] as u64;
            }
            count
        })
        .min()
        .unwrap_or(0);
    Ok(min_count as f64 / ball_count as f64)
}

/// Build an observation set; the result carries verified thickness.
pub fn generate_set(grid: Grid, params: SetParams) -> Result<ThickSet> {
    match params {
        SetParams::Periodic { gamma, a } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma must lie in (0, 1], got {gamma}"
                )));
            }
            if !(a > 0.0 && a <= grid.length() / 4.0) {
                return Err(Error::InvalidParameter(format!(
                    "period a must lie in (0, L/4], got {a}"
                )));
            }
            let side = gamma.powf(1.0 / grid.dim() as f64);
            let mut set = ThickSet::from_fn(grid, |x| {
                x.iter().all(|&xi| {
                    let t = xi / a;
                    let mut frac = t - t.floor();
                    if 1.0 - frac < 1e-12 {
                        frac = 0.0;
                    }
                    side >= 1.0 || frac < side - 1e-12
                })
            });
            if set.count() == 0 {
                return Err(Error::EmptySet);
            }
            set.verify(a)?;
            Ok(set)
        }
        SetParams::Random {
            density,
            seed,
            blob_radius,
            radius,
        } => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "density must lie in (0, 1], got {density}"
                )));
            }
            if !(blob_radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "blob radius must be positive, got {blob_radius}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = grid.dim();
            let l = grid.length();
            let mut indicator = vec![false; grid.len()];
            let target = (density * grid.len() as f64).ceil() as usize;
            let mut covered = 0usize;
            let max_blobs = 1_000_000;
            let mut blobs = 0;
            while covered < target && blobs < max_blobs {
                let c: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..l)).collect();
                for (i, cell) in indicator.iter_mut().enumerate() {
                    if *cell {
                        continue;
                    }
                    let x = grid.node(i);
                    let d2: f64 = (0..dim)
                        .map(|a| {
                            let mut d = (x[a] - c[a]).abs();
                            if d > 0.5 * l {
                                d = l - d;
                            }
                            d * d
                        })
                        .sum();
                    if d2 < blob_radius * blob_radius {
                        *cell = true;
                        covered += 1;
                    }
                }
                blobs += 1;
            }
            let mut set = ThickSet::new(grid, indicator)?;
            if set.count() == 0 {
                return Err(Error::EmptySet);
            }
            set.verify(radius)?;
            Ok(set)
        }
    }
}

/// Run-length encoded CSV for one-dimensional sets.
///
/// Comment header `# dim,L,N,R,delta` followed by the column line
/// `start,length` and one row per maximal run of cells inside `ω`.
pub fn write_rle_csv<W: Write>(set: &ThickSet, mut out: W) -> Result<()> {
    let g = set.grid;
    if g.dim() != 1 {
        return Err(Error::InvalidParameter(
            "run-length CSV is defined for one-dimensional sets only".into(),
        ));
    }
    let (r, d) = set.verified.map_or((f64::NAN, f64::NAN), |t| (t.radius, t.delta));
    writeln!(out, "# dim,L,N,R,delta")?;
    writeln!(out, "# 1,{:?},{},{:?},{:?}", g.length(), g.points(), r, d)?;
    writeln!(out, "start,length")?;
    let mut i = 0;
    let n = set.indicator.len();
    while i < n {
        if set.indicator[i] {
            let start = i;
            while i < n && set.indicator[i] {
                i += 1;
            }
            writeln!(out, "{start},{}", i - start)?;
        } else {
            i += 1;
        }
    }
    Ok(())
}

pub fn read_rle_csv<R: BufRead>(input: R) -> Result<ThickSet> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("truncated run-length CSV".into()))?
            .map_err(Error::from)
    };
    let _ = next()?;
    let meta = next()?;
    let fields: Vec<&str> = meta.trim_start_matches('#').trim().split(',').collect();
    if fields.len() != 5 {
        return Err(Error::Format(format!("bad header line: {meta}")));
    }
    let parse = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|e| Error::Format(format!("{s}: {e}"))) };
    let grid = Grid::new(1, parse(fields[1])?, parse(fields[2])? as usize)?;
    let (radius, delta) = (parse(fields[3])?, parse(fields[4])?);
    if next()? != "start,length" {
        return Err(Error::Format("missing start,length column line".into()));
    }
    let mut indicator = vec![false; grid.len()];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (s, l) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad run: {line}")))?;
        let s = parse(s)? as usize;
        let l = parse(l)? as usize;
        if s + l > indicator.len() {
            return Err(Error::Format(format!("run {s}+{l} exceeds grid")));
        }
        indicator[s..s + l].iter_mut().for_each(|c| *c = true);
    }
    let mut set = ThickSet::new(grid, indicator)?;
    if radius.is_finite() && delta.is_finite() {
        set.verified = Some(Thickness { radius, delta });
    }
    Ok(set)
}

/// Packed bitmask: little-endian header `dim: u64, L: f64, N: u64, R: f64,
/// δ: f64` (NaN when unverified), then `ceil(N^d / 8)` bytes, cell `i` in
/// bit `i % 8` of byte `i / 8`.
pub fn write_bitmask<W: Write>(set: &ThickSet, mut out: W) -> Result<()> {
    let g = set.grid;
    let (r, d) = set.verified.map_or((f64::NAN, f64::NAN), |t| (t.radius, t.delta));
    out.write_all(&(g.dim() as u64).to_le_bytes())?;
    out.write_all(&g.length().to_le_bytes())?;
    out.write_all(&(g.points() as u64).to_le_bytes())?;
    out.write_all(&r.to_le_bytes())?;
    out.write_all(&d.to_le_bytes())?;
    let mut bytes = vec![0u8; set.indicator.len().div_ceil(8)];
    for (i, &b) in set.indicator.iter().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_bitmask<R: Read>(mut input: R) -> Result<ThickSet> {
    let mut head = [0u8; 40];
    input.read_exact(&mut head)?;
    let word = |k: usize| <[u8; 8]>::try_from(&head[8 * k..8 * k + 8]).unwrap();
    let grid = Grid::new(
        u64::from_le_bytes(word(0)) as usize,
        f64::from_le_bytes(word(1)),
        u64::from_le_bytes(word(2)) as usize,
    )?;
    let radius = f64::from_le_bytes(word(3));
    let delta = f64::from_le_bytes(word(4));
    let mut bytes = vec![0u8; grid.len().div_ceil(8)];
    input.read_exact(&mut bytes)?;
    let indicator = (0..grid.len()).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    let mut set = ThickSet::new(grid, indicator)?;
    if radius.is_finite() && delta.is_finite() {
        set.verified = Some(Thickness { radius, delta });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive oracle: count every cell of every ball directly.
    fn brute_force_delta(set: &ThickSet, radius: f64) -> f64 {
        let g = set.grid();
        let n = g.points() as i64;
        let h = g.spacing();
        let reach = (radius / h).ceil() as i64;
        let dim = g.dim();
        let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..dim {
            offsets = offsets
                .into_iter()
                .flat_map(|p| {
                    (-reach..=reach).map(move |o| {
                        let mut q = p.clone();
                        q.push(o);
                        q
                    })
                })
                .collect();
        }
        offsets.retain(|o| {
            let r2: f64 = o.iter().map(|&v| (v * v) as f64).sum();
            r2.sqrt() * h < radius
        });
        let mut best = f64::INFINITY;
        for i in 0..g.len() {
            let idx = g.unravel(i);
            let hits = offsets
                .iter()
                .filter(|o| {
                    let j: Vec<usize> = (0..dim)
                        .map(|a| (idx[a] as i64 + o[a]).rem_euclid(n) as usize)
                        .collect();
                    set.indicator()[g.ravel(&j)]
                })
                .count();
            best = best.min(hits as f64 / offsets.len() as f64);
        }
        best
    }

    #[test]
    fn full_and_empty_sets() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        assert_eq!(verify_thickness(&ThickSet::full(g), 1.0).unwrap(), 1.0);
        assert_eq!(verify_thickness(&ThickSet::empty(g), 1.0).unwrap(), 0.0);
        let g2 = Grid::new(2, 8.0, 32).unwrap();
        assert_eq!(verify_thickness(&ThickSet::full(g2), 1.3).unwrap(), 1.0);
    }

    #[test]
    fn half_density_intervals() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        let set = ThickSet::from_fn(g, |x| (x[0] - x[0].floor()) < 0.5);
        let delta = verify_thickness(&set, 1.0).unwrap();
        let oracle = brute_force_delta(&set, 1.0);
        assert_eq!(delta, oracle);
        // window of 63 cells over a 32-periodic pattern: 31/63
        assert!((delta - 31.0 / 63.0).abs() < 1e-15);
        assert!((delta - 0.5).abs() <= 2.0 * g.spacing());
    }

    #[test]
    fn radius_below_resolution() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        assert!(matches!(
            verify_thickness(&ThickSet::full(g), 0.04),
            Err(Error::RadiusBelowResolution { .. })
        ));
    }

    #[test]
    fn generated_periodic_sets() {
        let g = Grid::new(1, 16.0, 512).unwrap();
        let full = generate_set(g, SetParams::Periodic { gamma: 1.0, a: 1.0 }).unwrap();
        assert_eq!(full.count(), g.len());
        assert_eq!(full.verified().unwrap().delta, 1.0);

        let quarter = generate_set(g, SetParams::Periodic { gamma: 0.25, a: 2.0 }).unwrap();
        let t = quarter.verified().unwrap();
        assert_eq!(t.radius, 2.0);
        assert_eq!(t.delta, brute_force_delta(&quarter, 2.0));
        assert!((t.delta - 0.25).abs() <= 2.0 * g.spacing());
        assert!((quarter.measure() - 4.0).abs() < 1e-12);

        assert!(generate_set(g, SetParams::Periodic { gamma: 1.5, a: 1.0 }).is_err());
        assert!(generate_set(g, SetParams::Periodic { gamma: 0.5, a: 5.0 }).is_err());
    }

    #[test]
    fn periodic_cubes_in_two_dimensions() {
        let g = Grid::new(2, 8.0, 32).unwrap();
        let set = generate_set(g, SetParams::Periodic { gamma: 0.25, a: 2.0 }).unwrap();
        assert_eq!(set.count(), g.len() / 4);
        let t = set.verified().unwrap();
        assert_eq!(t.delta, brute_force_delta(&set, 2.0));
    }

    #[test]
    fn random_sets_are_deterministic() {
        let g = Grid::new(2, 8.0, 32).unwrap();
        let p = SetParams::Random {
            density: 0.3,
            seed: 7,
            blob_radius: 0.5,
            radius: 2.0,
        };
        let a = generate_set(g, p).unwrap();
        let b = generate_set(g, p).unwrap();
        assert_eq!(a, b);
        assert!(a.count() as f64 >= 0.3 * g.len() as f64);
        assert_eq!(a.verified().unwrap().delta, brute_force_delta(&a, 2.0));
    }

    #[test]
    fn large_radius_wraps() {
        let g = Grid::new(1, 4.0, 16).unwrap();
        let set = ThickSet::from_fn(g, |x| x[0] < 1.0);
        // ball wider than the box: counts wrap consistently
        let d = verify_thickness(&set, 3.0).unwrap();
        assert_eq!(d, brute_force_delta(&set, 3.0));
    }

    #[test]
    fn periodic_density_approaches_gamma() {
        // continuous bound: a window of length 2R holds floor(2R/a) periods
        let g = Grid::new(1, 32.0, 1024).unwrap();
        let set = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 1.0 }).unwrap();
        let mut last = 0.0;
        for k in 2..12 {
            let r = 0.5 * k as f64;
            let d = verify_thickness(&set, r).unwrap();
            assert!(d >= 0.5 * (1.0 - 1.0 / (2.0 * r)) - 2.0 * g.spacing());
            // along half-period multiples the density is non-decreasing
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn file_formats_round_trip() {
        let g = Grid::new(1, 16.0, 128).unwrap();
        let set = generate_set(g, SetParams::Periodic { gamma: 0.5, a: 2.0 }).unwrap();
        let mut buf = Vec::new();
        write_rle_csv(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(3), Some("0,8"));
        assert_eq!(read_rle_csv(&buf[..]).unwrap(), set);

        let g2 = Grid::new(2, 8.0, 16).unwrap();
        let set2 = generate_set(g2, SetParams::Periodic { gamma: 0.25, a: 2.0 }).unwrap();
        let mut bin = Vec::new();
        write_bitmask(&set2, &mut bin).unwrap();
        assert_eq!(bin.len(), 40 + 32);
        assert_eq!(read_bitmask(&bin[..]).unwrap(), set2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sliding_window_matches_oracle(bits in proptest::collection::vec(any::<bool>(), 256), r in 0.6f64..3.0) {
            let g = Grid::new(2, 4.0, 16).unwrap();
            let set = ThickSet::new(g, bits).unwrap();
            prop_assert_eq!(verify_thickness(&set, r).unwrap(), brute_force_delta(&set, r));
        }

        #[test]
        fn monotone_in_the_set(bits in proptest::collection::vec(any::<bool>(), 128), extra in proptest::collection::vec(any::<bool>(), 128), r in 0.3f64..2.0) {
            let g = Grid::new(1, 8.0, 128).unwrap();
            let small = ThickSet::new(g, bits.clone()).unwrap();
            let big = ThickSet::new(g, bits.iter().zip(&extra).map(|(a, b)| *a || *b).collect()).unwrap();
            prop_assert!(small.is_subset_of(&big));
            prop_assert!(verify_thickness(&small, r).unwrap() <= verify_thickness(&big, r).unwrap());
        }

        #[test]
        fn translation_invariant(bits in proptest::collection::vec(any::<bool>(), 256), sx in 0usize..16, sy in 0usize..16) {
            let g = Grid::new(2, 4.0, 16).unwrap();
            let set = ThickSet::new(g, bits).unwrap();
            let moved = set.shifted(&[sx, sy]);
            prop_assert_eq!(verify_thickness(&set, 1.1).unwrap(), verify_thickness(&moved, 1.1).unwrap());
        }
    }
}
