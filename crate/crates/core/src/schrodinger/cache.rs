use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{decompose_problem, SchrodingerProblem, SpectralDecomposition};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UNCPEIG\0";
/// Format version of the binary eigen cache.
pub const CACHE_VERSION: u32 = 1;

/// `index,sigma,residual` with an optional leading comment line.
pub fn write_eigen_csv<W: Write>(dec: &SpectralDecomposition, comment: Option<&str>, mut out: W) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "index,sigma,residual")?;
    for (j, (s, r)) in dec.eigenvalues().iter().zip(dec.residuals()).enumerate() {
        writeln!(out, "{j},{s:.17e},{r:.6e}")?;
    }
    Ok(())
}

/// Layout: magic, version (u32), problem hash (32 bytes), mode count
/// (u64), eigenvalues, residuals, eigenvectors column-major. All numbers
/// little-endian.
pub fn store_cache(dec: &SpectralDecomposition, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&CACHE_VERSION.to_le_bytes())?;
    out.write_all(&dec.problem().content_hash())?;
    out.write_all(&(dec.len() as u64).to_le_bytes())?;
    for v in dec
        .eigenvalues()
        .iter()
        .chain(dec.residuals())
        .chain(dec.eigenvectors().as_slice())
    {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("eigen cache is truncated".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Read a cache file for `problem`. Returns `Ok(None)` when the file was
/// written for a different problem or by a different format version.
pub fn read_cache(path: &Path, problem: &SchrodingerProblem) -> Result<Option<SpectralDecomposition>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("eigen cache is truncated".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("not an eigen cache file".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("eigen cache is truncated".into()))?;
    if u32::from_le_bytes(word) != CACHE_VERSION {
        return Ok(None);
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)
        .map_err(|_| Error::Format("eigen cache is truncated".into()))?;
    if hash != problem.content_hash() {
        return Ok(None);
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)
        .map_err(|_| Error::Format("eigen cache is truncated".into()))?;
    let n = u64::from_le_bytes(len) as usize;
    if n != problem.grid().len() {
        return Err(Error::Format(format!(
            "eigen cache holds {n} modes, grid has {}",
            problem.grid().len()
        )));
    }
    let eigenvalues = read_f64s(&mut r, n)?;
    let residuals = read_f64s(&mut r, n)?;
    let vectors = read_f64s(&mut r, n * n)?;
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after eigen cache".into()));
    }
    Ok(Some(SpectralDecomposition::from_parts(
        problem.clone(),
        eigenvalues,
        DMatrix::from_vec(n, n, vectors),
        residuals,
    )))
}

/// Decompose `problem`, reusing `path` when it holds a matching cache and
/// refreshing it otherwise.
pub fn load_cached(problem: &SchrodingerProblem, path: &Path) -> Result<SpectralDecomposition> {
    if path.exists() {
        if let Ok(Some(dec)) = read_cache(path, problem) {
            return Ok(dec);
        }
    }
    let dec = decompose_problem(problem)?;
    store_cache(&dec, path)?;
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid, TubeGeometry};
    use crate::schrodinger::Preset;

    #[test]
    fn cache_round_trip_and_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eig.bin");
        let tube = TubeGeometry::with_half_width(0.5).unwrap();
        let g = Grid::new(1, 8.0, 32).unwrap();
        let p = Preset::GaussianMetric { amplitude: 0.2 }
            .build(g, 0.5, tube.clone())
            .unwrap();
        let dec = load_cached(&p, &path).unwrap();
        let back = read_cache(&path, &p).unwrap().unwrap();
        assert_eq!(back.eigenvalues(), dec.eigenvalues());
        assert_eq!(back.eigenvectors(), dec.eigenvectors());
        let other = Preset::Flat.build(g, 0.5, tube).unwrap();
        assert!(read_cache(&path, &other).unwrap().is_none());

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_cache(&path, &p), Err(Error::Format(_))));
    }

    #[test]
    fn eigen_csv_layout() {
        let g = Grid::new(1, 6.283185307179586, 8).unwrap();
        let p = Preset::Flat
            .build(g, 0.5, TubeGeometry::with_half_width(0.5).unwrap())
            .unwrap();
        let dec = decompose_problem(&p).unwrap();
        let mut buf = Vec::new();
        write_eigen_csv(&dec, Some("config_sha256: abc"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_sha256: abc");
        assert_eq!(lines[1], "index,sigma,residual");
        assert_eq!(lines.len(), 2 + 8);
        assert!(lines[2].starts_with("0,"));
    }
}
