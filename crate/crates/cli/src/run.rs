//! Shared plumbing for experiments: resolved settings, checks, artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use uncplab_core::schrodinger::{Preset, SchrodingerProblem};
use uncplab_core::thick::{generate_set, SetParams, ThickSet};
use uncplab_core::{Error, Grid, TubeGeometry};

use crate::config::{Config, ConfigError, ProblemPreset, SetKind};

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration, exit status 2.
    Config(ConfigError),
    /// A numerical check did not hold, exit status 1.
    Checks(Vec<String>),
    /// Anything else that went wrong while running, exit status 1.
    Runtime(String),
}

impl Failure {
    pub fn status(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Checks(_) | Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Checks(names) => {
                for (i, n) in names.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "check failed: {n}")?;
                }
                Ok(())
            }
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Core errors caused by the requested parameters are configuration errors.
pub fn at(cfg: &Config, section: &str, key: &str, e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidGrid(_)
        | Error::RankZero
        | Error::EmptySet
        | Error::RadiusBelowResolution { .. }
        | Error::MultiplierOverflow { .. }
        | Error::OutsideDomain(_) => Failure::Config(cfg.error(Some(section), key, e.to_string())),
        other => Failure::Runtime(other.to_string()),
    }
}

pub trait At<T> {
    fn at(self, cfg: &Config, section: &str, key: &str) -> Result<T, Failure>;
}

impl<T> At<T> for uncplab_core::Result<T> {
    fn at(self, cfg: &Config, section: &str, key: &str) -> Result<T, Failure> {
        self.map_err(|e| at(cfg, section, key, e))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    config_sha256: &'a str,
    seed: u64,
    artifacts: &'a [Artifact],
    results: &'a BTreeMap<String, serde_json::Value>,
    checks: &'a [Check],
    pass: bool,
}

/// State of one experiment run.
pub struct Run<'a> {
    pub cfg: &'a Config,
    pub hash: String,
    pub tol: Tolerances,
    out: PathBuf,
    verbose: bool,
    checks: Vec<Check>,
    artifacts: Vec<Artifact>,
    results: BTreeMap<String, serde_json::Value>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a Config, out: &Path, verbose: bool) -> Result<Self, Failure> {
        let tol = Tolerances::resolve(cfg)?;
        fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            cfg,
            hash: cfg.hash(),
            tol,
            out: out.to_path_buf(),
            verbose,
            checks: Vec::new(),
            artifacts: Vec::new(),
            results: BTreeMap::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{}] {}", self.cfg.experiment.name(), msg.as_ref());
        }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.log(format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    /// Headline number reported in `summary.json`.
    pub fn record<T: Serialize>(&mut self, key: &str, value: T) -> Result<(), Failure> {
        self.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Comment line carrying the configuration hash.
    pub fn hash_comment(&self) -> String {
        format!("config_sha256={}", self.hash)
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.out.join(file);
        fs::write(&path, bytes).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        self.artifacts.push(Artifact {
            file: file.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Pretty JSON with `config_sha256` and `seed` added at the top level.
    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), Failure> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_sha256".into(), self.hash.clone().into());
            map.insert("seed".into(), self.seed().into());
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        self.write(file, text.as_bytes())
    }

    /// Write `summary.json` and turn failed checks into a failure.
    pub fn finish(self) -> Result<(), Failure> {
        let pass = self.checks.iter().all(|c| c.pass);
        let summary = Summary {
            experiment: self.cfg.experiment.name(),
            config_sha256: &self.hash,
            seed: self.seed(),
            artifacts: &self.artifacts,
            results: &self.results,
            checks: &self.checks,
            pass,
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        let path = self.out.join("summary.json");
        fs::write(&path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        if pass {
            Ok(())
        } else {
            Err(Failure::Checks(
                self.checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{}: {}", c.name, c.detail))
                    .collect(),
            ))
        }
    }
}

/// Tolerances, each overridable in `[tolerances]`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub projector: f64,
    pub reconstruction: f64,
    pub envelope: f64,
    pub orthonormality: f64,
    pub carleman: f64,
}

impl Tolerances {
    fn resolve(cfg: &Config) -> Result<Self, Failure> {
        let t = cfg.raw.tolerances.clone().unwrap_or_default();
        let get = |v: Option<f64>, key: &str, default: f64| -> Result<f64, Failure> {
            let v = v.unwrap_or(default);
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg
                    .error(Some("tolerances"), key, format!("must be positive, got {v}"))
                    .into());
            }
            Ok(v)
        };
        Ok(Self {
            projector: get(t.projector, "projector", 1e-10)?,
            reconstruction: get(t.reconstruction, "reconstruction", 1e-10)?,
            envelope: get(t.envelope, "envelope", 1e-6)?,
            orthonormality: get(t.orthonormality, "orthonormality", 1e-8)?,
            carleman: get(t.carleman, "carleman", 1e-3)?,
        })
    }
}

pub fn positive(cfg: &Config, section: &str, key: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg
            .error(Some(section), key, format!("must be positive and finite, got {v}"))
            .into())
    }
}

pub fn non_negative(cfg: &Config, section: &str, key: &str, v: f64) -> Result<f64, Failure> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg
            .error(Some(section), key, format!("must be non-negative and finite, got {v}"))
            .into())
    }
}

pub fn ascending(cfg: &Config, section: &str, key: &str, v: Vec<f64>, min_len: usize) -> Result<Vec<f64>, Failure> {
    if v.len() < min_len {
        return Err(cfg
            .error(
                Some(section),
                key,
                format!("needs at least {min_len} values, got {}", v.len()),
            )
            .into());
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(cfg.error(Some(section), key, "values must be finite").into());
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg
            .error(Some(section), key, "values must be strictly ascending")
            .into());
    }
    Ok(v)
}

pub fn grid(cfg: &Config) -> Result<Grid, Failure> {
    let g = cfg.raw.grid.clone().unwrap_or_default();
    let dim = g.dim.unwrap_or(1);
    let length = g.length.unwrap_or(16.0);
    let points = g.points.unwrap_or(256);
    if !(1..=3).contains(&dim) {
        return Err(cfg
            .error(Some("grid"), "dim", format!("must be 1, 2 or 3, got {dim}"))
            .into());
    }
    positive(cfg, "grid", "length", length)?;
    Grid::new(dim, length, points).at(cfg, "grid", "points")
}

pub fn tube_half_width(cfg: &Config) -> Result<f64, Failure> {
    let v = cfg.raw.problem.as_ref().and_then(|p| p.tube_half_width).unwrap_or(0.5);
    positive(cfg, "problem", "tube_half_width", v)
}

pub fn problem_preset(cfg: &Config) -> ProblemPreset {
    cfg.raw
        .problem
        .as_ref()
        .and_then(|p| p.preset)
        .unwrap_or(ProblemPreset::Flat)
}

pub fn problem(cfg: &Config, grid: Grid) -> Result<SchrodingerProblem, Failure> {
    let p = cfg.raw.problem.clone().unwrap_or_default();
    let amplitude = p.amplitude.unwrap_or(0.2);
    if !amplitude.is_finite() {
        return Err(cfg.error(Some("problem"), "amplitude", "must be finite").into());
    }
    let epsilon = positive(cfg, "problem", "epsilon", p.epsilon.unwrap_or(0.5))?;
    let preset = match problem_preset(cfg) {
        ProblemPreset::Flat => Preset::Flat,
        ProblemPreset::GaussianMetric => Preset::GaussianMetric { amplitude },
        ProblemPreset::AlgebraicMetric => Preset::AlgebraicMetric { amplitude },
        ProblemPreset::PoschlTeller => Preset::PoschlTeller,
    };
    let tube = TubeGeometry::with_half_width(tube_half_width(cfg)?).at(cfg, "problem", "tube_half_width")?;
    preset.build(grid, epsilon, tube).at(cfg, "problem", "preset")
}

pub fn set_kind(cfg: &Config) -> SetKind {
    cfg.raw.set.as_ref().and_then(|s| s.kind).unwrap_or(SetKind::Periodic)
}

/// Periodic lattice parameters `(γ, a)` when the set is periodic.
pub fn periodic_params(cfg: &Config) -> Result<Option<(f64, f64)>, Failure> {
    if set_kind(cfg) != SetKind::Periodic {
        return Ok(None);
    }
    let s = cfg.raw.set.clone().unwrap_or_default();
    let gamma = s.gamma.unwrap_or(0.5);
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(cfg
            .error(Some("set"), "gamma", format!("must lie in (0, 1], got {gamma}"))
            .into());
    }
    let a = positive(cfg, "set", "a", s.a.unwrap_or(1.0))?;
    Ok(Some((gamma, a)))
}

/// The observation set, with its thickness verified at `set.radius`.
pub fn omega(cfg: &Config, grid: Grid) -> Result<ThickSet, Failure> {
    let s = cfg.raw.set.clone().unwrap_or_default();
    match set_kind(cfg) {
        SetKind::Periodic => {
            let (gamma, a) = periodic_params(cfg)?.expect("periodic set");
            let mut set = generate_set(grid, SetParams::Periodic { gamma, a }).at(cfg, "set", "a")?;
            if let Some(r) = s.radius {
                positive(cfg, "set", "radius", r)?;
                set.verify(r).at(cfg, "set", "radius")?;
            }
            Ok(set)
        }
        SetKind::Random => {
            let density = s.density.unwrap_or(0.5);
            if !(density > 0.0 && density <= 1.0) {
                return Err(cfg
                    .error(Some("set"), "density", format!("must lie in (0, 1], got {density}"))
                    .into());
            }
            let blob_radius = positive(cfg, "set", "blob_radius", s.blob_radius.unwrap_or(0.5))?;
            let radius = positive(cfg, "set", "radius", s.radius.unwrap_or(2.0))?;
            let seed = s.seed.unwrap_or(cfg.seed);
            generate_set(
                grid,
                SetParams::Random {
                    density,
                    seed,
                    blob_radius,
                    radius,
                },
            )
            .at(cfg, "set", "density")
        }
        SetKind::Full => {
            let mut set = ThickSet::full(grid);
            let radius = positive(cfg, "set", "radius", s.radius.unwrap_or(1.0))?;
            set.verify(radius).at(cfg, "set", "radius")?;
            Ok(set)
        }
    }
}

pub fn hex_hash(bytes: [u8; 32]) -> String {
    hex::encode(bytes)
}
