//! Experiment configuration: a TOML document with one table per concern.
//!
//! The user document is parsed strictly (unknown keys and unknown preset
//! names are errors), layered over an optional named experiment preset,
//! then resolved against built-in defaults.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Table;
use uncplab_core::schrodinger::Branch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Project,
    Observe,
    Carleman,
    Interp,
    Pipeline,
    Thickness,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Project => "project",
            Experiment::Observe => "observe",
            Experiment::Carleman => "carleman",
            Experiment::Interp => "interp",
            Experiment::Pipeline => "pipeline",
            Experiment::Thickness => "thickness",
        }
    }
}

/// Named bundles of settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentPreset {
    #[serde(rename = "flat-1d-thick-half")]
    Flat1dThickHalf,
    PoschlTellerBoundState,
    ProjectPoschlTeller,
    #[serde(rename = "pipeline-flat-1d")]
    PipelineFlat1d,
    CarlemanUnitInterval,
    InterpPolynomials,
    ThicknessPeriodicHalf,
}

impl ExperimentPreset {
    fn document(self) -> &'static str {
        match self {
            ExperimentPreset::Flat1dThickHalf => {
                r#"
                experiment = "observe"
                [grid]
                dim = 1
                length = 16.0
                points = 1024
                [problem]
                preset = "flat"
                [set]
                kind = "periodic"
                gamma = 0.5
                a = 1.0
                [observe]
                mode = "flat"
                thresholds = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0]
                "#
            }
            ExperimentPreset::PoschlTellerBoundState => {
                r#"
                experiment = "observe"
                [grid]
                dim = 1
                length = 50.26548245743669
                points = 1024
                [problem]
                preset = "poschl-teller"
                [set]
                kind = "periodic"
                gamma = 0.5
                a = 1.0
                [observe]
                mode = "energy"
                thresholds = [-0.85, -0.65, -0.45, -0.25, -0.05]
                "#
            }
            ExperimentPreset::ProjectPoschlTeller => {
                r#"
                experiment = "project"
                [grid]
                dim = 1
                length = 25.132741228718345
                points = 256
                [problem]
                preset = "poschl-teller"
                [project]
                thresholds = [-0.5, 1.0, 10.0]
                poisson_times = [0.0, 0.3, 1.0]
                fields = 10
                "#
            }
            ExperimentPreset::PipelineFlat1d => {
                r#"
                experiment = "pipeline"
                [grid]
                dim = 1
                length = 16.0
                points = 256
                [problem]
                preset = "flat"
                [set]
                kind = "periodic"
                gamma = 0.5
                a = 1.0
                [pipeline]
                mu = 5.0
                s0 = 0.3
                fit_thresholds = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
                "#
            }
            ExperimentPreset::CarlemanUnitInterval => {
                r#"
                experiment = "carleman"
                [carleman]
                geometry = "unit-interval"
                sets = [[0.0, 1.0]]
                "#
            }
            ExperimentPreset::InterpPolynomials => {
                r#"
                experiment = "interp"
                [grid]
                dim = 1
                length = 16.0
                points = 256
                [set]
                kind = "periodic"
                gamma = 0.5
                a = 1.0
                [interp]
                sets = [[[0.0, 1.0]], [[0.0, 0.5]], [[0.0, 0.25], [0.75, 1.0]]]
                degree = 16
                "#
            }
            ExperimentPreset::ThicknessPeriodicHalf => {
                r#"
                experiment = "thickness"
                [grid]
                dim = 1
                length = 16.0
                points = 1024
                [set]
                kind = "periodic"
                gamma = 0.5
                a = 1.0
                [thickness]
                radii = [0.5, 1.0, 2.0, 4.0]
                "#
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemPreset {
    Flat,
    GaussianMetric,
    AlgebraicMetric,
    PoschlTeller,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Periodic,
    Random,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserveMode {
    Flat,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    UnitInterval,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpKind {
    OneDimensional,
    Ball,
    Tube,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    pub length: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub preset: Option<ProblemPreset>,
    pub amplitude: Option<f64>,
    pub epsilon: Option<f64>,
    pub tube_half_width: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSection {
    pub kind: Option<SetKind>,
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub density: Option<f64>,
    pub seed: Option<u64>,
    pub blob_radius: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectSection {
    pub thresholds: Option<Vec<f64>>,
    pub poisson_times: Option<Vec<f64>>,
    pub fields: Option<usize>,
    pub perturbation: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveSection {
    pub mode: Option<ObserveMode>,
    pub thresholds: Option<Vec<f64>>,
    pub kovrijkine: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanSection {
    pub geometry: Option<GeometryKind>,
    pub sets: Option<Vec<[f64; 2]>>,
    pub domain_center: Option<[f64; 2]>,
    pub domain_radius: Option<f64>,
    pub inner_disk: Option<[f64; 3]>,
    pub inner_rectangle: Option<[f64; 4]>,
    pub compact: Option<Vec<[f64; 2]>>,
    pub measure_uniform: Option<Vec<[f64; 2]>>,
    pub measure_atoms: Option<Vec<[f64; 3]>>,
    pub quad_points: Option<usize>,
    pub panels: Option<usize>,
    pub h_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpSection {
    pub kinds: Option<Vec<InterpKind>>,
    pub sets: Option<Vec<Vec<[f64; 2]>>>,
    pub degree: Option<usize>,
    pub random_polynomials: Option<usize>,
    pub quad_points: Option<usize>,
    pub samples: Option<usize>,
    pub ball_margin: Option<f64>,
    pub tube_fields: Option<usize>,
    pub tube_kmax: Option<i64>,
    pub tube_half_width: Option<f64>,
    pub nu: Option<f64>,
    pub cell_radius: Option<f64>,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub mu: Option<f64>,
    pub s0: Option<f64>,
    pub branch: Option<Branch>,
    pub nu: Option<f64>,
    pub cell_radius: Option<f64>,
    pub nodes: Option<usize>,
    pub fit_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessSection {
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub projector: Option<f64>,
    pub reconstruction: Option<f64>,
    pub envelope: Option<f64>,
    pub orthonormality: Option<f64>,
    pub carleman: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub preset: Option<ExperimentPreset>,
    pub seed: Option<u64>,
    pub grid: Option<GridSection>,
    pub problem: Option<ProblemSection>,
    pub set: Option<SetSection>,
    pub project: Option<ProjectSection>,
    pub observe: Option<ObserveSection>,
    pub carleman: Option<CarlemanSection>,
    pub interp: Option<InterpSection>,
    pub pipeline: Option<PipelineSection>,
    pub thickness: Option<ThicknessSection>,
    pub tolerances: Option<Tolerances>,
}

/// A configuration problem tied to a line of the user document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source, self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// The merged configuration together with the user text for locating keys.
#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub experiment: Experiment,
    pub seed: u64,
    source: String,
    text: String,
}

impl Config {
    /// Parse `text` (named `source` in messages) for `experiment`.
    pub fn parse(
        source: &str,
        text: &str,
        experiment: Experiment,
        seed_override: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let user: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            source: source.into(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        let mut cfg = Config {
            raw: RawConfig::default(),
            experiment,
            seed: 0,
            source: source.into(),
            text: text.into(),
        };
        if let Some(e) = user.experiment {
            if e != experiment {
                return Err(cfg.error(
                    None,
                    "experiment",
                    format!(
                        "config is for experiment `{}`, but `{}` was requested",
                        e.name(),
                        experiment.name()
                    ),
                ));
            }
        }
        let mut merged: Table = Table::new();
        if let Some(p) = user.preset {
            let preset: Table = toml::from_str(p.document()).expect("built-in presets parse");
            let preset_exp = preset.get("experiment").and_then(|v| v.as_str()).unwrap_or_default();
            if preset_exp != experiment.name() {
                return Err(cfg.error(
                    None,
                    "preset",
                    format!(
                        "preset belongs to experiment `{preset_exp}`, but `{}` was requested",
                        experiment.name()
                    ),
                ));
            }
            merged = preset;
        }
        let user_table: Table = toml::from_str(text).expect("document parsed above");
        merge(&mut merged, user_table);
        cfg.raw = merged
            .try_into()
            .map_err(|e: toml::de::Error| cfg.error(None, "preset", e.message().to_string()))?;
        cfg.seed = seed_override.or(cfg.raw.seed).unwrap_or(0);
        Ok(cfg)
    }

    pub fn load(path: &Path, experiment: Experiment, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: path.display().to_string(),
            line: 0,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&path.display().to_string(), &text, experiment, seed_override)
    }

    /// Error anchored at `key` in `[section]` of the user document, or at
    /// the preset line when the value came from a preset.
    pub fn error(&self, section: Option<&str>, key: &str, message: impl Into<String>) -> ConfigError {
        let line = locate(&self.text, section, key)
            .or_else(|| section.and_then(|s| locate_header(&self.text, s)))
            .or_else(|| locate(&self.text, None, "preset"))
            .unwrap_or(1);
        let name = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        ConfigError {
            source: self.source.clone(),
            line,
            message: format!("{name}: {}", message.into()),
        }
    }

    /// SHA-256 of the merged configuration with the effective seed.
    pub fn hash(&self) -> String {
        let mut raw = self.raw.clone();
        raw.seed = Some(self.seed);
        raw.experiment = Some(self.experiment);
        let canonical = toml::to_string(&raw).expect("configuration serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn header_name(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix('[')?.split(']').next().map(str::trim)
}

fn locate_header(text: &str, section: &str) -> Option<usize> {
    text.lines()
        .position(|l| header_name(l) == Some(section))
        .map(|i| i + 1)
}

fn locate(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = header_name(line) {
            current = Some(h);
            continue;
        }
        let t = line.trim_start();
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_problem_preset_is_rejected_with_its_line() {
        let text = "seed = 1\n[problem]\npreset = \"wavy\"\n";
        let err = Config::parse("c.toml", text, Experiment::Observe, None).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.to_string().starts_with("c.toml:3: "), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::parse("c.toml", "[grid]\ndim = 1\nsize = 3\n", Experiment::Observe, None).unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn user_values_override_presets() {
        let text = "preset = \"flat-1d-thick-half\"\n[grid]\npoints = 256\n";
        let cfg = Config::parse("c.toml", text, Experiment::Observe, Some(4)).unwrap();
        let grid = cfg.raw.grid.as_ref().unwrap();
        assert_eq!(grid.points, Some(256));
        assert_eq!(grid.length, Some(16.0));
        assert_eq!(cfg.seed, 4);
        let err = cfg.error(Some("grid"), "points", "bad");
        assert_eq!(err.line, 3);
        assert_eq!(cfg.error(Some("grid"), "length", "bad").line, 2);
    }

    #[test]
    fn preset_must_match_the_experiment() {
        let err = Config::parse("c.toml", "preset = \"pipeline-flat-1d\"\n", Experiment::Observe, None).unwrap_err();
        assert_eq!(err.line, 1);
        let err = Config::parse("c.toml", "\nexperiment = \"carleman\"\n", Experiment::Observe, None).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn hash_depends_on_content_and_seed() {
        let a = Config::parse("c", "[grid]\ndim = 1\n", Experiment::Observe, None).unwrap();
        let b = Config::parse("c", "[grid]\ndim   =   1 # same\n", Experiment::Observe, None).unwrap();
        let c = Config::parse("c", "[grid]\ndim = 1\n", Experiment::Observe, Some(3)).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
