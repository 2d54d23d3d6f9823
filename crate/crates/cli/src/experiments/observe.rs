//! Observability sweep: `c(μ)` over thresholds, the exponential-law fit and
//! the Kovrijkine baseline for periodic sets.

use serde::Serialize;
use uncplab_core::observability::{fit_kovrijkine_k, sweep, ExponentialFit, RangeSource, SweepMode};
use uncplab_core::schrodinger::decompose_problem;

use crate::config::{ObserveMode, ProblemPreset};
use crate::run::{self, ascending, At, Failure, Run};

#[derive(Serialize)]
struct Kovrijkine {
    gamma: f64,
    a: f64,
    k: f64,
}

#[derive(Serialize)]
struct FitReport {
    mode: SweepMode,
    thresholds: Vec<f64>,
    c_values: Vec<f64>,
    mode_counts: Vec<usize>,
    fit: ExponentialFit,
    least_squares: ExponentialFit,
    fit_dominates: bool,
    kovrijkine: Option<Kovrijkine>,
    geometry_hash: String,
    problem_hash: Option<String>,
}

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let section = cfg.raw.observe.clone().unwrap_or_default();
    let grid = run::grid(cfg)?;
    let flat_problem = run::problem_preset(cfg) == ProblemPreset::Flat;
    let mode = section.mode.unwrap_or(if flat_problem {
        ObserveMode::Flat
    } else {
        ObserveMode::Energy
    });
    if mode == ObserveMode::Flat && !flat_problem {
        return Err(cfg
            .error(Some("observe"), "mode", "frequency sweeps need the flat problem")
            .into());
    }
    let default_thresholds: Vec<f64> = (1..=8).map(f64::from).collect();
    let thresholds = ascending(
        cfg,
        "observe",
        "thresholds",
        section.thresholds.unwrap_or(default_thresholds),
        3,
    )?;
    let omega = run::omega(cfg, grid)?;

    let decomposition;
    let (source, problem_hash) = match mode {
        ObserveMode::Flat => (RangeSource::Flat(grid), None),
        ObserveMode::Energy => {
            let problem = run::problem(cfg, grid)?;
            run.log(format!("decomposing {} nodes", grid.len()));
            decomposition = decompose_problem(&problem).at(cfg, "problem", "preset")?;
            (
                RangeSource::Spectral(&decomposition),
                Some(run::hex_hash(problem.content_hash())),
            )
        }
    };
    run.log(format!("sweeping {} thresholds", thresholds.len()));
    let curve = sweep(source, &omega, &thresholds).at(cfg, "observe", "thresholds")?;

    let mut csv = Vec::new();
    curve
        .write_csv(&mut csv, Some(&run.hash))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    run.write("sweep.csv", &csv)?;

    let positive = curve.c_values.iter().all(|&c| c > 0.0 && c <= 1.0);
    run.check(
        "c in (0, 1]",
        positive,
        format!(
            "c ranges over [{:.6e}, {:.6e}]",
            curve.c_values.iter().copied().fold(f64::INFINITY, f64::min),
            curve.c_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        ),
    );
    let monotone = curve.c_values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    run.check("c non-increasing in the threshold", monotone, "ranges are nested");
    let dominates = curve.fit_dominates();
    run.check(
        "exponential envelope",
        dominates && curve.fit.residual <= run.tol.envelope,
        format!(
            "A = {:.6}, C = {:.6}, residual {:.3e}",
            curve.fit.amplitude, curve.fit.rate, curve.fit.residual
        ),
    );

    let kovrijkine = match (mode, run::periodic_params(cfg)?) {
        (ObserveMode::Flat, Some((gamma, a))) if grid.dim() == 1 && section.kovrijkine.unwrap_or(true) => {
            let k = fit_kovrijkine_k(&curve, gamma, a).at(cfg, "set", "gamma")?;
            run.check("Kovrijkine constant", k.is_finite(), format!("K = {k:.6}"));
            Some(Kovrijkine { gamma, a, k })
        }
        _ => None,
    };

    run.record("fit_A", curve.fit.amplitude)?;
    run.record("fit_C", curve.fit.rate)?;
    run.record("c_min", curve.c_values.last().copied())?;
    if let Some(k) = &kovrijkine {
        run.record("kovrijkine_K", k.k)?;
    }
    let report = FitReport {
        mode: curve.mode,
        thresholds: curve.mu_values.clone(),
        c_values: curve.c_values.clone(),
        mode_counts: curve.mode_counts.clone(),
        fit: curve.fit,
        least_squares: curve.least_squares,
        fit_dominates: dominates,
        kovrijkine,
        geometry_hash: run::hex_hash(omega.content_hash()),
        problem_hash,
    };
    run.write_json("fit.json", &report)
}
