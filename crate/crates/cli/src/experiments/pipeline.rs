//! End-to-end run from a random element of the projector range to the
//! final spectral inequality.

use uncplab_core::observability::{sweep, theorem_pipeline, PipelineParams, RangeSource};
use uncplab_core::schrodinger::decompose_problem;

use crate::config::ProblemPreset;
use crate::run::{self, ascending, non_negative, positive, At, Failure, Run};

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let s = cfg.raw.pipeline.clone().unwrap_or_default();
    let grid = run::grid(cfg)?;
    let mu = s.mu.unwrap_or(5.0);
    if !mu.is_finite() {
        return Err(cfg.error(Some("pipeline"), "mu", "must be finite").into());
    }
    let s0 = non_negative(cfg, "pipeline", "s0", s.s0.unwrap_or(0.3))?;
    let mut params = PipelineParams::new(mu, s0);
    params.seed = run.seed();
    if let Some(b) = s.branch {
        params.branch = b;
    }
    if let Some(nu) = s.nu {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(cfg
                .error(Some("pipeline"), "nu", format!("must lie in (0, 1), got {nu}"))
                .into());
        }
        params.nu = nu;
    }
    if let Some(r) = s.cell_radius {
        params.cell_radius = positive(cfg, "pipeline", "cell_radius", r)?;
    }
    if let Some(n) = s.nodes {
        params.nodes = n;
    }
    let omega = run::omega(cfg, grid)?;

    let decomposition;
    let source = if run::problem_preset(cfg) == ProblemPreset::Flat {
        RangeSource::Flat(grid)
    } else {
        let problem = run::problem(cfg, grid)?;
        run.log(format!("decomposing {} nodes", grid.len()));
        decomposition = decompose_problem(&problem).at(cfg, "problem", "preset")?;
        RangeSource::Spectral(&decomposition)
    };

    if let Some(thresholds) = s.fit_thresholds.clone() {
        let thresholds = ascending(cfg, "pipeline", "fit_thresholds", thresholds, 3)?;
        run.log(format!(
            "fitting the exponential law on {} thresholds",
            thresholds.len()
        ));
        let curve = sweep(source, &omega, &thresholds).at(cfg, "pipeline", "fit_thresholds")?;
        let mut csv = Vec::new();
        curve
            .write_csv(&mut csv, Some(&run.hash))
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        run.write("sweep.csv", &csv)?;
        params.fit = Some(curve.fit);
    }

    let r = theorem_pipeline(source, &omega, &params).at(cfg, "pipeline", "mu")?;
    let tol = run.tol;
    run.check(
        "reconstruction",
        r.reconstruction_error <= tol.reconstruction,
        format!("relative error {:.3e}", r.reconstruction_error),
    );
    run.check(
        "multiplier bound on h",
        r.h_bound_holds,
        format!(
            "|h| = {:.6e}, |e^(s0 sqrt mu)| |f| = {:.6e}",
            r.norm_h,
            r.multiplier_modulus * r.norm_f
        ),
    );
    if let Some(ratio) = r.tube_bound_ratio {
        run.check(
            "tube integral bound",
            ratio.is_finite() && ratio <= 1.0,
            format!("ratio {ratio:.6}"),
        );
    }
    if let Some(t) = &r.tube {
        run.check(
            "tube interpolation",
            t.interpolation_pass,
            format!(
                "exponent {:.4}, constant {:.4e}",
                t.interpolation_exponent, t.interpolation_constant
            ),
        );
    }
    run.check(
        "final inequality",
        r.final_inequality_margin >= 0.0,
        format!(
            "margin {:.6} with the {} constant",
            r.final_inequality_margin, r.fit_source
        ),
    );
    run.check("pipeline", r.pass, format!("rank {}", r.rank));
    run.record("rank", r.rank)?;
    run.record("reconstruction_error", r.reconstruction_error)?;
    run.record("final_inequality_margin", r.final_inequality_margin)?;
    run.write_json("pipeline.json", &r)
}
