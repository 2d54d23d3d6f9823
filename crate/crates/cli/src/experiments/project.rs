//! Spectral decomposition, projector and Poisson algebra, and the
//! short/long-range splitting of the operator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use uncplab_core::field::{weighted_inner_product, weighted_norm};
use uncplab_core::schrodinger::{
    decompose_problem, flat_project, poisson, project, split_perturbation, write_eigen_csv, Branch, DecayFit,
    RESIDUAL_TOL, THRESHOLD_TOL,
};
use uncplab_core::{Field, Grid};

use crate::run::{self, ascending, non_negative, At, Failure, Run};

#[derive(Serialize)]
struct Splitting {
    short_range_constant: f64,
    long_range_constant: f64,
    reconstruction_defect: f64,
    pass: bool,
    short_range_fits: Vec<DecayFit>,
    long_range_fits: Vec<DecayFit>,
}

#[derive(Serialize)]
struct Report {
    problem_hash: String,
    modes: usize,
    thresholds: Vec<f64>,
    ranks: Vec<usize>,
    max_residual: f64,
    orthonormality_defect: f64,
    fields: usize,
    algebra_defect: f64,
    flat_equivalence_defect: Option<f64>,
    splitting: Option<Splitting>,
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Field::new(grid, values).expect("length matches grid")
}

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let section = cfg.raw.project.clone().unwrap_or_default();
    let grid = run::grid(cfg)?;
    let problem = run::problem(cfg, grid)?;
    let thresholds = ascending(
        cfg,
        "project",
        "thresholds",
        section.thresholds.unwrap_or(vec![0.5, 2.0, 10.0]),
        1,
    )?;
    let times = section.poisson_times.unwrap_or(vec![0.0, 0.3, 1.0]);
    for &t in &times {
        non_negative(cfg, "project", "poisson_times", t)?;
    }
    let fields = section.fields.unwrap_or(10);
    if fields == 0 {
        return Err(cfg.error(Some("project"), "fields", "must be at least 1").into());
    }
    if grid.len() > 4096 {
        return Err(cfg
            .error(
                Some("grid"),
                "points",
                format!("dense eigensolve of {} nodes is too large", grid.len()),
            )
            .into());
    }

    run.log(format!("decomposing {} nodes", grid.len()));
    let dec = decompose_problem(&problem).at(cfg, "problem", "preset")?;
    let mut csv = Vec::new();
    write_eigen_csv(&dec, Some(&run.hash_comment()), &mut csv).map_err(|e| Failure::Runtime(e.to_string()))?;
    run.write("eigenvalues.csv", &csv)?;

    let max_residual = dec.residuals().iter().copied().fold(0.0, f64::max);
    let tol = run.tol;
    run.check(
        "eigen residuals",
        max_residual <= RESIDUAL_TOL,
        format!("max residual {max_residual:.3e}"),
    );
    let ortho = dec.orthonormality_defect();
    run.check(
        "orthonormality",
        ortho <= tol.orthonormality,
        format!("Gram defect {ortho:.3e}"),
    );

    let w = Some(dec.weight());
    let norm = |f: &Field| weighted_norm(f, w).expect("grids match");
    let dist = |a: &Field, b: &Field| norm(&a.sub(b).expect("grids match"));
    let fail = |e: uncplab_core::Error| Failure::Runtime(e.to_string());
    let negative: Vec<usize> = (0..dec.len()).filter(|&j| dec.eigenvalues()[j] < 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed());
    let mut worst: f64 = 0.0;
    for _ in 0..fields {
        let f = random_field(grid, &mut rng);
        let g = random_field(grid, &mut rng);
        let nf = norm(&f);
        for (i, &lambda) in thresholds.iter().enumerate() {
            let pf = project(&dec, lambda, &f).map_err(fail)?;
            worst = worst.max(dist(&project(&dec, lambda, &pf).map_err(fail)?, &pf) / nf);
            let other = thresholds[(i + 1) % thresholds.len()];
            let composed = project(&dec, other, &pf).map_err(fail)?;
            worst = worst.max(dist(&composed, &project(&dec, lambda.min(other), &f).map_err(fail)?) / nf);
            let pg = project(&dec, lambda, &g).map_err(fail)?;
            let lhs = weighted_inner_product(&pf, &g, w).map_err(fail)?;
            let rhs = weighted_inner_product(&f, &pg, w).map_err(fail)?;
            worst = worst.max((lhs - rhs).norm() / (nf * norm(&g)));
        }
        worst = worst.max(dist(&poisson(&dec, 0.0, Branch::Plus, &f).map_err(fail)?, &f) / nf);
        let before = dec.coefficients(&f).map_err(fail)?;
        for branch in [Branch::Plus, Branch::Minus] {
            for &s in &times {
                for &t in &times {
                    let st = poisson(&dec, s, branch, &poisson(&dec, t, branch, &f).map_err(fail)?).map_err(fail)?;
                    let direct = poisson(&dec, s + t, branch, &f).map_err(fail)?;
                    worst = worst.max(dist(&st, &direct) / nf);
                    let after = dec.coefficients(&direct).map_err(fail)?;
                    for &j in &negative {
                        worst = worst.max((after[j].norm() - before[j].norm()).abs() / nf);
                    }
                }
            }
        }
    }
    run.check(
        "projector and Poisson algebra",
        worst <= tol.projector,
        format!("{fields} fields, largest relative defect {worst:.3e}"),
    );

    let flat_equivalence_defect = if problem.is_flat() {
        let mut levels: Vec<f64> = (0..grid.len()).map(|i| grid.xi_norm(i).powi(2)).collect();
        levels.sort_by(f64::total_cmp);
        let mut rng = ChaCha8Rng::seed_from_u64(run.seed().wrapping_add(1));
        let mut defect: f64 = 0.0;
        for &lambda in thresholds.iter().filter(|&&l| l > 0.0) {
            let cut = lambda - THRESHOLD_TOL * lambda.abs().max(1.0);
            let Some(&level) = levels.iter().rev().find(|&&s| s < cut) else {
                continue;
            };
            let f = random_field(grid, &mut rng);
            let a = flat_project(&grid, level.sqrt(), &f).map_err(fail)?;
            let b = project(&dec, lambda, &f).map_err(fail)?;
            defect = defect.max(a.sub(&b).map_err(fail)?.norm() / f.norm());
        }
        run.check(
            "flat projector equivalence",
            defect <= tol.projector,
            format!("largest relative difference {defect:.3e}"),
        );
        Some(defect)
    } else {
        None
    };

    let splitting = if section.perturbation.unwrap_or(true) {
        run.log("splitting the operator");
        let rep = split_perturbation(&problem);
        run.check(
            "short/long-range decay",
            rep.pass(),
            format!(
                "C_S = {:.4e}, C_L = {:.4e}",
                rep.short_range_constant(),
                rep.long_range_constant()
            ),
        );
        run.check(
            "splitting reconstruction",
            rep.reconstruction_defect <= 1e-8,
            format!("relative defect {:.3e}", rep.reconstruction_defect),
        );
        Some(Splitting {
            short_range_constant: rep.short_range_constant(),
            long_range_constant: rep.long_range_constant(),
            reconstruction_defect: rep.reconstruction_defect,
            pass: rep.pass(),
            short_range_fits: rep.short_range_fits,
            long_range_fits: rep.long_range_fits,
        })
    } else {
        None
    };

    run.record("modes", dec.len())?;
    run.record("algebra_defect", worst)?;
    let report = Report {
        problem_hash: run::hex_hash(problem.content_hash()),
        modes: dec.len(),
        ranks: thresholds.iter().map(|&l| dec.count_below(l)).collect(),
        thresholds,
        max_residual,
        orthonormality_defect: ortho,
        fields,
        algebra_defect: worst,
        flat_equivalence_defect,
        splitting,
    };
    run.write_json("project.json", &report)
}
