//! Generate an observation set and measure its thickness at several radii.

use serde::Serialize;
use uncplab_core::thick::{verify_thickness, write_rle_csv};

use crate::config::SetKind;
use crate::run::{self, positive, At, Failure, Run};

#[derive(Serialize)]
struct Report {
    kind: SetKind,
    measure_fraction: f64,
    radii: Vec<f64>,
    deltas: Vec<f64>,
    geometry_hash: String,
}

pub fn run(run: &mut Run) -> Result<(), Failure> {
    let cfg = run.cfg;
    let grid = run::grid(cfg)?;
    let radii = cfg
        .raw
        .thickness
        .as_ref()
        .and_then(|t| t.radii.clone())
        .unwrap_or(vec![1.0, 2.0, 4.0]);
    if radii.is_empty() {
        return Err(cfg
            .error(Some("thickness"), "radii", "needs at least one radius")
            .into());
    }
    for &r in &radii {
        positive(cfg, "thickness", "radii", r)?;
    }
    let omega = run::omega(cfg, grid)?;
    let mut deltas = Vec::with_capacity(radii.len());
    for &r in &radii {
        deltas.push(verify_thickness(&omega, r).at(cfg, "thickness", "radii")?);
    }

    let mut csv = format!("# {}\nradius,delta\n", run.hash_comment());
    for (r, d) in radii.iter().zip(&deltas) {
        csv.push_str(&format!("{r},{d}\n"));
    }
    run.write("thickness.csv", csv.as_bytes())?;
    if grid.dim() == 1 {
        let mut rle = Vec::new();
        write_rle_csv(&omega, &mut rle).map_err(|e| Failure::Runtime(e.to_string()))?;
        run.write("set.csv", &rle)?;
    }

    let kind = run::set_kind(cfg);
    let thick = deltas.iter().all(|&d| d > 0.0 && d <= 1.0);
    run.check("thickness positive", thick, format!("delta over radii: {deltas:?}"));
    if kind == SetKind::Full {
        let exact = deltas.iter().all(|&d| d == 1.0);
        run.check("full set has delta 1", exact, format!("{deltas:?}"));
    }
    if let Some((gamma, a)) = run::periodic_params(cfg)? {
        let frac = omega.measure() / grid.volume();
        let tol = 2.0 * grid.dim() as f64 * grid.spacing() / a;
        run.check(
            "periodic density",
            (frac - gamma).abs() <= tol,
            format!("measure fraction {frac:.6} against gamma = {gamma}"),
        );
    }
    run.record("radii", &radii)?;
    run.record("delta", &deltas)?;
    let report = Report {
        kind,
        measure_fraction: omega.measure() / grid.volume(),
        radii,
        deltas,
        geometry_hash: run::hex_hash(omega.content_hash()),
    };
    run.write_json("thickness.json", &report)
}
