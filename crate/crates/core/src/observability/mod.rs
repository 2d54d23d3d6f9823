//! Observability constants `c(μ, ω)`, threshold sweeps with exponential-law
//! fits, the Kovrijkine baseline and the end-to-end Poisson pipeline.

mod gram;
mod kovrijkine;
mod pipeline;
mod sweep;

pub use gram::{compressed_gram, ORTHONORMAL_TOL};
pub use kovrijkine::{fit_kovrijkine_k, kovrijkine_bound};
pub use pipeline::{
    pipeline_for_field, theorem_pipeline, PipelineParams, PipelineReport, TubeSteps, RECONSTRUCTION_TOL,
};
pub use sweep::{
    fit_exponential, observability_constant, sweep, ExponentialFit, ObservabilityCurve, RangeSource, SweepMode,
    ENVELOPE_TOL,
};
