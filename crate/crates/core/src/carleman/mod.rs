//! Green functions of disks, logarithmic potentials, Carleman weights and
//! their constants, and numerical checks of the Carleman and interpolation
//! inequalities.

mod geometry;
mod green;
mod inequality;
mod interior;
mod interpolation;
mod rules;
mod search;
mod weight;

pub use geometry::{intervals_length, CarlemanGeometry, GeometrySummary, Measure, Region};
pub use green::{green_disk, log_disk_integral, log_rect_integral, log_segment_integral, Disk};
pub use inequality::{
    carleman_inequality_check, carleman_interpolation, dbar, holomorphic_norms, interpolation_constant,
    three_term_check, CheckResult, HolomorphicNorms, LaplacianMeasure, MeasurePart, CARLEMAN_TOL,
};
pub use interior::{interior_sup_bound, interior_sup_check, BOUNDARY_SAMPLES};
pub use interpolation::{
    calibrate_exponent, holder_aggregate, interpolate_1d, interpolate_ball, interpolate_tube, length_exponent,
    unit_interval_domain, BallSubset, CellQuantities, ComplexBall, HolderStep, Instance, InterpolationCertificate,
    TubeCertificate, TubeInterpolation,
};
pub use weight::{
    carleman_weight, delta_from_constants, measure_potential, CarlemanConstants, CarlemanWeight, Cutoff, Potentials,
    WeightFields, MIN_QUAD_POINTS, REFINEMENT_TOL,
};
