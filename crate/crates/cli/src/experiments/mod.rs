pub mod carleman;
pub mod interp;
pub mod observe;
pub mod pipeline;
mod polynomials;
pub mod project;
pub mod thickness;
