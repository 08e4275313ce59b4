//! Stability of quadratic curvature functionals at products of Einstein
//! manifolds: closed-form Hessians, theorem-level classification, and an
//! independent finite-difference oracle on explicit model metrics.

pub mod cli_reporting;
pub mod geometry_engine;
pub mod spectral_forms;
pub mod stability_classifier;
pub mod verification_harness;
