//! Independent numerical oracle: curvature of explicit model metrics from
//! exact jets, Gauss–Legendre integration, and finite-difference second
//! variations along one-parameter families.

pub mod curvature;
pub mod functional;
pub mod jet;
pub mod model;
pub mod quadrature;

use thiserror::Error;

pub use curvature::{CurvatureBundle, InvariantSet, SymmetryResiduals};
pub use functional::{fd_rcheck_pairing, fd_second_variation, functional_value, FdFamily, FdOptions, FdResult};
pub use model::{curvature_at, ChartFactor, ConformalPerturbation, LieGroupModel, MetricModel, ProductSpheres};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("model is not integrable: {0}")]
    NotIntegrable(String),
    #[error("quadrature did not converge with {nodes} nodes")]
    QuadratureNotConverged { nodes: usize },
    #[error("no step met the tolerance: error estimate {error:e} at value {value:e}")]
    StepSelectionFailed { error: f64, value: f64 },
    #[error("base point is not critical: first derivative {first_derivative:e}")]
    NotCritical { first_derivative: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
