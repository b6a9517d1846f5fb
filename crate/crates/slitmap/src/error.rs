//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced while building domains, assembling operators, or solving.
#[derive(Debug, Error)]
pub enum Error {
    /// Node counts must be even and positive for the trapezoidal rule and
    /// the conjugation operator.
    #[error("node count {0} is not an even positive number")]
    OddNodeCount(usize),

    /// A circle or polygon was requested with a non positive size.
    #[error("degenerate boundary curve: {0}")]
    DegenerateCurve(String),

    /// A parametrized curve has a vanishing derivative away from declared
    /// corner points.
    #[error("boundary derivative vanishes at node {index} of component {component}")]
    VanishingDerivative { component: usize, index: usize },

    /// Boundary components must be disjoint, with every inner component
    /// strictly inside the outer one.
    #[error("invalid domain layout: {0}")]
    DomainLayout(String),

    /// The evaluation point lies outside the domain.
    #[error("point ({re}, {im}) is not an interior point")]
    NotInterior { re: f64, im: f64 },

    /// The evaluation point is closer to the boundary than the guard
    /// distance of the discretization.
    #[error("point ({re}, {im}) is within the boundary guard distance {guard}")]
    NearBoundary { re: f64, im: f64, guard: f64 },

    /// Slit angle lists must match the number of inner components and each
    /// angle must be 0 or pi/2.
    #[error("invalid slit specification: {0}")]
    SlitSpec(String),

    /// The branch data for a radial slit failed to close up around a
    /// boundary component.
    #[error("argument unwrap did not close on component {component} (defect {defect:.3e})")]
    UnwrapDefect { component: usize, defect: f64 },

    /// The linear solver failed to converge or the residual certificate
    /// failed.
    #[error("linear solve failed: {0}")]
    Solve(String),

    /// Matrix and right hand side dimensions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The open-up map received a point too close to the slit or the image
    /// point fell within the guard distance of the unit circle.
    #[error("open-up map: {0}")]
    OpenUp(String),

    /// Domain description files that do not parse or violate the schema.
    #[error("domain description: {0}")]
    DomainFile(String),

    /// Closed-form reference values requested outside their domain of
    /// validity.
    #[error("oracle input out of range: {0}")]
    OracleInput(String),

    /// A boundary probe or grid sweep was asked for with unusable
    /// parameters, or collected too few samples to fit a trend.
    #[error("field analysis: {0}")]
    Analysis(String),
}
