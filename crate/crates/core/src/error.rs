use thiserror::Error;

/// Errors produced by the dimer toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimerError {
    #[error("invalid fundamental domain: {0}")]
    InvalidDomain(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("planar embedding is inconsistent: {0}")]
    Embedding(String),
    #[error("patch contains no internal vertex")]
    EmptyPatch,
    #[error("patch is disconnected ({0} components)")]
    DisconnectedPatch(usize),
    #[error("graph has {internal} internal vertices, above the enumeration guard of {limit}")]
    TooLarge { internal: usize, limit: usize },
    #[error("graph admits no dimer cover")]
    NoCover,
    #[error("height integration is inconsistent across edge {edge}")]
    InconsistentChain { edge: usize },
    #[error("graph is not regular: internal valences {0:?}")]
    NotRegular(Vec<usize>),
    #[error("edge {0} touches the boundary")]
    BoundaryEdge(usize),
    #[error("curve is not in general position: {0}")]
    NotGeneralPosition(String),
    #[error("boundary condition cannot be extended: faces {x} and {y} violate the Lipschitz criterion")]
    NotExtendable { x: usize, y: usize },
    #[error("slope ({0}, {1}) lies outside the Newton polygon")]
    OutsidePolygon(f64, f64),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("field is infeasible: triangle {triangle} has gradient outside the Newton polygon")]
    InfeasibleField { triangle: usize },
    #[error("solver did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("unbalanced colors: {white} white vs {black} black")]
    UnbalancedColors { white: usize, black: usize },
}

pub type Result<T> = std::result::Result<T, DimerError>;
