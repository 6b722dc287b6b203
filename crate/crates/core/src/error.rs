use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{function} is undefined at x = {x}")]
    Domain { function: &'static str, x: f64 },

    #[error("shape does not fit strictly inside [-{half_width}, {half_width}]^2")]
    ShapeOutOfBounds { half_width: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("fixed-point iteration does not contract after {sweeps} sweeps (last relative increment {last:.3e})")]
    NoContraction {
        sweeps: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("contrast violates its invariants: {0}")]
    InvariantViolation(String),

    #[error("{nodes} quadrature nodes cannot resolve {modes} Fourier modes without aliasing")]
    Aliasing { nodes: usize, modes: usize },

    #[error("|<g, phi_z>| = {value:.3e} is below the floor {floor:.3e}")]
    DegenerateDenominator { value: f64, floor: f64 },

    #[error("every global-search candidate hit the denominator floor")]
    AllDegenerate,
}
